#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "slowfast/models.hpp"

namespace slowfast {

enum class StoreMode { terminal_only, full_paths, strided };

std::string to_string(StoreMode mode);
StoreMode store_mode_from_string(const std::string& text);

/// Largest admissible fast step relative to epsilon (h / epsilon).
inline constexpr double kFastStabilityBound = 0.1;

struct SimConfig {
  double epsilon = 1.0;    // time-scale ratio
  double dt = 1e-2;        // slow (macro) step; storage happens on this grid
  double horizon = 1.0;    // T
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  StoreMode store = StoreMode::terminal_only;
  std::size_t stride = 1;  // macro steps between stored states (strided mode)
  /// Fast grid factor h0: the integration step is h = min(dt, epsilon * h0),
  /// shrunk so that an integer number of fast steps fills each macro step.
  double fast_step_factor = 1e-2;
  std::vector<double> x0;  // empty -> model default
  std::vector<double> y0;  // empty -> model default
  /// Disable the fast dynamics entirely (Y stays at y0): the epsilon = inf surrogate.
  bool freeze_fast = false;
  /// Worker threads; 0 = hardware concurrency. Never affects results.
  unsigned workers = 0;
};

/// Throws ConfigError when the configuration is unusable for the given run kind.
void validate(const SimConfig& config, bool coupled);

/// Number of macro steps (horizon / dt, rounded) and fast sub-steps per macro step.
std::size_t macro_steps(const SimConfig& config);
std::size_t fast_substeps(const SimConfig& config);

struct PathSample {
  std::vector<double> times;
  std::vector<std::vector<double>> slow_states;
  std::vector<std::vector<double>> fast_states;  // empty for averaged runs
};

/// Stored states of many paths, laid out path-major:
/// states[(path * times.size() + k) * (dx + dy) + c].
struct Ensemble {
  SimConfig config;
  std::string model;
  std::size_t dx = 1;
  std::size_t dy = 0;
  std::vector<double> times;
  std::vector<double> states;
  std::vector<std::uint64_t> stream_ids;

  std::size_t n_paths() const noexcept { return stream_ids.size(); }
  std::size_t width() const noexcept { return dx + dy; }
  std::span<const double> state(std::size_t path, std::size_t k) const;
  std::span<const double> slow(std::size_t path, std::size_t k) const;
  std::span<const double> fast(std::size_t path, std::size_t k) const;
  PathSample path(std::size_t index) const;

  /// Component `c` of the slow state at the last stored time, per path.
  std::vector<double> terminal_slow(std::size_t c = 0) const;
  std::vector<double> terminal_fast(std::size_t c = 0) const;
};

/// Euler-Maruyama for the coupled slow-fast system on the fast grid.
Ensemble simulate_coupled(const ModelSpec& model, const SimConfig& config);

/// The fast equation with the slow state frozen at x (epsilon = 1).
Ensemble simulate_frozen(const ModelSpec& model, std::span<const double> x, const SimConfig& config);

/// Coefficients of a 1-D limit equation dX = bbar(X) dt + sigmabar(X) dW.
struct AveragedCoefficients {
  std::string name;
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;  // sigma-bar, not a-bar
  StateDomain domain;
};

/// Euler-Maruyama with step dt. With `paired`, each macro increment is the sum
/// of exactly the fast-grid slow-equation Gaussians that simulate_coupled
/// consumes under the same seed and config, so both runs share W.
Ensemble simulate_averaged(const AveragedCoefficients& avg, const SimConfig& config,
                           bool paired = false);

/// Two frozen fast paths started at y_a and y_b driven by identical Brownian
/// increments. Returns, for every macro step k = 0..n, the Monte Carlo mean
/// of |Y^a - Y^b| (Euclidean norm).
std::vector<double> synchronous_coupling_gaps(const ModelSpec& model, std::span<const double> x,
                                              std::span<const double> y_a,
                                              std::span<const double> y_b, const SimConfig& config);

// Serialisation -------------------------------------------------------------

/// One row per stored state: path_id,t,x_0..,y_0..
void write_csv(std::ostream& out, const Ensemble& ensemble);

/// Flat little-endian binary layout:
///   char[8] magic "SFENSMB1"; u32 dx; u32 dy; u64 n_paths; u64 n_times;
///   f64 times[n_times]; u64 stream_ids[n_paths];
///   f64 states[n_paths * n_times * (dx + dy)]  (path-major).
void write_binary(std::ostream& out, const Ensemble& ensemble);
Ensemble read_binary(std::istream& in);

}  // namespace slowfast
