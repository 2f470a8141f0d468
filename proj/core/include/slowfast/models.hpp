#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

// ---------------------------------------------------------------------------
// State domains
// ---------------------------------------------------------------------------

enum class DomainKind { full_line, half_line_reflecting, interval_reflecting };

/// Per-coordinate state space. Reflecting boundaries use mirror projection.
struct StateDomain {
  DomainKind kind = DomainKind::full_line;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  static StateDomain full_line();
  static StateDomain half_line(double lower);
  static StateDomain interval(double lower, double upper);

  bool contains(double v) const noexcept;
  bool has_lower() const noexcept { return kind != DomainKind::full_line; }
  bool has_upper() const noexcept { return kind == DomainKind::interval_reflecting; }

  /// Mirror projection back into the domain; identity for interior points.
  double reflect(double v) const noexcept;

  /// Lower bound for reflecting domains, 0 on the full line.
  double reference_point() const noexcept;
};

std::string to_string(DomainKind kind);

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

/// out <- field(x, y). Vector fields write dx (or dy) values; matrix fields
/// write a row-major d x d block.
using CoefficientField =
    std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>;

/// b and sigma drive the slow component, f and g the fast one.
struct CoefficientSet {
  CoefficientField b;
  CoefficientField sigma;
  CoefficientField f;
  CoefficientField g;
};

/// Closed-form ground truth for 1-D built-ins.
struct AnalyticTruth {
  std::function<double(double x, double y)> stationary_density;
  std::function<double(double x)> averaged_drift;
  std::function<double(double x)> averaged_diffusion;  // a-bar = E[sigma^2]
};

/// Constants of the slow/fast standing assumptions, when known. An empty
/// field means the corresponding condition does not hold for the model.
struct AssumptionConstants {
  std::optional<double> K1;
  std::optional<double> K2;
  std::optional<double> K3;
  std::optional<double> K4;
  std::optional<double> lambda3;
};

struct ModelSpec {
  std::string name;
  std::size_t dx = 1;
  std::size_t dy = 1;
  CoefficientSet coefficients;
  StateDomain slow_domain;
  StateDomain fast_domain;
  std::optional<AnalyticTruth> analytic;
  std::optional<AssumptionConstants> assumption_constants;
  std::vector<double> default_x0;
  std::vector<double> default_y0;
};

using ScalarField = std::function<double(double x, double y)>;

/// Builds a dx = dy = 1 model from scalar coefficient functions.
ModelSpec make_scalar_model(std::string name, ScalarField b, ScalarField sigma, ScalarField f,
                            ScalarField g, StateDomain slow_domain, StateDomain fast_domain,
                            double x0 = 0.0, double y0 = 0.0);

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// Stable, CLI-visible registry names.
std::vector<std::string> builtin_names();

/// Throws RegistryError listing the valid names on a miss.
ModelSpec get_builtin(const std::string& name);

/// The drift f-tilde of the reflected two-scale example on [0,1] x [0,inf).
double example21_fast_drift(double x, double y) noexcept;

/// Closed-form invariant density x^2 e^{-xy} + (1-x) e^{-y} of the example.
double example21_density(double x, double y) noexcept;

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct CoefficientValues {
  std::vector<double> b;      // dx
  std::vector<double> sigma;  // dx * dx, row-major
  std::vector<double> f;      // dy
  std::vector<double> g;      // dy * dy, row-major
};

/// Evaluates all four coefficients; throws DomainError naming the offending
/// coordinate when (x, y) lies outside the declared domains.
CoefficientValues eval_coefficients(const ModelSpec& model, std::span<const double> x,
                                    std::span<const double> y);

/// Scalar accessors for 1-D models (throw DimensionError otherwise).
double scalar_b(const ModelSpec& model, double x, double y);
double scalar_sigma(const ModelSpec& model, double x, double y);
double scalar_f(const ModelSpec& model, double x, double y);
double scalar_g(const ModelSpec& model, double x, double y);

void require_scalar(const ModelSpec& model, const char* operation);

// ---------------------------------------------------------------------------
// Assumption spot-checks
// ---------------------------------------------------------------------------

enum class ConditionStatus { pass, fail, unbounded_domain_caveat };

std::string to_string(ConditionStatus status);

/// One sampled tuple (x, y, x', y').
struct AssumptionTuple {
  std::vector<double> x1, y1, x2, y2;
};

struct ConditionEntry {
  std::string condition;  // "A1", ..., "B3"
  ConditionStatus status = ConditionStatus::pass;
  double estimated_constant = 0.0;
  /// Witness point(s): the sampled tuple that realises the constant or the
  /// violation, flattened as x1, y1, x2, y2.
  std::vector<double> witness;
  /// Sub-constants for conditions made of several inequality families.
  std::vector<std::pair<std::string, double>> parts;
  std::string note;
};

/// Sampling-based evidence, never proof: a pass only means no sampled tuple
/// violated the inequality.
struct AssumptionReport {
  std::string model;
  std::size_t samples = 0;
  std::vector<ConditionEntry> entries;

  const ConditionEntry& at(const std::string& condition) const;
};

/// Tolerance below which a nondegeneracy infimum is treated as zero.
inline constexpr double kAssumptionTolerance = 1e-9;

AssumptionReport check_assumptions(const ModelSpec& model, std::span<const AssumptionTuple> grid);

/// Uniform random tuples in the box [lo, hi]^4 intersected with the model's
/// domains (coordinates are clamped into reflecting domains). For n >= 8 the
/// last four tuples put (x1, y1) on the corners of that box.
std::vector<AssumptionTuple> random_assumption_grid(const ModelSpec& model, std::size_t n,
                                                    double slow_lo, double slow_hi,
                                                    double fast_lo, double fast_hi,
                                                    std::uint64_t seed);

}  // namespace slowfast
