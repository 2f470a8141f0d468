#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slowfast/models.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

/// |E phi(X_T^eps) - E phi(Xbar_T)| for one bounded test function.
struct FunctionalGap {
  std::string name;
  std::vector<double> gap;             // per epsilon
  std::vector<double> standard_error;  // per epsilon
};

/// Per-block gap between the true fast path and the fast path with the slow
/// state frozen at the block start, on blocks of length eps ln ln(1/eps).
struct BlockDiagnostic {
  double epsilon = 0.0;
  double block = 0.0;
  std::size_t blocks = 0;
  std::size_t paths = 0;
  double mean_gap = 0.0;
  double max_gap = 0.0;
};

struct ConvergenceReport {
  std::string model;
  double horizon = 0.0;
  std::vector<double> epsilons;
  std::vector<double> w1_terminal;
  std::size_t n_paths = 0;
  double noise_floor = 0.0;
  std::uint64_t seed = 0;
  SimConfig config;
  std::vector<FunctionalGap> functionals;
  std::vector<BlockDiagnostic> blocks;
};

struct ConvergenceOptions {
  /// Accept models whose averaged diffusion vanishes (b = sigma = 0 style).
  bool allow_degenerate = false;
  bool functional_battery = false;
  bool block_diagnostic = false;
  std::size_t block_paths = 200;
  /// Nodes for a tabulated averaged model when no closed form exists; empty
  /// picks 81 nodes spanning the slow domain or x0 +- 8.
  std::vector<double> x_grid;
};

/// For every epsilon (infinity = fast dynamics frozen at y0) simulates
/// n_paths coupled paths and compares the terminal slow law with an averaged
/// ensemble. The noise floor is W1 between two independent averaged
/// ensembles of the same size.
ConvergenceReport run_averaging_convergence(const ModelSpec& model, std::span<const double> epsilons,
                                            const SimConfig& config,
                                            const ConvergenceOptions& options = {});

struct L2Report {
  std::string model;
  double horizon = 0.0;
  std::vector<double> epsilons;
  std::vector<double> mean_square_gap;
  std::vector<double> standard_error;
  std::vector<double> relative_error;
  std::vector<double> w1_terminal;
  double predicted_limit = 0.0;
  double noise_floor = 0.0;
  double sigma_bar = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  SimConfig config;
};

struct L2Options {
  /// Replace sigma(y) = y by a constant; the gap should then vanish.
  std::optional<double> constant_sigma;
};

/// Paired runs on pure-fast-l2: X^eps and Xbar share the Brownian motion W.
L2Report run_l2_failure(const SimConfig& config, std::span<const double> epsilons,
                        const L2Options& options = {});

}  // namespace slowfast
