#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slowfast/metrics.hpp"
#include "slowfast/models.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

/// b-bar(x): integral of b(x, .) against the invariant density at x.
double averaged_drift(const ModelSpec& model, double x);

struct AveragedDiffusion {
  double a_bar = 0.0;
  double sigma_bar = 0.0;
};

/// a-bar(x) = integral of sigma^2(x, .) against the invariant density, and its
/// square root. Throws DegeneracyError when a-bar is not positive, unless
/// `allow_degenerate` is set (then a-bar = sigma-bar = 0 is returned).
AveragedDiffusion averaged_diffusion(const ModelSpec& model, double x, bool allow_degenerate = false);

/// Tabulated averaged coefficients with piecewise-linear interpolation;
/// constant extrapolation beyond the end nodes.
struct AveragedModel {
  std::string source;
  std::vector<double> x_grid;
  std::vector<double> b_bar;
  std::vector<double> a_bar;
  std::vector<double> sigma_bar;
  std::string interpolation = "piecewise-linear";
  StateDomain domain;

  double drift(double x) const;
  double diffusion(double x) const;  // sigma-bar
  double a(double x) const;

  AveragedCoefficients coefficients() const;
};

struct AveragingOptions {
  bool allow_degenerate = false;
  /// Use the closed-form averaged coefficients when the model carries them.
  bool use_analytic = true;
  unsigned workers = 0;
};

/// Node evaluations run in parallel; a failing node aborts with its index
/// and x value in the message.
AveragedModel build_averaged_model(const ModelSpec& model, std::span<const double> x_grid,
                                   const AveragingOptions& options = {});

/// Exact closed-form coefficients when available, otherwise a table on
/// `fallback_grid`.
AveragedCoefficients averaged_coefficients(const ModelSpec& model,
                                           std::span<const double> fallback_grid,
                                           const AveragingOptions& options = {});

struct DiscontinuityProbe {
  double x0 = 0.0;
  std::vector<double> deltas;
  std::vector<double> values;  // averaged drift at x0 + delta
  double value_at_x0 = 0.0;
  double right_limit_estimate = 0.0;
  double gap = 0.0;
};

/// Extrapolates b-bar(x0 + delta) to delta = 0 through the last three points
/// (quadratic in delta) and compares with b-bar(x0).
DiscontinuityProbe discontinuity_probe(const ModelSpec& model, double x0,
                                       std::span<const double> deltas);

struct HolderPair {
  double x1 = 0.0;
  double x2 = 0.0;
  double distance = 0.0;
  double bound = 0.0;
  bool satisfied = true;
};

struct HolderOptions {
  /// Exponent of the power branch; defaults to 2/3 for tv and to
  /// lambda / (lambda + K3) otherwise (which then must be supplied).
  std::optional<double> reference_exponent;
  std::optional<double> lambda;
  std::optional<double> K3;
  /// Crossover kappa: pairs with |dx| >= 2 kappa use the linear branch.
  /// Unknown kappa means the power branch everywhere.
  std::optional<double> kappa;
  /// Constant of the power branch. Defaults to 1 for w1 and wbl, and to the
  /// ceiling of the fitted constant for tv.
  std::optional<double> bound_constant;
  double tolerance = 1e-9;
};

struct HolderFitReport {
  Metric metric = Metric::w1;
  std::string model;
  std::vector<HolderPair> pairs;
  double fitted_exponent = 0.0;
  double fitted_constant = 0.0;
  double r2 = 0.0;
  std::size_t fitted_points = 0;
  double reference_exponent = 0.0;
  double bound_constant = 1.0;
  std::optional<double> kappa;
  bool bound_satisfied = true;
};

double reference_exponent(Metric metric, double lambda, double K3);

/// Distances between invariant densities of the given pairs, a log-log
/// least-squares fit (pairs at zero distance are excluded) and the two-regime
/// bound |dx| 1{|dx| >= 2 kappa} + C |dx|^alpha 1{|dx| < 2 kappa}.
HolderFitReport holder_fit(Metric metric, const ModelSpec& model,
                           std::span<const std::pair<double, double>> pairs,
                           const HolderOptions& options = {});

}  // namespace slowfast
