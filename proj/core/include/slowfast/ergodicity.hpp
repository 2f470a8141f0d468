#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slowfast/models.hpp"
#include "slowfast/simulate.hpp"
#include "slowfast/stationary.hpp"

namespace slowfast {

enum class Verdict { yes, no, inconclusive };

std::string to_string(Verdict v);

/// Thresholds of the doubling test applied to partial integrals.
inline constexpr double kDivergenceCap = 1e6;
inline constexpr double kConvergenceIncrement = 1e-10;
inline constexpr int kClassifyDoublings = 20;

/// One criterion integral on one infinite end of the fast domain.
struct CriterionIntegral {
  std::string name;     // "speed-mass", "recurrence", "exponential", "strong"
  std::string end;      // "upper", "lower" or "bounded"
  Verdict finite = Verdict::inconclusive;
  double log_value = 0.0;  // log of the last partial value (or supremum)
  int doublings = 0;
  std::string note;
};

struct FittedRates {
  std::optional<double> kappa1, lambda1;  // TV decay fit
  std::optional<double> kappa2, lambda2;  // W1 coupling fit
};

struct ErgodicityReport {
  std::string model;
  double x = 0.0;
  Verdict ergodic = Verdict::inconclusive;
  Verdict exp_ergodic = Verdict::inconclusive;
  Verdict strongly_ergodic = Verdict::inconclusive;
  std::vector<CriterionIntegral> integrals;
  FittedRates fitted_rates;
  std::vector<std::string> diagnostics;
};

/// Integral criteria with scale density s = exp(-Phi_x) and speed density
/// m = exp(Phi_x) / g^2 for the 1-D frozen fast process at x.
ErgodicityReport classify(const ModelSpec& model, double x);

struct ExpFit {
  double amplitude = 0.0;
  double rate = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

struct DecayCurve {
  std::vector<double> times;
  std::vector<double> values;
  ExpFit fit;
};

/// Least-squares line through (t, log v) over points with floor < v < ceiling.
/// The rate is clamped at 0 and r^2 into [0, 1].
ExpFit fit_exponential(std::span<const double> times, std::span<const double> values,
                       double ceiling = 1.0, double floor = 1e-12);

/// Grid for forward solves started at y0: the default stationary grid,
/// extended when y0 lies outside it.
std::vector<double> pde_grid(const ModelSpec& model, double x, double y0);

/// Conservative (Scharfetter-Gummel type) finite-volume solution of the
/// forward equation with zero-flux ends. A few implicit Euler start-up steps
/// are followed by TR-BDF2 with steps growing with t. The point start is a
/// Gaussian of width two local cells at y0.
Density1D forward_pde_solve(const ModelSpec& model, double x, double y0, double t,
                            std::span<const double> grid);
std::vector<Density1D> forward_pde_solve(const ModelSpec& model, double x, double y0,
                                         std::span<const double> times,
                                         std::span<const double> grid);
std::vector<Density1D> forward_pde_solve(const ModelSpec& model, double x,
                                         const Density1D& initial, std::span<const double> times);

/// 1 / (spectral gap) of the discretised generator on the grid.
double relaxation_time(const ModelSpec& model, double x, std::span<const double> grid);
double relaxation_time(const ModelSpec& model, double x);

/// TV distance between the forward solution from y0 and the stationary
/// density on the same grid, with an exponential fit over values below 1.
DecayCurve tv_decay_curve(const ModelSpec& model, double x, double y0,
                          std::span<const double> times);
DecayCurve tv_decay_curve(const ModelSpec& model, double x, const Density1D& initial,
                          std::span<const double> times);

/// Mean |Y^y - Y^y'| under synchronous coupling at the requested times
/// (rounded to the config's macro grid). Uses config.dt, n_paths, seed,
/// fast_step_factor and workers; the horizon is set from the last time.
DecayCurve w1_decay_coupling(const ModelSpec& model, double x, double y, double y_prime,
                             std::span<const double> times, const SimConfig& config);

/// Pointwise TV and coupling fits at every x (TV started at y, coupling
/// between y and y_prime); reports the smallest rate and largest amplitude
/// over the probed x. Fits with fewer than two usable points are left empty.
FittedRates estimate_rates(const ModelSpec& model, std::span<const double> xs, double y,
                           double y_prime, std::span<const double> times, const SimConfig& config);

}  // namespace slowfast
