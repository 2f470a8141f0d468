#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "slowfast/models.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

/// Grid-sampled probability density with its trapezoidal cumulative function.
/// Between grid points the density is piecewise linear; outside the grid it
/// is zero.
struct Density1D {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> cdf;

  /// Normalises `values` by the trapezoidal rule and fills `cdf`. Throws
  /// DomainError for non-increasing grids or negative/non-finite values.
  static Density1D from_unnormalized(std::vector<double> grid, std::vector<double> values);

  /// Samples `fn` on `grid` and normalises.
  static Density1D from_function(std::vector<double> grid, const std::function<double(double)>& fn);

  std::size_t size() const noexcept { return grid.size(); }
  double lower() const { return grid.front(); }
  double upper() const { return grid.back(); }

  double value_at(double y) const noexcept;
  /// Exact integral of the piecewise-linear density up to y.
  double cdf_at(double y) const noexcept;
  /// Inverse of cdf_at for u in [0, 1].
  double quantile(double u) const noexcept;
  /// Trapezoidal integral of the stored values.
  double integral() const noexcept;
};

/// Equally weighted sorted samples.
struct EmpiricalMeasure {
  std::vector<double> samples;

  /// Sorts; throws DomainError on empty input or non-finite values.
  static EmpiricalMeasure from_samples(std::vector<double> samples);

  std::size_t size() const noexcept { return samples.size(); }
};

/// Default number of points of a stationary-density grid.
inline constexpr std::size_t kDefaultGridPoints = 8192;
/// Tail mass left outside a default grid.
inline constexpr double kGridTailMass = 1e-8;
/// Maximal number of domain doublings when searching for the grid extent.
inline constexpr int kMaxDoublings = 20;

/// Phi_x(y) = integral from y_ref to y of 2 f / g^2, with y_ref the domain's
/// lower bound (0 on the full line). Throws DegeneracyError where g vanishes.
double potential(const ModelSpec& model, double x, double y);

/// Phi_x at every grid point, accumulated cell by cell from y_ref.
std::vector<double> potential_on_grid(const ModelSpec& model, double x,
                                      std::span<const double> grid);

/// Support grid for the invariant density at x: the extent is found by
/// doubling until the neglected tail mass is below kGridTailMass, then the
/// points are equidistributed with respect to density^(1/3) plus a uniform
/// floor. Throws NotPositiveRecurrentError if no extent qualifies.
std::vector<double> default_stationary_grid(const ModelSpec& model, double x,
                                            std::size_t points = kDefaultGridPoints);

/// Invariant density of the frozen fast process, proportional to
/// exp(Phi_x) / g^2 and normalised on the grid.
Density1D stationary_density(const ModelSpec& model, double x, std::span<const double> grid);
Density1D stationary_density(const ModelSpec& model, double x);

/// Pools the post-burn-in stored states of simulate_frozen at x.
EmpiricalMeasure empirical_invariant(const ModelSpec& model, double x, const SimConfig& config,
                                     double burn_in);

/// Trapezoidal expectation of fn under d. Throws InfiniteMomentError when the
/// integrand's tail at a grid end decays no faster than 1/|y|.
double expectation(const Density1D& d, const std::function<double(double)>& fn);

double moment(const Density1D& d, int k);
double moment(const EmpiricalMeasure& m, int k);

}  // namespace slowfast
