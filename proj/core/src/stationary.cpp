#include "slowfast/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quadrature.hpp"
#include "slowfast/error.hpp"

namespace slowfast {

// ---------------------------------------------------------------------------
// Density1D / EmpiricalMeasure
// ---------------------------------------------------------------------------

Density1D Density1D::from_unnormalized(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() < 2 || grid.size() != values.size()) {
    throw DomainError("density needs at least two grid points and matching values");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw DomainError("density grid must be strictly increasing");
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("density values must be finite and >= 0");
  }
  Density1D d;
  d.grid = std::move(grid);
  d.values = std::move(values);
  d.cdf.assign(d.grid.size(), 0.0);
  for (std::size_t i = 1; i < d.grid.size(); ++i) {
    d.cdf[i] = d.cdf[i - 1] + 0.5 * (d.values[i] + d.values[i - 1]) * (d.grid[i] - d.grid[i - 1]);
  }
  const double total = d.cdf.back();
  if (!(total > 0.0)) throw DomainError("density has zero mass on its grid");
  for (auto& v : d.values) v /= total;
  for (auto& c : d.cdf) c /= total;
  d.cdf.back() = 1.0;
  return d;
}

Density1D Density1D::from_function(std::vector<double> grid,
                                   const std::function<double(double)>& fn) {
  std::vector<double> values(grid.size());
  std::transform(grid.begin(), grid.end(), values.begin(), fn);
  return from_unnormalized(std::move(grid), std::move(values));
}

double Density1D::value_at(double y) const noexcept {
  if (y < grid.front() || y > grid.back()) return 0.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), y);
  if (it == grid.end()) return values.back();
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (y - grid[i]) / (grid[i + 1] - grid[i]);
  return values[i] + w * (values[i + 1] - values[i]);
}

double Density1D::cdf_at(double y) const noexcept {
  if (y <= grid.front()) return 0.0;
  if (y >= grid.back()) return 1.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), y);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double s = y - grid[i];
  const double slope = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
  return cdf[i] + values[i] * s + 0.5 * slope * s * s;
}

double Density1D::quantile(double u) const noexcept {
  if (u <= 0.0) return grid.front();
  if (u >= 1.0) return grid.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1,
                                              grid.size() - 2);
  const double h = grid[i + 1] - grid[i];
  const double slope = (values[i + 1] - values[i]) / h;
  const double target = u - cdf[i];
  double s;
  if (std::abs(slope) * h < 1e-14 * std::max(values[i], 1e-300)) {
    s = values[i] > 0 ? target / values[i] : 0.0;
  } else {
    // 0.5 slope s^2 + v s - target = 0, stable root.
    const double disc = std::max(0.0, values[i] * values[i] + 2.0 * slope * target);
    s = 2.0 * target / (values[i] + std::sqrt(disc));
  }
  return grid[i] + std::clamp(s, 0.0, h);
}

double Density1D::integral() const noexcept {
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    total += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  }
  return total;
}

EmpiricalMeasure EmpiricalMeasure::from_samples(std::vector<double> samples) {
  if (samples.empty()) throw DomainError("empirical measure needs at least one sample");
  for (double v : samples) {
    if (!std::isfinite(v)) throw DomainError("empirical samples must be finite");
  }
  std::sort(samples.begin(), samples.end());
  return EmpiricalMeasure{std::move(samples)};
}

// ---------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------

namespace {

// 2 f / g^2 at (x, y); the derivative of Phi_x.
double potential_rate(const ModelSpec& model, double x, double y) {
  const double g = scalar_g(model, x, y);
  const double g2 = g * g;
  if (!(g2 > 1e-300) || !std::isfinite(g2)) {
    std::ostringstream msg;
    msg << "fast diffusion g(" << x << ", " << y << ") vanishes; the invariant density is undefined";
    throw DegeneracyError(msg.str());
  }
  return 2.0 * scalar_f(model, x, y) / g2;
}

double log_g2(const ModelSpec& model, double x, double y) {
  const double g = scalar_g(model, x, y);
  return std::log(g * g);
}

double cell_potential(const ModelSpec& model, double x, double a, double b) {
  return detail::integrate_cell([&](double y) { return potential_rate(model, x, y); }, a, b, 1e-12);
}

void check_fast_point(const ModelSpec& model, double y) {
  if (!model.fast_domain.contains(y)) {
    std::ostringstream msg;
    msg << "y = " << y << " lies outside the fast domain";
    throw DomainError(msg.str());
  }
}

}  // namespace

double potential(const ModelSpec& model, double x, double y) {
  require_scalar(model, "potential");
  check_fast_point(model, y);
  const double ref = model.fast_domain.reference_point();
  return detail::integrate([&](double z) { return potential_rate(model, x, z); }, ref, y, 1e-10);
}

std::vector<double> potential_on_grid(const ModelSpec& model, double x,
                                      std::span<const double> grid) {
  require_scalar(model, "potential_on_grid");
  if (grid.empty()) return {};
  for (double y : grid) check_fast_point(model, y);
  const double ref = model.fast_domain.reference_point();
  std::vector<double> phi(grid.size());
  // Start from the grid point closest to the reference, then sweep outwards.
  const auto nearest = static_cast<std::size_t>(
      std::min_element(grid.begin(), grid.end(),
                       [&](double a, double b) { return std::abs(a - ref) < std::abs(b - ref); }) -
      grid.begin());
  phi[nearest] = cell_potential(model, x, ref, grid[nearest]);
  for (std::size_t i = nearest + 1; i < grid.size(); ++i) {
    phi[i] = phi[i - 1] + cell_potential(model, x, grid[i - 1], grid[i]);
  }
  for (std::size_t i = nearest; i-- > 0;) {
    phi[i] = phi[i + 1] - cell_potential(model, x, grid[i], grid[i + 1]);
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Grid construction
// ---------------------------------------------------------------------------

namespace {

// Walks outwards from `anchor` in direction `dir` (+1 / -1) doubling the
// distance until the log speed density has decayed far below the running peak
// and the estimated tail mass is negligible. Returns the endpoint.
double find_extent(const ModelSpec& model, double x, double anchor, int dir, double& peak_logm) {
  double phi = potential(model, x, anchor);
  double prev = anchor;
  double logm_anchor = phi - log_g2(model, x, anchor);
  peak_logm = std::max(peak_logm, logm_anchor);
  for (int k = 0; k <= kMaxDoublings; ++k) {
    const double q = anchor + dir * std::ldexp(1.0, k);
    phi += (dir > 0 ? 1.0 : -1.0) * cell_potential(model, x, std::min(prev, q), std::max(prev, q));
    prev = q;
    const double logm = phi - log_g2(model, x, q);
    peak_logm = std::max(peak_logm, logm);
    const double outward_slope = dir * potential_rate(model, x, q);
    if (outward_slope < 0.0 && logm < peak_logm - 10.0) {
      const double log_tail = logm - std::log(-outward_slope);
      if (log_tail < peak_logm + std::log(kGridTailMass)) return q;
    }
  }
  std::ostringstream msg;
  msg << "invariant density at x = " << x << " is not normalizable: the "
      << (dir > 0 ? "upper" : "lower") << " tail does not decay within 2^" << kMaxDoublings
      << " of the reference point";
  throw NotPositiveRecurrentError(msg.str());
}

}  // namespace

std::vector<double> default_stationary_grid(const ModelSpec& model, double x, std::size_t points) {
  require_scalar(model, "default_stationary_grid");
  if (points < 16) throw ConfigError("stationary grid needs at least 16 points");
  const StateDomain& dom = model.fast_domain;
  const double ref = dom.reference_point();
  double peak = -std::numeric_limits<double>::infinity();
  const double hi = dom.has_upper() ? dom.upper : find_extent(model, x, ref, +1, peak);
  const double lo = dom.has_lower() ? dom.lower : find_extent(model, x, ref, -1, peak);

  // Fine uniform pre-grid to locate where the mass sits.
  const std::size_t pre_n = 8 * points;
  std::vector<double> pre(pre_n + 1);
  for (std::size_t i = 0; i <= pre_n; ++i) {
    pre[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(pre_n);
  }
  pre.back() = hi;
  std::vector<double> logm(pre.size());
  {
    double phi = 0.0;
    logm[0] = -log_g2(model, x, pre[0]);
    for (std::size_t i = 1; i < pre.size(); ++i) {
      phi += detail::gauss15([&](double y) { return potential_rate(model, x, y); }, pre[i - 1],
                             pre[i]);
      logm[i] = phi - log_g2(model, x, pre[i]);
    }
  }
  const double top = *std::max_element(logm.begin(), logm.end());
  // Monitor density^(1/3) balances the trapezoid error h^3 |rho''| across
  // cells; the floor keeps the far tail resolved for CDF-based metrics.
  constexpr double kFloor = 0.02;
  std::vector<double> cum(pre.size(), 0.0);
  auto monitor = [&](std::size_t i) { return std::exp((logm[i] - top) / 3.0) + kFloor; };
  for (std::size_t i = 1; i < pre.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (monitor(i) + monitor(i - 1)) * (pre[i] - pre[i - 1]);
  }
  std::vector<double> grid(points);
  grid.front() = lo;
  grid.back() = hi;
  std::size_t j = 1;
  for (std::size_t k = 1; k + 1 < points; ++k) {
    const double level = cum.back() * static_cast<double>(k) / static_cast<double>(points - 1);
    while (cum[j] < level) ++j;
    const double w = (level - cum[j - 1]) / (cum[j] - cum[j - 1]);
    grid[k] = pre[j - 1] + w * (pre[j] - pre[j - 1]);
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Stationary density
// ---------------------------------------------------------------------------

Density1D stationary_density(const ModelSpec& model, double x, std::span<const double> grid) {
  require_scalar(model, "stationary_density");
  if (grid.size() < 2) throw ConfigError("stationary density needs at least two grid points");
  const auto phi = potential_on_grid(model, x, grid);
  std::vector<double> logm(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) logm[i] = phi[i] - log_g2(model, x, grid[i]);

  // A grid end on an infinite side must sit in a decaying tail; otherwise the
  // density keeps growing under extension and cannot be normalised.
  const StateDomain& dom = model.fast_domain;
  auto check_end = [&](double y, int dir) {
    if (dir > 0 && dom.has_upper()) return;
    if (dir < 0 && dom.has_lower()) return;
    if (dir * potential_rate(model, x, y) >= 0.0) {
      std::ostringstream msg;
      msg << "invariant density at x = " << x << " does not decay at y = " << y
          << "; the process is not positive recurrent on this grid";
      throw NotPositiveRecurrentError(msg.str());
    }
  };
  check_end(grid.back(), +1);
  check_end(grid.front(), -1);

  const double top = *std::max_element(logm.begin(), logm.end());
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = std::exp(logm[i] - top);
  return Density1D::from_unnormalized(std::vector<double>(grid.begin(), grid.end()),
                                      std::move(values));
}

Density1D stationary_density(const ModelSpec& model, double x) {
  const auto grid = default_stationary_grid(model, x);
  return stationary_density(model, x, grid);
}

EmpiricalMeasure empirical_invariant(const ModelSpec& model, double x, const SimConfig& config,
                                     double burn_in) {
  if (!(burn_in > 0.0) || !(burn_in < config.horizon)) {
    throw ConfigError("burn_in must lie in (0, horizon)");
  }
  SimConfig run = config;
  if (run.store == StoreMode::terminal_only) {
    run.store = StoreMode::strided;
    run.stride = 1;
  }
  const double xs[1] = {x};
  const Ensemble ens = simulate_frozen(model, xs, run);
  std::vector<double> pooled;
  std::size_t first = 0;
  while (first < ens.times.size() && ens.times[first] < burn_in - 1e-12) ++first;
  pooled.reserve(ens.n_paths() * (ens.times.size() - first));
  for (std::size_t p = 0; p < ens.n_paths(); ++p) {
    for (std::size_t k = first; k < ens.times.size(); ++k) pooled.push_back(ens.fast(p, k)[0]);
  }
  return EmpiricalMeasure::from_samples(std::move(pooled));
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

namespace {

// Local power-law exponent of |integrand| towards a grid end; exponential
// tails give large negative values, 1/|y| gives -1.
void check_tail(const Density1D& d, const std::vector<double>& integrand, bool upper) {
  const std::size_t n = d.size();
  const double peak = *std::max_element(d.values.begin(), d.values.end());
  const std::size_t end = upper ? n - 1 : 0;
  if (d.values[end] > 1e-3 * peak) return;  // a boundary, not a tail
  // Compare against the point at 80% of the way out.
  const double target = upper ? d.grid[0] + 0.8 * (d.grid[n - 1] - d.grid[0])
                              : d.grid[n - 1] - 0.8 * (d.grid[n - 1] - d.grid[0]);
  const auto it = std::lower_bound(d.grid.begin(), d.grid.end(), target);
  const std::size_t mid = std::min<std::size_t>(static_cast<std::size_t>(it - d.grid.begin()), n - 1);
  const double ye = d.grid[end], ym = d.grid[mid];
  if (ye * ym <= 0.0 || std::abs(ye) < 1.0 || std::abs(ym) < 0.5 || std::abs(ye) <= std::abs(ym)) {
    return;
  }
  const double ie = std::abs(integrand[end]), im = std::abs(integrand[mid]);
  if (ie == 0.0 || im == 0.0) return;
  const double exponent = std::log(ie / im) / std::log(std::abs(ye) / std::abs(ym));
  if (exponent > -1.05) {
    std::ostringstream msg;
    msg << "integrand tail decays like |y|^" << exponent << " near y = " << ye
        << "; the expectation is infinite";
    throw InfiniteMomentError(msg.str());
  }
}

}  // namespace

double expectation(const Density1D& d, const std::function<double(double)>& fn) {
  std::vector<double> integrand(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) integrand[i] = fn(d.grid[i]) * d.values[i];
  check_tail(d, integrand, true);
  check_tail(d, integrand, false);
  double total = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    total += 0.5 * (integrand[i] + integrand[i - 1]) * (d.grid[i] - d.grid[i - 1]);
  }
  if (!std::isfinite(total)) throw InfiniteMomentError("expectation is not finite");
  return total;
}

double moment(const Density1D& d, int k) {
  if (k < 1) throw ConfigError("moment order must be positive");
  return expectation(d, [k](double y) { return std::pow(y, k); });
}

double moment(const EmpiricalMeasure& m, int k) {
  if (k < 1) throw ConfigError("moment order must be positive");
  double total = 0.0;
  for (double v : m.samples) total += std::pow(v, k);
  return total / static_cast<double>(m.size());
}

}  // namespace slowfast
