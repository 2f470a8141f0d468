#include "slowfast/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "slowfast/error.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/stationary.hpp"

namespace slowfast {

double averaged_drift(const ModelSpec& model, double x) {
  require_scalar(model, "averaged_drift");
  const Density1D d = stationary_density(model, x);
  return expectation(d, [&](double y) { return scalar_b(model, x, y); });
}

AveragedDiffusion averaged_diffusion(const ModelSpec& model, double x, bool allow_degenerate) {
  require_scalar(model, "averaged_diffusion");
  const Density1D d = stationary_density(model, x);
  const double a = expectation(d, [&](double y) {
    const double s = scalar_sigma(model, x, y);
    return s * s;
  });
  if (!(a > 0.0)) {
    if (allow_degenerate && a >= -1e-300) return {0.0, 0.0};
    std::ostringstream msg;
    msg << "averaged diffusion a-bar(" << x << ") = " << a << " is not positive";
    throw DegeneracyError(msg.str());
  }
  return {a, std::sqrt(a)};
}

// ---------------------------------------------------------------------------
// Tabulated model
// ---------------------------------------------------------------------------

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() == 1 || x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + w * (ys[i + 1] - ys[i]);
}

}  // namespace

double AveragedModel::drift(double x) const { return interpolate(x_grid, b_bar, x); }
double AveragedModel::diffusion(double x) const { return interpolate(x_grid, sigma_bar, x); }
double AveragedModel::a(double x) const { return interpolate(x_grid, a_bar, x); }

AveragedCoefficients AveragedModel::coefficients() const {
  auto self = std::make_shared<AveragedModel>(*this);
  return AveragedCoefficients{
      source + "-averaged",
      [self](double x) { return self->drift(x); },
      [self](double x) { return self->diffusion(x); },
      domain,
  };
}

AveragedModel build_averaged_model(const ModelSpec& model, std::span<const double> x_grid,
                                   const AveragingOptions& options) {
  require_scalar(model, "build_averaged_model");
  if (x_grid.empty()) throw ConfigError("averaged model needs at least one grid node");
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (i > 0 && !(x_grid[i] > x_grid[i - 1])) {
      throw ConfigError("averaged model grid must be strictly increasing");
    }
    if (!model.slow_domain.contains(x_grid[i])) {
      std::ostringstream msg;
      msg << "grid node " << i << " (x = " << x_grid[i] << ") lies outside the slow domain";
      throw DomainError(msg.str());
    }
  }
  const std::size_t n = x_grid.size();
  AveragedModel out;
  out.source = model.name;
  out.x_grid.assign(x_grid.begin(), x_grid.end());
  out.b_bar.resize(n);
  out.a_bar.resize(n);
  out.sigma_bar.resize(n);
  out.domain = model.slow_domain;
  const bool analytic = options.use_analytic && model.analytic.has_value() &&
                        model.analytic->averaged_drift && model.analytic->averaged_diffusion;
  parallel_for(n, options.workers, [&](std::size_t i) {
    const double x = x_grid[i];
    try {
      if (analytic) {
        out.b_bar[i] = model.analytic->averaged_drift(x);
        out.a_bar[i] = model.analytic->averaged_diffusion(x);
        if (!(out.a_bar[i] > 0.0) && !options.allow_degenerate) {
          throw DegeneracyError("closed-form a-bar is not positive");
        }
        out.sigma_bar[i] = std::sqrt(std::max(out.a_bar[i], 0.0));
      } else {
        out.b_bar[i] = averaged_drift(model, x);
        const auto d = averaged_diffusion(model, x, options.allow_degenerate);
        out.a_bar[i] = d.a_bar;
        out.sigma_bar[i] = d.sigma_bar;
      }
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "averaged model node " << i << " (x = " << x << "): " << e.what();
      throw Error(e.kind(), msg.str());
    }
  });
  return out;
}

AveragedCoefficients averaged_coefficients(const ModelSpec& model,
                                           std::span<const double> fallback_grid,
                                           const AveragingOptions& options) {
  if (options.use_analytic && model.analytic && model.analytic->averaged_drift &&
      model.analytic->averaged_diffusion) {
    const auto truth = *model.analytic;
    if (!options.allow_degenerate) {
      const double probe = model.default_x0.empty() ? 0.0 : model.default_x0.front();
      if (!(truth.averaged_diffusion(probe) > 0.0)) {
        throw DegeneracyError("closed-form a-bar is not positive");
      }
    }
    return AveragedCoefficients{
        model.name + "-averaged",
        truth.averaged_drift,
        [truth](double x) { return std::sqrt(std::max(truth.averaged_diffusion(x), 0.0)); },
        model.slow_domain,
    };
  }
  return build_averaged_model(model, fallback_grid, options).coefficients();
}

// ---------------------------------------------------------------------------
// Discontinuity probe
// ---------------------------------------------------------------------------

DiscontinuityProbe discontinuity_probe(const ModelSpec& model, double x0,
                                       std::span<const double> deltas) {
  if (deltas.empty()) throw ConfigError("discontinuity probe needs at least one delta");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || (i > 0 && !(deltas[i] < deltas[i - 1]))) {
      throw ConfigError("deltas must be positive and strictly decreasing");
    }
    if (!model.slow_domain.contains(x0 + deltas[i])) {
      throw DomainError("x0 + delta lies outside the slow domain");
    }
  }
  DiscontinuityProbe p;
  p.x0 = x0;
  p.deltas.assign(deltas.begin(), deltas.end());
  p.value_at_x0 = averaged_drift(model, x0);
  for (double d : deltas) p.values.push_back(averaged_drift(model, x0 + d));

  // Neville's scheme at delta = 0 through the last (up to) three points.
  const std::size_t k = std::min<std::size_t>(3, deltas.size());
  const std::size_t first = deltas.size() - k;
  std::vector<double> t(p.deltas.begin() + first, p.deltas.end());
  std::vector<double> v(p.values.begin() + first, p.values.end());
  for (std::size_t level = 1; level < k; ++level) {
    for (std::size_t i = 0; i + level < k; ++i) {
      v[i] = (t[i] * v[i + 1] - t[i + level] * v[i]) / (t[i] - t[i + level]);
    }
  }
  p.right_limit_estimate = v[0];
  p.gap = std::abs(p.right_limit_estimate - p.value_at_x0);
  return p;
}

// ---------------------------------------------------------------------------
// Hoelder fits
// ---------------------------------------------------------------------------

double reference_exponent(Metric metric, double lambda, double K3) {
  if (metric == Metric::tv) return 2.0 / 3.0;
  if (!(lambda > 0.0) || !(K3 >= 0.0)) {
    throw ConfigError("reference exponent needs lambda > 0 and K3 >= 0");
  }
  return lambda / (lambda + K3);
}

HolderFitReport holder_fit(Metric metric, const ModelSpec& model,
                           std::span<const std::pair<double, double>> pairs,
                           const HolderOptions& options) {
  require_scalar(model, "holder_fit");
  if (pairs.empty()) throw ConfigError("holder_fit needs at least one pair");
  HolderFitReport r;
  r.metric = metric;
  r.model = model.name;
  r.kappa = options.kappa;
  if (options.reference_exponent) {
    r.reference_exponent = *options.reference_exponent;
  } else if (metric == Metric::tv) {
    r.reference_exponent = 2.0 / 3.0;
  } else if (options.lambda && options.K3) {
    r.reference_exponent = reference_exponent(metric, *options.lambda, *options.K3);
  } else {
    throw ConfigError("holder_fit for w1/wbl needs a reference exponent or lambda and K3");
  }

  std::map<double, Density1D> cache;
  auto density = [&](double x) -> const Density1D& {
    auto it = cache.find(x);
    if (it == cache.end()) it = cache.emplace(x, stationary_density(model, x)).first;
    return it->second;
  };
  for (const auto& [x1, x2] : pairs) {
    HolderPair hp{x1, x2, 0.0, 0.0, true};
    if (x1 != x2) hp.distance = distance(metric, density(x1), density(x2)).value;
    r.pairs.push_back(hp);
  }

  std::vector<double> lx, ld;
  for (const auto& p : r.pairs) {
    const double dx = std::abs(p.x1 - p.x2);
    if (dx > 0.0 && p.distance > 0.0) {
      lx.push_back(std::log(dx));
      ld.push_back(std::log(p.distance));
    }
  }
  r.fitted_points = lx.size();
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ld[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ld[i] - my);
      syy += (ld[i] - my) * (ld[i] - my);
    }
    if (sxx > 0.0) {
      r.fitted_exponent = sxy / sxx;
      r.fitted_constant = std::exp(my - r.fitted_exponent * mx);
      r.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    }
  } else if (lx.size() == 1) {
    r.fitted_constant = std::exp(ld[0]);
  }

  if (options.bound_constant) {
    r.bound_constant = *options.bound_constant;
  } else if (metric == Metric::tv) {
    r.bound_constant = std::max(1.0, std::ceil(r.fitted_constant));
  } else {
    r.bound_constant = 1.0;
  }
  for (auto& p : r.pairs) {
    const double dx = std::abs(p.x1 - p.x2);
    const bool linear = r.kappa && dx >= 2.0 * *r.kappa;
    p.bound = linear ? dx : r.bound_constant * std::pow(dx, r.reference_exponent);
    p.satisfied = p.distance <= p.bound + options.tolerance;
    r.bound_satisfied = r.bound_satisfied && p.satisfied;
  }
  return r;
}

}  // namespace slowfast
