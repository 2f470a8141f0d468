#include "slowfast/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slowfast/averaging.hpp"
#include "slowfast/error.hpp"
#include "slowfast/metrics.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/stationary.hpp"

namespace slowfast {

namespace {

struct TestFunction {
  const char* name;
  double (*fn)(double);
};

constexpr TestFunction kBattery[] = {
    {"sin", [](double x) { return std::sin(x); }},
    {"cos", [](double x) { return std::cos(x); }},
    {"clip1", [](double x) { return std::clamp(x, -1.0, 1.0); }},
    {"clip-square", [](double x) { return std::min(x * x, 1.0); }},
    {"clip-cube", [](double x) { return std::clamp(x * x * x, -1.0, 1.0); }},
};

// |mean phi(a) - mean phi(b)| and its standard error for independent samples.
std::pair<double, double> functional_gap(const std::vector<double>& a,
                                         const std::vector<double>& b, double (*phi)(double)) {
  auto stats = [&](const std::vector<double>& v) {
    double m = 0.0, q = 0.0;
    for (double s : v) m += phi(s);
    m /= static_cast<double>(v.size());
    for (double s : v) q += (phi(s) - m) * (phi(s) - m);
    const double var = v.size() > 1 ? q / static_cast<double>(v.size() - 1) : 0.0;
    return std::pair{m, var / static_cast<double>(v.size())};
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  return {std::abs(ma - mb), std::sqrt(va + vb)};
}

std::vector<double> default_x_grid(const ModelSpec& model, double x0) {
  double lo = x0 - 8.0, hi = x0 + 8.0;
  const StateDomain& d = model.slow_domain;
  if (d.has_lower()) lo = std::max(lo, d.lower);
  if (d.has_upper()) hi = std::min(hi, d.upper);
  if (d.has_lower() && d.has_upper()) {
    lo = d.lower;
    hi = d.upper;
  }
  std::vector<double> grid(81);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / 80.0;
  }
  return grid;
}

// Runs the coupled system on blocks of length delta; at every block start the
// frozen fast path restarts from the true fast state with x held fixed, and
// both fast paths share the same Brownian increments.
BlockDiagnostic block_gaps(const ModelSpec& model, double eps, const SimConfig& config,
                           std::size_t paths) {
  BlockDiagnostic out;
  out.epsilon = eps;
  if (!(eps > 0.0) || !(eps < std::exp(-1.0)) || !std::isfinite(eps)) return out;
  out.block = eps * std::log(std::log(1.0 / eps));
  if (!(out.block > 0.0)) return out;
  SimConfig cfg = config;
  cfg.epsilon = eps;
  const std::size_t m = fast_substeps(cfg);
  const double h = cfg.dt / static_cast<double>(m);
  const auto steps_per_block = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(out.block / h)));
  const auto total_steps = static_cast<std::size_t>(std::llround(cfg.horizon / h));
  out.blocks = total_steps / steps_per_block;
  out.paths = std::min(paths, cfg.n_paths);
  if (out.blocks == 0 || out.paths == 0) return out;

  const double x_start = model.default_x0.empty() ? 0.0 : model.default_x0.front();
  const double y_start = model.default_y0.empty() ? 0.0 : model.default_y0.front();
  const double xi0 = cfg.x0.empty() ? x_start : cfg.x0.front();
  const double yi0 = cfg.y0.empty() ? y_start : cfg.y0.front();
  const std::uint64_t seed = mix_seed(cfg.seed, 7);
  std::vector<double> mean(out.paths, 0.0), worst(out.paths, 0.0);
  const double sqrt_h = std::sqrt(h), inv = 1.0 / eps, sqrt_inv = std::sqrt(inv);
  parallel_for(out.paths, cfg.workers, [&](std::size_t p) {
    NormalStream slow(seed, p, StreamTag::slow), fast(seed, p, StreamTag::fast);
    double x = xi0, y = yi0;
    for (std::size_t b = 0; b < out.blocks; ++b) {
      const double xf = x;
      double yf = y;
      for (std::size_t j = 0; j < steps_per_block; ++j) {
        const double xi = slow.next(), eta = fast.next();
        const double xn = x + scalar_b(model, x, y) * h + scalar_sigma(model, x, y) * xi * sqrt_h;
        double yn = y + scalar_f(model, x, y) * inv * h + scalar_g(model, x, y) * sqrt_inv * eta * sqrt_h;
        yf = yf + scalar_f(model, xf, yf) * inv * h + scalar_g(model, xf, yf) * sqrt_inv * eta * sqrt_h;
        yf = model.fast_domain.reflect(yf);
        yn = model.fast_domain.reflect(yn);
        x = model.slow_domain.reflect(xn);
        y = yn;
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(yf)) {
          throw BlowUpError("non-finite state in the block diagnostic");
        }
      }
      const double gap = std::abs(y - yf);
      mean[p] += gap;
      worst[p] = std::max(worst[p], gap);
    }
    mean[p] /= static_cast<double>(out.blocks);
  });
  for (std::size_t p = 0; p < out.paths; ++p) {
    out.mean_gap += mean[p];
    out.max_gap = std::max(out.max_gap, worst[p]);
  }
  out.mean_gap /= static_cast<double>(out.paths);
  return out;
}

void check_epsilons(std::span<const double> epsilons) {
  if (epsilons.empty()) throw ConfigError("at least one epsilon is required");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ConfigError("epsilons must be positive");
  }
}

}  // namespace

ConvergenceReport run_averaging_convergence(const ModelSpec& model, std::span<const double> epsilons,
                                            const SimConfig& config,
                                            const ConvergenceOptions& options) {
  require_scalar(model, "run_averaging_convergence");
  check_epsilons(epsilons);
  validate(config, false);

  // Nondegeneracy and monotonicity spot checks on a probe box.
  const double x_start = config.x0.empty()
                             ? (model.default_x0.empty() ? 0.0 : model.default_x0.front())
                             : config.x0.front();
  const auto grid = random_assumption_grid(model, 256, x_start - 3.0, x_start + 3.0, -3.0, 3.0,
                                           mix_seed(config.seed, 3));
  const auto assumptions = check_assumptions(model, grid);
  if (assumptions.at("B1").status == ConditionStatus::fail) {
    throw ConfigError("B1 fails on the probe region: " + assumptions.at("B1").note);
  }
  if (!options.allow_degenerate) {
    for (const char* c : {"A3", "B3"}) {
      const auto& e = assumptions.at(c);
      if (e.status == ConditionStatus::fail) {
        throw DegeneracyError(std::string(c) + " fails on the probe region: " + e.note);
      }
    }
  }

  AveragingOptions avg_opts;
  avg_opts.allow_degenerate = options.allow_degenerate;
  avg_opts.workers = config.workers;
  const auto x_grid = options.x_grid.empty() ? default_x_grid(model, x_start) : options.x_grid;
  const AveragedCoefficients avg = averaged_coefficients(model, x_grid, avg_opts);

  ConvergenceReport r;
  r.model = model.name;
  r.horizon = config.horizon;
  r.epsilons.assign(epsilons.begin(), epsilons.end());
  r.n_paths = config.n_paths;
  r.seed = config.seed;
  r.config = config;

  SimConfig avg_cfg = config;
  avg_cfg.store = StoreMode::terminal_only;
  avg_cfg.x0 = {x_start};
  avg_cfg.seed = mix_seed(config.seed, 1);
  const auto reference = simulate_averaged(avg, avg_cfg).terminal_slow();
  avg_cfg.seed = mix_seed(config.seed, 2);
  const auto independent = simulate_averaged(avg, avg_cfg).terminal_slow();
  const auto ref_measure = EmpiricalMeasure::from_samples(reference);
  r.noise_floor = w1_empirical(ref_measure, EmpiricalMeasure::from_samples(independent));

  if (options.functional_battery) {
    for (const auto& t : kBattery) r.functionals.push_back({t.name, {}, {}});
  }
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    SimConfig cfg = config;
    cfg.store = StoreMode::terminal_only;
    cfg.x0 = {x_start};
    cfg.seed = mix_seed(config.seed, 100 + k);
    if (std::isinf(epsilons[k])) {
      cfg.freeze_fast = true;
      cfg.epsilon = 1.0;
    } else {
      cfg.epsilon = epsilons[k];
    }
    const auto terminal = simulate_coupled(model, cfg).terminal_slow();
    r.w1_terminal.push_back(w1_empirical(EmpiricalMeasure::from_samples(terminal), ref_measure));
    for (std::size_t f = 0; f < r.functionals.size(); ++f) {
      const auto [gap, se] = functional_gap(terminal, reference, kBattery[f].fn);
      r.functionals[f].gap.push_back(gap);
      r.functionals[f].standard_error.push_back(se);
    }
    if (options.block_diagnostic) {
      r.blocks.push_back(block_gaps(model, epsilons[k], cfg, options.block_paths));
    }
  }
  return r;
}

L2Report run_l2_failure(const SimConfig& config, std::span<const double> epsilons,
                        const L2Options& options) {
  check_epsilons(epsilons);
  for (double e : epsilons) {
    if (std::isinf(e)) throw ConfigError("the L2 study needs finite epsilons");
  }
  validate(config, false);
  ModelSpec model = get_builtin("pure-fast-l2");
  if (options.constant_sigma) {
    const double c = *options.constant_sigma;
    model.name = "pure-fast-l2-constant";
    model.coefficients.sigma = [c](std::span<const double>, std::span<const double>,
                                   std::span<double> out) { out[0] = c; };
    model.analytic.reset();
  }

  // mu is the invariant law of the fast process (x plays no role here).
  const Density1D mu = stationary_density(model, 0.0);
  const double a_bar = expectation(mu, [&](double y) {
    const double s = scalar_sigma(model, 0.0, y);
    return s * s;
  });
  const double sigma_bar = std::sqrt(std::max(a_bar, 0.0));
  const double spread = expectation(mu, [&](double y) {
    const double d = scalar_sigma(model, 0.0, y) - sigma_bar;
    return d * d;
  });

  L2Report r;
  r.model = model.name;
  r.horizon = config.horizon;
  r.epsilons.assign(epsilons.begin(), epsilons.end());
  r.n_paths = config.n_paths;
  r.seed = config.seed;
  r.config = config;
  r.sigma_bar = sigma_bar;
  r.predicted_limit = config.horizon * spread;

  const AveragedCoefficients avg{
      model.name + "-averaged",
      [](double) { return 0.0; },
      [sigma_bar](double) { return sigma_bar; },
      StateDomain::full_line(),
  };
  const double x_start = config.x0.empty() ? 0.0 : config.x0.front();
  {
    SimConfig a = config;
    a.store = StoreMode::terminal_only;
    a.x0 = {x_start};
    a.seed = mix_seed(config.seed, 1);
    const auto first = simulate_averaged(avg, a).terminal_slow();
    a.seed = mix_seed(config.seed, 2);
    const auto second = simulate_averaged(avg, a).terminal_slow();
    r.noise_floor = w1_empirical(EmpiricalMeasure::from_samples(first),
                                 EmpiricalMeasure::from_samples(second));
  }

  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    SimConfig cfg = config;
    cfg.store = StoreMode::terminal_only;
    cfg.epsilon = epsilons[k];
    cfg.x0 = {x_start};
    cfg.seed = mix_seed(config.seed, 100 + k);
    const auto xe = simulate_coupled(model, cfg).terminal_slow();
    const auto xb = simulate_averaged(avg, cfg, true).terminal_slow();
    const double n = static_cast<double>(xe.size());
    double mean = 0.0;
    for (std::size_t p = 0; p < xe.size(); ++p) mean += (xe[p] - xb[p]) * (xe[p] - xb[p]);
    mean /= n;
    double var = 0.0;
    for (std::size_t p = 0; p < xe.size(); ++p) {
      const double d = (xe[p] - xb[p]) * (xe[p] - xb[p]) - mean;
      var += d * d;
    }
    var = xe.size() > 1 ? var / (n - 1.0) : 0.0;
    r.mean_square_gap.push_back(mean);
    r.standard_error.push_back(std::sqrt(var / n));
    r.relative_error.push_back(r.predicted_limit > 0.0
                                   ? std::abs(mean - r.predicted_limit) / r.predicted_limit
                                   : std::numeric_limits<double>::quiet_NaN());
    r.w1_terminal.push_back(
        w1_empirical(EmpiricalMeasure::from_samples(xe), EmpiricalMeasure::from_samples(xb)));
  }
  return r;
}

}  // namespace slowfast
