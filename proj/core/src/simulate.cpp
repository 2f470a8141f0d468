#include "slowfast/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "slowfast/error.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

std::string to_string(StoreMode mode) {
  switch (mode) {
    case StoreMode::terminal_only:
      return "terminal-only";
    case StoreMode::full_paths:
      return "full-paths";
    case StoreMode::strided:
      return "strided";
  }
  return "unknown";
}

StoreMode store_mode_from_string(const std::string& text) {
  if (text == "terminal-only") return StoreMode::terminal_only;
  if (text == "full-paths") return StoreMode::full_paths;
  if (text == "strided") return StoreMode::strided;
  throw ConfigError("unknown store mode '" + text + "' (terminal-only, full-paths, strided)");
}

std::size_t macro_steps(const SimConfig& config) {
  const double ratio = config.horizon / config.dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) {
    return static_cast<std::size_t>(rounded);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

std::size_t fast_substeps(const SimConfig& config) {
  if (config.freeze_fast) return 1;
  const double target = config.epsilon * config.fast_step_factor;
  if (config.dt <= target) return 1;
  return static_cast<std::size_t>(std::ceil(config.dt / target * (1.0 - 1e-12)));
}

void validate(const SimConfig& config, bool coupled) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(config.epsilon > 0.0)) fail("epsilon must be positive");
  if (!(config.dt > 0.0)) fail("dt must be positive");
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) fail("horizon must be positive");
  if (!(config.dt < config.horizon)) fail("dt must be smaller than the horizon");
  if (config.n_paths == 0) fail("n_paths must be positive");
  if (config.store == StoreMode::strided && config.stride == 0) fail("stride must be positive");
  if (!(config.fast_step_factor > 0.0)) fail("fast_step_factor must be positive");
  if (coupled && !config.freeze_fast && std::isfinite(config.epsilon)) {
    const double h = config.dt / static_cast<double>(fast_substeps(config));
    if (h / config.epsilon > kFastStabilityBound * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "fast step h/epsilon = " << h / config.epsilon << " exceeds the stability bound "
          << kFastStabilityBound << " (lower fast_step_factor or dt)";
      fail(msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Ensemble accessors
// ---------------------------------------------------------------------------

std::span<const double> Ensemble::state(std::size_t p, std::size_t k) const {
  return std::span<const double>(states).subspan((p * times.size() + k) * width(), width());
}
std::span<const double> Ensemble::slow(std::size_t p, std::size_t k) const {
  return state(p, k).first(dx);
}
std::span<const double> Ensemble::fast(std::size_t p, std::size_t k) const {
  return state(p, k).subspan(dx, dy);
}

PathSample Ensemble::path(std::size_t index) const {
  PathSample out;
  out.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) {
    auto s = slow(index, k);
    out.slow_states.emplace_back(s.begin(), s.end());
    if (dy > 0) {
      auto f = fast(index, k);
      out.fast_states.emplace_back(f.begin(), f.end());
    }
  }
  return out;
}

std::vector<double> Ensemble::terminal_slow(std::size_t c) const {
  std::vector<double> out(n_paths());
  for (std::size_t p = 0; p < n_paths(); ++p) out[p] = slow(p, times.size() - 1)[c];
  return out;
}

std::vector<double> Ensemble::terminal_fast(std::size_t c) const {
  if (dy == 0) throw DimensionError("ensemble has no fast component");
  std::vector<double> out(n_paths());
  for (std::size_t p = 0; p < n_paths(); ++p) out[p] = fast(p, times.size() - 1)[c];
  return out;
}

// ---------------------------------------------------------------------------
// Integration kernels
// ---------------------------------------------------------------------------

namespace {

// Which macro steps are written to the ensemble.
struct StoragePlan {
  std::vector<std::size_t> steps;  // macro step indices, increasing
  std::vector<double> times;
};

StoragePlan plan_storage(const SimConfig& config) {
  const std::size_t n = macro_steps(config);
  StoragePlan plan;
  auto add = [&](std::size_t k) {
    plan.steps.push_back(k);
    plan.times.push_back(std::min(static_cast<double>(k) * config.dt, config.horizon));
  };
  switch (config.store) {
    case StoreMode::terminal_only:
      add(n);
      break;
    case StoreMode::full_paths:
      for (std::size_t k = 0; k <= n; ++k) add(k);
      break;
    case StoreMode::strided:
      for (std::size_t k = 0; k <= n; k += config.stride) add(k);
      if (plan.steps.back() != n) add(n);
      break;
  }
  return plan;
}

std::vector<double> initial_or_default(const std::vector<double>& given,
                                       const std::vector<double>& fallback, std::size_t dim,
                                       const char* label) {
  const auto& v = given.empty() ? fallback : given;
  if (v.size() != dim) {
    throw DimensionError(std::string("initial ") + label + " has dimension " +
                         std::to_string(v.size()) + ", expected " + std::to_string(dim));
  }
  return v;
}

void check_domain(const StateDomain& d, std::span<const double> v, const char* label) {
  for (double c : v) {
    if (!d.contains(c)) {
      throw DomainError(std::string("initial ") + label + " lies outside its domain");
    }
  }
}

[[noreturn]] void blow_up(std::size_t path, std::size_t step, const char* what) {
  std::ostringstream msg;
  msg << "non-finite " << what << " state on path " << path << " at fast step " << step;
  throw BlowUpError(msg.str());
}

inline void reflect_all(const StateDomain& d, std::span<double> v) {
  if (d.kind == DomainKind::full_line) return;
  for (double& c : v) {
    c = d.reflect(c);
    assert(d.contains(c));
  }
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

Ensemble make_ensemble(const SimConfig& config, std::string model, std::size_t dx, std::size_t dy,
                       const StoragePlan& plan) {
  Ensemble e;
  e.config = config;
  e.model = std::move(model);
  e.dx = dx;
  e.dy = dy;
  e.times = plan.times;
  e.states.assign(config.n_paths * plan.times.size() * (dx + dy), 0.0);
  e.stream_ids.resize(config.n_paths);
  for (std::size_t p = 0; p < config.n_paths; ++p) e.stream_ids[p] = p;
  return e;
}

// Shared integrator for coupled (slow + fast) and frozen (fast only) runs.
// `slow_active` = false freezes x; `inv_eps` scales the fast drift.
Ensemble integrate_joint(const ModelSpec& model, const SimConfig& config, std::vector<double> x0,
                         std::vector<double> y0, bool slow_active, double inv_eps) {
  const std::size_t dx = model.dx, dy = model.dy;
  const StoragePlan plan = plan_storage(config);
  Ensemble ens = make_ensemble(config, model.name, dx, dy, plan);
  const std::size_t n_macro = macro_steps(config);
  const std::size_t m = slow_active ? fast_substeps(config)
                                    : std::max<std::size_t>(
                                          1, static_cast<std::size_t>(std::ceil(
                                                 config.dt / config.fast_step_factor * (1.0 - 1e-12))));
  const double h = config.dt / static_cast<double>(m);
  const double sqrt_h = std::sqrt(h);
  const double sqrt_inv_eps = std::sqrt(inv_eps);
  const bool fast_active = !config.freeze_fast;

  parallel_for(config.n_paths, config.workers, [&](std::size_t p) {
    NormalStream slow_noise(config.seed, ens.stream_ids[p], StreamTag::slow);
    NormalStream fast_noise(config.seed, ens.stream_ids[p], StreamTag::fast);
    std::vector<double> x = x0, y = y0;
    std::vector<double> b(dx), sigma(dx * dx), f(dy), g(dy * dy), xi(dx), eta(dy), xn(dx), yn(dy);
    std::size_t next_store = 0;
    auto store = [&](std::size_t k) {
      while (next_store < plan.steps.size() && plan.steps[next_store] == k) {
        double* dst = ens.states.data() + (p * plan.times.size() + next_store) * (dx + dy);
        std::copy(x.begin(), x.end(), dst);
        std::copy(y.begin(), y.end(), dst + dx);
        ++next_store;
      }
    };
    store(0);
    std::size_t fast_step = 0;
    for (std::size_t k = 1; k <= n_macro; ++k) {
      for (std::size_t j = 0; j < m; ++j, ++fast_step) {
        if (slow_active) {
          for (auto& v : xi) v = slow_noise.next();
          model.coefficients.b(x, y, b);
          model.coefficients.sigma(x, y, sigma);
          for (std::size_t r = 0; r < dx; ++r) {
            double diffusion = 0.0;
            for (std::size_t c = 0; c < dx; ++c) diffusion += sigma[r * dx + c] * xi[c];
            xn[r] = x[r] + b[r] * h + diffusion * sqrt_h;
          }
        }
        if (fast_active) {
          for (auto& v : eta) v = fast_noise.next();
          model.coefficients.f(x, y, f);
          model.coefficients.g(x, y, g);
          for (std::size_t r = 0; r < dy; ++r) {
            double diffusion = 0.0;
            for (std::size_t c = 0; c < dy; ++c) diffusion += g[r * dy + c] * eta[c];
            yn[r] = y[r] + f[r] * inv_eps * h + diffusion * sqrt_inv_eps * sqrt_h;
          }
          reflect_all(model.fast_domain, yn);
          if (!all_finite(yn)) blow_up(p, fast_step, "fast");
          y.swap(yn);
        }
        if (slow_active) {
          reflect_all(model.slow_domain, xn);
          if (!all_finite(xn)) blow_up(p, fast_step, "slow");
          x.swap(xn);
        }
      }
      store(k);
    }
  });
  return ens;
}

}  // namespace

Ensemble simulate_coupled(const ModelSpec& model, const SimConfig& config) {
  validate(config, true);
  auto x0 = initial_or_default(config.x0, model.default_x0, model.dx, "x0");
  auto y0 = initial_or_default(config.y0, model.default_y0, model.dy, "y0");
  check_domain(model.slow_domain, x0, "x0");
  check_domain(model.fast_domain, y0, "y0");
  return integrate_joint(model, config, std::move(x0), std::move(y0), true, 1.0 / config.epsilon);
}

Ensemble simulate_frozen(const ModelSpec& model, std::span<const double> x,
                         const SimConfig& config) {
  validate(config, false);
  if (x.size() != model.dx) throw DimensionError("frozen slow state has the wrong dimension");
  check_domain(model.slow_domain, x, "frozen x");
  auto y0 = initial_or_default(config.y0, model.default_y0, model.dy, "y0");
  check_domain(model.fast_domain, y0, "y0");
  SimConfig frozen = config;
  frozen.epsilon = 1.0;
  return integrate_joint(model, frozen, std::vector<double>(x.begin(), x.end()), std::move(y0),
                         false, 1.0);
}

Ensemble simulate_averaged(const AveragedCoefficients& avg, const SimConfig& config, bool paired) {
  validate(config, paired);
  if (!avg.drift || !avg.diffusion) throw ConfigError("averaged coefficients are not evaluable");
  const std::vector<double> x0 = config.x0.empty() ? std::vector<double>{0.0} : config.x0;
  if (x0.size() != 1) throw DimensionError("averaged runs are one-dimensional");
  check_domain(avg.domain, x0, "x0");

  const StoragePlan plan = plan_storage(config);
  Ensemble ens = make_ensemble(config, avg.name, 1, 0, plan);
  const std::size_t n_macro = macro_steps(config);
  const std::size_t m = paired ? fast_substeps(config) : 1;
  const double h = config.dt / static_cast<double>(m);
  const double sqrt_h = std::sqrt(h);

  parallel_for(config.n_paths, config.workers, [&](std::size_t p) {
    NormalStream noise(config.seed, ens.stream_ids[p], StreamTag::slow);
    double x = x0[0];
    std::size_t next_store = 0;
    auto store = [&](std::size_t k) {
      while (next_store < plan.steps.size() && plan.steps[next_store] == k) {
        ens.states[p * plan.times.size() + next_store] = x;
        ++next_store;
      }
    };
    store(0);
    for (std::size_t k = 1; k <= n_macro; ++k) {
      double dw = 0.0;
      for (std::size_t j = 0; j < m; ++j) dw += noise.next();
      dw *= sqrt_h;
      // The macro step spans m fast steps of length h, i.e. dt in total.
      double xn = x + avg.drift(x) * config.dt + avg.diffusion(x) * dw;
      xn = avg.domain.reflect(xn);
      if (!std::isfinite(xn)) blow_up(p, k, "averaged");
      assert(avg.domain.contains(xn));
      x = xn;
      store(k);
    }
  });
  return ens;
}

std::vector<double> synchronous_coupling_gaps(const ModelSpec& model, std::span<const double> x,
                                              std::span<const double> y_a,
                                              std::span<const double> y_b,
                                              const SimConfig& config) {
  validate(config, false);
  const std::size_t dx = model.dx, dy = model.dy;
  if (x.size() != dx || y_a.size() != dy || y_b.size() != dy) {
    throw DimensionError("coupling start points have the wrong dimension");
  }
  check_domain(model.slow_domain, x, "frozen x");
  check_domain(model.fast_domain, y_a, "y");
  check_domain(model.fast_domain, y_b, "y'");
  const std::size_t n_macro = macro_steps(config);
  const std::size_t m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.dt / config.fast_step_factor * (1.0 - 1e-12))));
  const double h = config.dt / static_cast<double>(m);
  const double sqrt_h = std::sqrt(h);

  std::vector<double> gaps(config.n_paths * (n_macro + 1), 0.0);
  parallel_for(config.n_paths, config.workers, [&](std::size_t p) {
    NormalStream noise(config.seed, p, StreamTag::fast);
    std::vector<double> ya(y_a.begin(), y_a.end()), yb(y_b.begin(), y_b.end());
    std::vector<double> fa(dy), fb(dy), ga(dy * dy), gb(dy * dy), eta(dy);
    auto gap = [&] {
      double s = 0.0;
      for (std::size_t r = 0; r < dy; ++r) s += (ya[r] - yb[r]) * (ya[r] - yb[r]);
      return std::sqrt(s);
    };
    gaps[p * (n_macro + 1)] = gap();
    std::size_t step = 0;
    for (std::size_t k = 1; k <= n_macro; ++k) {
      for (std::size_t j = 0; j < m; ++j, ++step) {
        for (auto& v : eta) v = noise.next();
        model.coefficients.f(x, ya, fa);
        model.coefficients.g(x, ya, ga);
        model.coefficients.f(x, yb, fb);
        model.coefficients.g(x, yb, gb);
        for (std::size_t r = 0; r < dy; ++r) {
          double da = 0.0, db = 0.0;
          for (std::size_t c = 0; c < dy; ++c) {
            da += ga[r * dy + c] * eta[c];
            db += gb[r * dy + c] * eta[c];
          }
          ya[r] += fa[r] * h + da * sqrt_h;
          yb[r] += fb[r] * h + db * sqrt_h;
        }
        reflect_all(model.fast_domain, ya);
        reflect_all(model.fast_domain, yb);
        if (!all_finite(ya) || !all_finite(yb)) blow_up(p, step, "coupled fast");
      }
      gaps[p * (n_macro + 1) + k] = gap();
    }
  });

  // Deterministic reduction in path order.
  std::vector<double> mean(n_macro + 1, 0.0);
  for (std::size_t p = 0; p < config.n_paths; ++p) {
    for (std::size_t k = 0; k <= n_macro; ++k) mean[k] += gaps[p * (n_macro + 1) + k];
  }
  for (auto& v : mean) v /= static_cast<double>(config.n_paths);
  return mean;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const Ensemble& e) {
  out << "path_id,t";
  for (std::size_t c = 0; c < e.dx; ++c) out << ",x_" << c;
  for (std::size_t c = 0; c < e.dy; ++c) out << ",y_" << c;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t p = 0; p < e.n_paths(); ++p) {
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      out << e.stream_ids[p] << ',' << e.times[k];
      for (double v : e.state(p, k)) out << ',' << v;
      out << '\n';
    }
  }
  out.precision(old_precision);
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary ensemble layout assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'F', 'E', 'N', 'S', 'M', 'B', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("truncated ensemble file");
  return v;
}

}  // namespace

void write_binary(std::ostream& out, const Ensemble& e) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dy));
  put<std::uint64_t>(out, e.n_paths());
  put<std::uint64_t>(out, e.times.size());
  out.write(reinterpret_cast<const char*>(e.times.data()),
            static_cast<std::streamsize>(e.times.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(e.stream_ids.data()),
            static_cast<std::streamsize>(e.stream_ids.size() * sizeof(std::uint64_t)));
  out.write(reinterpret_cast<const char*>(e.states.data()),
            static_cast<std::streamsize>(e.states.size() * sizeof(double)));
}

Ensemble read_binary(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ConfigError("not an ensemble file (bad magic)");
  }
  Ensemble e;
  e.dx = get<std::uint32_t>(in);
  e.dy = get<std::uint32_t>(in);
  const auto n_paths = get<std::uint64_t>(in);
  const auto n_times = get<std::uint64_t>(in);
  e.times.resize(n_times);
  e.stream_ids.resize(n_paths);
  e.states.resize(n_paths * n_times * (e.dx + e.dy));
  auto read_block = [&](void* dst, std::size_t bytes) {
    if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes))) {
      throw ConfigError("truncated ensemble file");
    }
  };
  read_block(e.times.data(), n_times * sizeof(double));
  read_block(e.stream_ids.data(), n_paths * sizeof(std::uint64_t));
  read_block(e.states.data(), e.states.size() * sizeof(double));
  e.config.n_paths = n_paths;
  return e;
}

}  // namespace slowfast
