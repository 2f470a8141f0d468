#include "slowfast/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "slowfast/error.hpp"

namespace slowfast {

// ---------------------------------------------------------------------------
// StateDomain
// ---------------------------------------------------------------------------

StateDomain StateDomain::full_line() { return {}; }

StateDomain StateDomain::half_line(double lower) {
  if (!std::isfinite(lower)) throw DomainError("half-line lower bound must be finite");
  return {DomainKind::half_line_reflecting, lower, std::numeric_limits<double>::infinity()};
}

StateDomain StateDomain::interval(double lower, double upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw DomainError("interval bounds must satisfy lower < upper");
  }
  return {DomainKind::interval_reflecting, lower, upper};
}

bool StateDomain::contains(double v) const noexcept {
  if (std::isnan(v)) return false;
  switch (kind) {
    case DomainKind::full_line:
      return std::isfinite(v);
    case DomainKind::half_line_reflecting:
      return v >= lower && std::isfinite(v);
    case DomainKind::interval_reflecting:
      return v >= lower && v <= upper;
  }
  return false;
}

double StateDomain::reflect(double v) const noexcept {
  switch (kind) {
    case DomainKind::full_line:
      return v;
    case DomainKind::half_line_reflecting:
      return v < lower ? 2.0 * lower - v : v;
    case DomainKind::interval_reflecting: {
      if (v >= lower && v <= upper) return v;
      // Unfold onto a circle of circumference 2 * width, then fold back.
      const double width = upper - lower;
      double u = std::fmod(v - lower, 2.0 * width);
      if (u < 0) u += 2.0 * width;
      return u <= width ? lower + u : upper - (u - width);
    }
  }
  return v;
}

double StateDomain::reference_point() const noexcept {
  return kind == DomainKind::full_line ? 0.0 : lower;
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::full_line:
      return "full-line";
    case DomainKind::half_line_reflecting:
      return "half-line-reflecting";
    case DomainKind::interval_reflecting:
      return "interval-reflecting";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Construction helpers and built-ins
// ---------------------------------------------------------------------------

ModelSpec make_scalar_model(std::string name, ScalarField b, ScalarField sigma, ScalarField f,
                            ScalarField g, StateDomain slow_domain, StateDomain fast_domain,
                            double x0, double y0) {
  auto wrap = [](ScalarField field) -> CoefficientField {
    return [field = std::move(field)](std::span<const double> x, std::span<const double> y,
                                      std::span<double> out) { out[0] = field(x[0], y[0]); };
  };
  ModelSpec spec;
  spec.name = std::move(name);
  spec.dx = 1;
  spec.dy = 1;
  spec.coefficients = {wrap(std::move(b)), wrap(std::move(sigma)), wrap(std::move(f)),
                       wrap(std::move(g))};
  spec.slow_domain = slow_domain;
  spec.fast_domain = fast_domain;
  spec.default_x0 = {x0};
  spec.default_y0 = {y0};
  return spec;
}

double example21_fast_drift(double x, double y) noexcept {
  // Divide through by e^{-xy}: r = e^{-(1-x) y} stays in (0, 1].
  if (x == 0.0) return -1.0;
  const double r = std::exp(-(1.0 - x) * y);
  return (-x * x * x - (1.0 - x) * r) / (x * x + (1.0 - x) * r);
}

double example21_density(double x, double y) noexcept {
  return x * x * std::exp(-x * y) + (1.0 - x) * std::exp(-y);
}

namespace {

const double kSqrt2 = std::sqrt(2.0);

ModelSpec make_example21() {
  ModelSpec spec = make_scalar_model(
      "example21", [](double, double y) { return y; }, [](double, double y) { return y; },
      example21_fast_drift, [](double, double) { return kSqrt2; }, StateDomain::interval(0.0, 1.0),
      StateDomain::half_line(0.0), 0.5, 1.0);
  spec.analytic = AnalyticTruth{
      example21_density,
      [](double x) { return x > 0.0 ? 2.0 - x : 1.0; },
      [](double x) { return x > 0.0 ? 2.0 / x + 2.0 * (1.0 - x) : 2.0; },
  };
  AssumptionConstants c;
  c.lambda3 = 2.0;
  spec.assumption_constants = c;
  return spec;
}

ModelSpec make_ou_coupled() {
  const double damp = std::exp(-0.5);
  ModelSpec spec = make_scalar_model(
      "ou-coupled", [](double x, double y) { return -x + std::sin(y); },
      [](double, double y) { return std::sqrt(1.0 + 0.5 * std::cos(y)); },
      [](double x, double y) { return x - y; }, [](double, double) { return kSqrt2; },
      StateDomain::full_line(), StateDomain::full_line(), 1.0, 1.0);
  spec.analytic = AnalyticTruth{
      [](double x, double y) {
        const double z = y - x;
        return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      },
      [damp](double x) { return -x + std::sin(x) * damp; },
      [damp](double x) { return 1.0 + 0.5 * std::cos(x) * damp; },
  };
  AssumptionConstants c;
  c.K1 = 2.125;
  c.K3 = 1.0;
  c.lambda3 = 2.0;
  spec.assumption_constants = c;
  return spec;
}

ModelSpec make_pure_fast_l2() {
  ModelSpec spec = make_scalar_model(
      "pure-fast-l2", [](double, double) { return 0.0; }, [](double, double y) { return y; },
      [](double, double y) { return -y; }, [](double, double) { return kSqrt2; },
      StateDomain::full_line(), StateDomain::full_line(), 0.0, 0.0);
  spec.analytic = AnalyticTruth{
      [](double, double y) { return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi); },
      [](double) { return 0.0; },
      [](double) { return 1.0; },
  };
  AssumptionConstants c;
  c.lambda3 = 2.0;
  spec.assumption_constants = c;
  return spec;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"example21", "ou-coupled", "pure-fast-l2"}; }

ModelSpec get_builtin(const std::string& name) {
  if (name == "example21") return make_example21();
  if (name == "ou-coupled") return make_ou_coupled();
  if (name == "pure-fast-l2") return make_pure_fast_l2();
  std::ostringstream msg;
  msg << "unknown model '" << name << "'; valid names:";
  for (const auto& n : builtin_names()) msg << ' ' << n;
  throw RegistryError(msg.str());
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

void check_point(const StateDomain& domain, std::span<const double> v, const char* label) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!domain.contains(v[i])) {
      std::ostringstream msg;
      msg << label << "[" << i << "] = " << v[i] << " is outside the " << to_string(domain.kind)
          << " domain [" << domain.lower << ", " << domain.upper << "]";
      throw DomainError(msg.str());
    }
  }
}

void check_dims(const ModelSpec& model, std::span<const double> x, std::span<const double> y) {
  if (x.size() != model.dx || y.size() != model.dy) {
    std::ostringstream msg;
    msg << "model '" << model.name << "' expects dx=" << model.dx << ", dy=" << model.dy
        << " but got " << x.size() << ", " << y.size();
    throw DimensionError(msg.str());
  }
}

}  // namespace

CoefficientValues eval_coefficients(const ModelSpec& model, std::span<const double> x,
                                    std::span<const double> y) {
  check_dims(model, x, y);
  check_point(model.slow_domain, x, "x");
  check_point(model.fast_domain, y, "y");
  CoefficientValues out{std::vector<double>(model.dx), std::vector<double>(model.dx * model.dx),
                        std::vector<double>(model.dy), std::vector<double>(model.dy * model.dy)};
  model.coefficients.b(x, y, out.b);
  model.coefficients.sigma(x, y, out.sigma);
  model.coefficients.f(x, y, out.f);
  model.coefficients.g(x, y, out.g);
  return out;
}

void require_scalar(const ModelSpec& model, const char* operation) {
  if (model.dx != 1 || model.dy != 1) {
    throw DimensionError(std::string(operation) + " supports dx = dy = 1 models only; '" +
                         model.name + "' is not scalar");
  }
}

namespace {

inline double eval_scalar(const CoefficientField& field, double x, double y) {
  double out = 0.0;
  field(std::span<const double>(&x, 1), std::span<const double>(&y, 1), std::span<double>(&out, 1));
  return out;
}

}  // namespace

double scalar_b(const ModelSpec& m, double x, double y) { return eval_scalar(m.coefficients.b, x, y); }
double scalar_sigma(const ModelSpec& m, double x, double y) {
  return eval_scalar(m.coefficients.sigma, x, y);
}
double scalar_f(const ModelSpec& m, double x, double y) { return eval_scalar(m.coefficients.f, x, y); }
double scalar_g(const ModelSpec& m, double x, double y) { return eval_scalar(m.coefficients.g, x, y); }

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

std::string to_string(ConditionStatus status) {
  switch (status) {
    case ConditionStatus::pass:
      return "pass";
    case ConditionStatus::fail:
      return "fail";
    case ConditionStatus::unbounded_domain_caveat:
      return "unbounded-domain-caveat";
  }
  return "unknown";
}

const ConditionEntry& AssumptionReport::at(const std::string& condition) const {
  for (const auto& e : entries) {
    if (e.condition == condition) return e;
  }
  throw RegistryError("no assumption entry named " + condition);
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double dot_diff(std::span<const double> a1, std::span<const double> a2, std::span<const double> b1,
                std::span<const double> b2) {
  double s = 0.0;
  for (std::size_t i = 0; i < a1.size(); ++i) s += (a1[i] - a2[i]) * (b1[i] - b2[i]);
  return s;
}

// Smallest eigenvalue of m * m^T for a row-major d x d block.
double min_eig_gram(std::span<const double> m, std::size_t d) {
  if (d == 1) return m[0] * m[0];
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(
      m.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd gram = mat * mat.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<double> flatten(const AssumptionTuple& t) {
  std::vector<double> w;
  w.insert(w.end(), t.x1.begin(), t.x1.end());
  w.insert(w.end(), t.y1.begin(), t.y1.end());
  w.insert(w.end(), t.x2.begin(), t.x2.end());
  w.insert(w.end(), t.y2.begin(), t.y2.end());
  return w;
}

// Running supremum with its witness tuple.
struct SupTracker {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  void offer(double v, std::size_t i) {
    if (v > value) {
      value = v;
      index = i;
    }
  }
};

struct InfTracker {
  double value = std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  void offer(double v, std::size_t i) {
    if (v < value) {
      value = v;
      index = i;
    }
  }
};

}  // namespace

AssumptionReport check_assumptions(const ModelSpec& model, std::span<const AssumptionTuple> grid) {
  if (grid.empty()) throw ConfigError("check_assumptions needs a nonempty sample grid");
  const std::size_t dx = model.dx, dy = model.dy;

  SupTracker k1, k1_b, k1_sigma, k2, k3_x, k3_mono, k4;
  InfTracker a3, b3;
  // Boundedness growth detection: sup over "inner" points (at most half the
  // sampled extent from the domain reference points) vs sup over all points.
  std::vector<double> extent(2 * grid.size());
  std::vector<double> size_a2(2 * grid.size()), size_b2(2 * grid.size());

  const bool unbounded = model.slow_domain.kind != DomainKind::interval_reflecting ||
                         model.fast_domain.kind != DomainKind::interval_reflecting;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& t = grid[i];
    const auto c1 = eval_coefficients(model, t.x1, t.y1);
    const auto c2 = eval_coefficients(model, t.x2, t.y2);
    const double dx2 = squared_distance(t.x1, t.x2);
    const double dy2 = squared_distance(t.y1, t.y2);
    const double denom = dx2 + dy2;

    // (A1) joint Lipschitz bound on b and sigma.
    if (denom > 0.0) {
      const double nb = squared_distance(c1.b, c2.b);
      const double ns = squared_distance(c1.sigma, c2.sigma);
      k1.offer((nb + ns) / denom, i);
      k1_b.offer(nb / denom, i);
      k1_sigma.offer(ns / denom, i);
    }
    // (A2) and (B2) boundedness, at both endpoints of the tuple.
    for (int side = 0; side < 2; ++side) {
      const auto& c = side == 0 ? c1 : c2;
      const auto& xs = side == 0 ? t.x1 : t.x2;
      const auto& ys = side == 0 ? t.y1 : t.y2;
      const double a2v = norm(c.b) + norm(c.sigma);
      const double b2v = norm(c.f) + norm(c.g);
      k2.offer(a2v, i);
      k4.offer(b2v, i);
      double r = 0.0;
      for (double v : xs) r = std::max(r, std::abs(v - model.slow_domain.reference_point()));
      for (double v : ys) r = std::max(r, std::abs(v - model.fast_domain.reference_point()));
      extent[2 * i + side] = r;
      size_a2[2 * i + side] = a2v;
      size_b2[2 * i + side] = b2v;
      // (A3) and (B3) nondegeneracy.
      a3.offer(min_eig_gram(c.sigma, dx), i);
      b3.offer(min_eig_gram(c.g, dy), i);
    }
    // (B1) first family: sup_z (f(x1,y) - f(x2,y)).z / |z| = |f(x1,y) - f(x2,y)|.
    if (dx2 > 0.0) {
      std::vector<double> fa(dy), fb(dy);
      model.coefficients.f(t.x1, t.y1, fa);
      model.coefficients.f(t.x2, t.y1, fb);
      k3_x.offer(std::sqrt(squared_distance(fa, fb) / dx2), i);
    }
    // (B1) second family: one-sided monotonicity.
    if (denom > 0.0) {
      const double lhs = dot_diff(c1.f, c2.f, t.y1, t.y2) + squared_distance(c1.g, c2.g);
      k3_mono.offer(lhs / denom, i);
    }
  }

  auto growth_caveat = [&](const std::vector<double>& sizes) {
    if (!unbounded) return false;
    const double rmax = *std::max_element(extent.begin(), extent.end());
    double inner = -1.0, all = 0.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      all = std::max(all, sizes[k]);
      if (extent[k] <= 0.5 * rmax) inner = std::max(inner, sizes[k]);
    }
    return inner >= 0.0 && all > 1.25 * inner + 1e-12;
  };

  AssumptionReport report;
  report.model = model.name;
  report.samples = grid.size();

  auto positive = [](double v) { return std::isfinite(v) ? std::max(v, 0.0) : 0.0; };

  {
    ConditionEntry e{"A1", ConditionStatus::pass, positive(k1.value), flatten(grid[k1.index]),
                     {{"b", positive(k1_b.value)}, {"sigma", positive(k1_sigma.value)}}, ""};
    report.entries.push_back(std::move(e));
  }
  {
    ConditionEntry e{"A2", ConditionStatus::pass, k2.value, flatten(grid[k2.index]), {}, ""};
    if (growth_caveat(size_a2)) {
      e.status = ConditionStatus::unbounded_domain_caveat;
      e.note = "|b| + |sigma| grows with the sampled extent; no finite K2 on the full domain";
    }
    report.entries.push_back(std::move(e));
  }
  {
    ConditionEntry e{"A3", ConditionStatus::pass, a3.value, flatten(grid[a3.index]), {}, ""};
    if (a3.value <= kAssumptionTolerance) {
      e.status = ConditionStatus::fail;
      e.note = "sigma sigma^T is degenerate at the witness point";
    }
    report.entries.push_back(std::move(e));
  }
  {
    const double kx = positive(k3_x.value), km = positive(k3_mono.value);
    ConditionEntry e{"B1", ConditionStatus::pass, std::max(kx, km),
                     flatten(grid[kx >= km ? k3_x.index : k3_mono.index]),
                     {{"x-lipschitz", kx}, {"monotonicity", km}}, ""};
    report.entries.push_back(std::move(e));
  }
  {
    ConditionEntry e{"B2", ConditionStatus::pass, k4.value, flatten(grid[k4.index]), {}, ""};
    if (growth_caveat(size_b2)) {
      e.status = ConditionStatus::unbounded_domain_caveat;
      e.note = "|f| + |g| grows with the sampled extent; no finite K4 on the full domain";
    }
    report.entries.push_back(std::move(e));
  }
  {
    ConditionEntry e{"B3", ConditionStatus::pass, b3.value, flatten(grid[b3.index]), {}, ""};
    if (b3.value <= kAssumptionTolerance) {
      e.status = ConditionStatus::fail;
      e.note = "g g^T is degenerate at the witness point";
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::vector<AssumptionTuple> random_assumption_grid(const ModelSpec& model, std::size_t n,
                                                    double slow_lo, double slow_hi,
                                                    double fast_lo, double fast_hi,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto clamp_into = [](const StateDomain& d, double lo, double hi) {
    return std::pair{std::max(lo, d.lower), std::min(hi, d.upper)};
  };
  const auto [xl, xh] = clamp_into(model.slow_domain, slow_lo, slow_hi);
  const auto [yl, yh] = clamp_into(model.fast_domain, fast_lo, fast_hi);
  if (!(xl <= xh) || !(yl <= yh)) throw DomainError("sampling box does not meet the model domains");
  std::uniform_real_distribution<double> ux(xl, xh), uy(yl, yh);
  std::vector<AssumptionTuple> out(n);
  for (auto& t : out) {
    t.x1.resize(model.dx);
    t.x2.resize(model.dx);
    t.y1.resize(model.dy);
    t.y2.resize(model.dy);
    for (auto& v : t.x1) v = ux(rng);
    for (auto& v : t.y1) v = uy(rng);
    for (auto& v : t.x2) v = ux(rng);
    for (auto& v : t.y2) v = uy(rng);
  }
  // Pin (x1, y1) of the last tuples to the box corners; infima such as a
  // vanishing sigma at a reflecting boundary are never hit by uniform draws.
  if (n >= 8) {
    for (std::size_t c = 0; c < 4; ++c) {
      auto& t = out[n - 4 + c];
      std::fill(t.x1.begin(), t.x1.end(), (c & 1) ? xh : xl);
      std::fill(t.y1.begin(), t.y1.end(), (c & 2) ? yh : yl);
    }
  }
  return out;
}

}  // namespace slowfast
