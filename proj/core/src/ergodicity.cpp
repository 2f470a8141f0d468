#include "slowfast/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "quadrature.hpp"
#include "slowfast/error.hpp"
#include "slowfast/metrics.hpp"

namespace slowfast {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::yes:
      return "true";
    case Verdict::no:
      return "false";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double signed_gauss15(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  return a < b ? detail::gauss15(f, a, b) : -detail::gauss15(f, b, a);
}

// ---------------------------------------------------------------------------
// One infinite end of the fast domain, parametrised by the distance t >= 0
// from the anchor: y = anchor + dir * t.
// ---------------------------------------------------------------------------

class EndProfile {
 public:
  static constexpr int kUnitCells = 64;
  static constexpr int kCellsPerOctave = 48;
  static constexpr int kOctaves = kClassifyDoublings + 2;

  EndProfile(const ModelSpec& model, double x, double anchor, int dir)
      : model_(model), x_(x), anchor_(anchor), dir_(dir) {
    rate_ = [this](double t) {
      const double y = anchor_ + dir_ * t;
      const double g = scalar_g(model_, x_, y);
      if (!(g * g > 1e-300)) {
        std::ostringstream msg;
        msg << "fast diffusion vanishes at y = " << y;
        throw DegeneracyError(msg.str());
      }
      return dir_ * 2.0 * scalar_f(model_, x_, y) / (g * g);
    };
    for (int k = 0; k <= kUnitCells; ++k) nodes_.push_back(static_cast<double>(k) / kUnitCells);
    for (int o = 0; o < kOctaves; ++o) {
      for (int i = 1; i <= kCellsPerOctave; ++i) {
        nodes_.push_back(i == kCellsPerOctave
                             ? std::ldexp(1.0, o + 1)
                             : std::ldexp(std::exp2(static_cast<double>(i) / kCellsPerOctave), o));
      }
    }
    const std::size_t cells = nodes_.size() - 1;
    phi_.assign(nodes_.size(), 0.0);
    dphi_.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      dphi_[c] = detail::integrate_cell(rate_, nodes_[c], nodes_[c + 1], 1e-10);
      phi_[c + 1] = phi_[c] + dphi_[c];
      if (!std::isfinite(phi_[c + 1])) throw DomainError("potential is not finite on the probed range");
    }
    log_s_.resize(cells);
    log_m_.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      log_s_[c] = cell_log_integral(c, false);
      log_m_[c] = cell_log_integral(c, true);
    }
  }

  std::size_t nodes() const { return nodes_.size(); }
  double node(std::size_t k) const { return nodes_[k]; }
  double phi(std::size_t k) const { return phi_[k]; }
  double dphi(std::size_t c) const { return dphi_[c]; }
  /// Cell integrals of s and m relative to the cell's left node:
  /// log of the integral of exp(-(phi - phi_a)) and of exp(phi - phi_a) / g^2.
  double log_s_cell(std::size_t c) const { return log_s_[c]; }
  double log_m_cell(std::size_t c) const { return log_m_[c]; }
  static std::size_t node_of_power(int j) {
    return static_cast<std::size_t>(kUnitCells + kCellsPerOctave * j);
  }

 private:
  double log_g2(double t) const {
    const double g = scalar_g(model_, x_, anchor_ + dir_ * t);
    return std::log(g * g);
  }

  double psi(double t, double ph, bool speed) const { return speed ? ph - log_g2(t) : -ph; }

  double phi_from(double t0, double ph0, double t) const {
    return ph0 + signed_gauss15(rate_, t0, t);
  }

  // log of the integral over cell c of exp(psi), psi = phi - log g^2 for the
  // speed density and -phi for the scale density.
  double cell_log_integral(std::size_t c, bool speed) const {
    const double a = nodes_[c], b = nodes_[c + 1], w = b - a;
    const double pa = 0.0, pb = dphi_[c];
    constexpr int kSamples = 16;
    double vals[kSamples + 1];
    for (int j = 0; j <= kSamples; ++j) {
      const double t = a + w * j / kSamples;
      const double ph = j == 0 ? pa : (j == kSamples ? pb : phi_from(a, pa, t));
      vals[j] = psi(t, ph, speed);
    }
    const auto [mn, mx] = std::minmax_element(vals, vals + kSamples + 1);
    const double top = *mx;
    const int arg = static_cast<int>(mx - vals);

    auto shifted = [&](double t) { return std::exp(psi(t, phi_from(a, pa, t), speed) - top); };
    if (top - *mn <= 2.0) return std::log(detail::gauss15(shifted, a, b)) + top;

    bool increasing = true, decreasing = true;
    for (int j = 1; j <= kSamples; ++j) {
      increasing = increasing && vals[j] >= vals[j - 1];
      decreasing = decreasing && vals[j] <= vals[j - 1];
    }
    if (!(increasing || decreasing) || (arg != 0 && arg != kSamples)) {
      const double v = detail::integrate(shifted, a, b, 1e-13 * w);
      return std::log(std::max(v, 1e-300)) + top;
    }

    // Thin layer at the dominant end: geometric sub-intervals growing away
    // from it, so the first one sees a moderate drop of psi.
    const double d = increasing ? b : a;
    const double sgn = increasing ? -1.0 : 1.0;
    const double phd = increasing ? pb : pa;
    const double psd = psi(d, phd, speed);
    // A layer far thinner than the cell cannot be resolved in floating point
    // near large t; its integral is exp(psi_d) / |psi'(d)| to relative order
    // psi'' / psi'^2.
    double slope = -rate_(d);
    if (speed) {
      const double eps = 1e-6 * std::max(1.0, std::abs(d));
      slope = rate_(d) - (log_g2(d + eps) - log_g2(std::max(0.0, d - eps))) / (d + eps - std::max(0.0, d - eps));
    }
    if (std::abs(slope) * w * 1e-6 > 1.0) return psd - std::log(std::abs(slope));

    double w0 = w / kSamples;
    for (int it = 0; it < 80; ++it) {
      const double t = d + sgn * w0;
      if (psd - psi(t, phi_from(d, phd, t), speed) <= 0.5) break;
      w0 *= 0.5;
    }
    double acc = kNegInf, su = 0.0, phu = phd, psu = psd, step = w0;
    for (;;) {
      const double sv = std::min(su + step, w);
      const double tu = d + sgn * su, tv = d + sgn * sv;
      const double phv = phi_from(tu, phu, tv);
      const double psv = psi(tv, phv, speed);
      acc = detail::log_add(acc, detail::log_integral_loglinear(psu, psv, sv - su));
      if (sv >= w || psv < psd - 60.0) break;
      su = sv;
      phu = phv;
      psu = psv;
      step *= 2.0;
    }
    return acc;
  }

  const ModelSpec& model_;
  double x_, anchor_;
  int dir_;
  std::function<double(double)> rate_;
  std::vector<double> nodes_, phi_, dphi_, log_s_, log_m_;
};

// Convergence judgement on a nondecreasing sequence of (log) partial values
// taken at successive domain doublings.
Verdict judge(const std::vector<double>& logp, std::string& note) {
  const std::size_t n = logp.size();
  if (n < 6) {
    note = "too few doublings";
    return Verdict::inconclusive;
  }
  if (logp.back() == kNegInf) {
    note = "identically zero";
    return Verdict::yes;
  }
  std::vector<double> rel(n, 1.0), logd(n, kNegInf);
  for (std::size_t j = 1; j < n; ++j) {
    if (logp[j] == kNegInf) continue;
    const double diff = logp[j - 1] - logp[j];
    rel[j] = logp[j - 1] == kNegInf ? 1.0 : -std::expm1(std::min(diff, 0.0));
    logd[j] = rel[j] > 0.0 ? logp[j] + std::log(rel[j]) : kNegInf;
  }
  std::ostringstream msg;
  if (rel[n - 1] <= kConvergenceIncrement && rel[n - 2] <= kConvergenceIncrement) {
    msg << "relative increment " << rel[n - 1] << " at the last doubling";
    note = msg.str();
    return Verdict::yes;
  }
  const double log_ratio = std::log(0.99);
  const bool nondecaying = logd[n - 1] > kNegInf && logd[n - 1] - logd[n - 2] >= log_ratio;
  if (logp[n - 1] > std::log(kDivergenceCap) && nondecaying) {
    msg << "partial value exp(" << logp[n - 1] << ") exceeds " << kDivergenceCap
        << " with non-decaying increments";
    note = msg.str();
    return Verdict::no;
  }
  bool flat = true;
  for (std::size_t j = n - 5; j < n; ++j) {
    flat = flat && logd[j] > kNegInf && logd[j - 1] > kNegInf && logd[j] - logd[j - 1] >= log_ratio;
  }
  if (flat) {
    msg << "increments per doubling stay constant (logarithmic growth), last increment exp("
        << logd[n - 1] << ")";
    note = msg.str();
    return Verdict::no;
  }
  msg << "neither converged nor diverged after " << n - 1 << " doublings (relative increment "
      << rel[n - 1] << ")";
  note = msg.str();
  return Verdict::inconclusive;
}

// Integral over cell [a, b] of exp(l), l linear between node values.
double log_cell(double l0, double l1, double w) {
  if (l0 == kNegInf || l1 == kNegInf) return std::log(0.5 * w) + std::max(l0, l1);
  return detail::log_integral_loglinear(l0, l1, w);
}

Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::no || b == Verdict::no) return Verdict::no;
  if (a == Verdict::yes && b == Verdict::yes) return Verdict::yes;
  return Verdict::inconclusive;
}

struct EndVerdicts {
  Verdict ergodic, exp, strong;
};

EndVerdicts classify_end(const EndProfile& e, const std::string& end,
                         std::vector<CriterionIntegral>& out) {
  // Everything is accumulated relative to the local potential so that huge
  // potentials cancel analytically:
  //   h[k] = log(M([0, t_k]) s(t_k)),  tail[k] = log(M([t_k, inf)) s(t_k)),
  //   g[k] = log(S([0, t_k]) / s(t_k)).
  const std::size_t n = e.nodes();
  std::vector<double> m_head(n, kNegInf), h(n, kNegInf), g(n, kNegInf), tail(n, kNegInf);
  for (std::size_t k = 1; k < n; ++k) {
    m_head[k] = detail::log_add(m_head[k - 1], e.phi(k - 1) + e.log_m_cell(k - 1));
    h[k] = detail::log_add(h[k - 1], e.log_m_cell(k - 1)) - e.dphi(k - 1);
    g[k] = detail::log_add(g[k - 1], e.log_s_cell(k - 1)) + e.dphi(k - 1);
  }
  for (std::size_t k = n - 1; k-- > 0;) {
    tail[k] = detail::log_add(e.log_m_cell(k), tail[k + 1] + e.dphi(k));
  }

  std::vector<double> i1(n), i3(n), q(n);
  for (std::size_t k = 0; k < n; ++k) {
    i1[k] = h[k];
    i3[k] = tail[k];
    q[k] = tail[k] + g[k];
  }
  const int jobs = kClassifyDoublings;
  std::vector<double> p_mass, p_rec, p_exp, p_strong;
  double acc1 = kNegInf, acc3 = kNegInf, sup = kNegInf;
  std::size_t k = 0;
  for (int j = 0; j <= jobs; ++j) {
    const std::size_t stop = EndProfile::node_of_power(j);
    for (; k < stop; ++k) {
      const double w = e.node(k + 1) - e.node(k);
      acc1 = detail::log_add(acc1, log_cell(i1[k], i1[k + 1], w));
      acc3 = detail::log_add(acc3, log_cell(i3[k], i3[k + 1], w));
      sup = std::max({sup, q[k], q[k + 1]});
    }
    p_mass.push_back(m_head[stop]);
    p_rec.push_back(acc1);
    p_exp.push_back(sup);
    p_strong.push_back(acc3);
  }
  auto record = [&](const std::string& name, const std::vector<double>& p) {
    CriterionIntegral c;
    c.name = name;
    c.end = end;
    c.log_value = p.back();
    c.doublings = jobs;
    c.finite = judge(p, c.note);
    if (!std::isfinite(c.log_value) && c.log_value != kNegInf) c.finite = Verdict::inconclusive;
    out.push_back(c);
    return c.finite;
  };
  const Verdict mass = record("speed-mass", p_mass);
  const Verdict rec = record("recurrence", p_rec);
  EndVerdicts v{};
  if (mass == Verdict::no || rec == Verdict::yes) {
    v.ergodic = Verdict::no;
  } else if (mass == Verdict::yes && rec == Verdict::no) {
    v.ergodic = Verdict::yes;
  } else {
    v.ergodic = Verdict::inconclusive;
  }
  if (mass == Verdict::no) {
    v.exp = v.strong = Verdict::no;
    return v;
  }
  v.exp = record("exponential", p_exp);
  v.strong = record("strong", p_strong);
  return v;
}

}  // namespace

ErgodicityReport classify(const ModelSpec& model, double x) {
  require_scalar(model, "classify");
  ErgodicityReport r;
  r.model = model.name;
  r.x = x;
  if (!model.slow_domain.contains(x)) {
    std::ostringstream msg;
    msg << "x = " << x << " lies outside the slow domain";
    throw DomainError(msg.str());
  }
  const StateDomain& dom = model.fast_domain;
  if (dom.kind == DomainKind::interval_reflecting) {
    r.ergodic = r.exp_ergodic = r.strongly_ergodic = Verdict::yes;
    for (const char* name : {"speed-mass", "recurrence", "exponential", "strong"}) {
      CriterionIntegral c;
      c.name = name;
      c.end = "bounded";
      c.finite = std::string(name) == "recurrence" ? Verdict::no : Verdict::yes;
      c.note = "compact reflecting interval";
      r.integrals.push_back(c);
    }
    r.diagnostics.push_back("bounded fast domain: a nondegenerate reflected diffusion is uniformly ergodic");
    return r;
  }

  try {
    const double anchor = dom.reference_point();
    EndVerdicts total{Verdict::yes, Verdict::yes, Verdict::yes};
    auto fold = [&](const EndVerdicts& v) {
      total.ergodic = combine(total.ergodic, v.ergodic);
      total.exp = combine(total.exp, v.exp);
      total.strong = combine(total.strong, v.strong);
    };
    fold(classify_end(EndProfile(model, x, anchor, +1), "upper", r.integrals));
    if (!dom.has_lower()) {
      fold(classify_end(EndProfile(model, x, anchor, -1), "lower", r.integrals));
    }
    r.ergodic = total.ergodic;
    r.exp_ergodic = total.exp;
    r.strongly_ergodic = total.strong;
  } catch (const Error& e) {
    r.ergodic = r.exp_ergodic = r.strongly_ergodic = Verdict::inconclusive;
    r.diagnostics.push_back(std::string("quadrature failed: ") + e.what());
    return r;
  }

  // Strong implies exponential implies ergodic.
  if (r.strongly_ergodic == Verdict::yes) {
    if (r.exp_ergodic == Verdict::no || r.ergodic == Verdict::no) {
      r.diagnostics.push_back("criteria disagree (strong without exponential ergodicity)");
      r.ergodic = r.exp_ergodic = r.strongly_ergodic = Verdict::inconclusive;
    } else {
      r.exp_ergodic = r.ergodic = Verdict::yes;
    }
  }
  if (r.exp_ergodic == Verdict::yes) {
    if (r.ergodic == Verdict::no) {
      r.diagnostics.push_back("criteria disagree (exponential without plain ergodicity)");
      r.ergodic = r.exp_ergodic = r.strongly_ergodic = Verdict::inconclusive;
    } else {
      r.ergodic = Verdict::yes;
    }
  }
  if (r.ergodic == Verdict::no) r.exp_ergodic = r.strongly_ergodic = Verdict::no;
  if (r.exp_ergodic == Verdict::no) r.strongly_ergodic = Verdict::no;
  r.diagnostics.push_back("the supremum over initial states in the decay bounds is not certified");
  return r;
}

// ---------------------------------------------------------------------------
// Exponential fits
// ---------------------------------------------------------------------------

ExpFit fit_exponential(std::span<const double> times, std::span<const double> values,
                       double ceiling, double floor) {
  if (times.size() != values.size()) throw DimensionError("times and values differ in length");
  std::vector<double> ts, ls;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] > floor && values[i] < ceiling && std::isfinite(values[i])) {
      ts.push_back(times[i]);
      ls.push_back(std::log(values[i]));
    }
  }
  ExpFit fit;
  fit.points = ts.size();
  if (ts.size() < 2) return fit;
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= n;
  ml /= n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stl += (ts[i] - mt) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  if (stt == 0.0) return fit;
  const double slope = stl / stt;
  const double intercept = ml - slope * mt;
  fit.rate = std::max(0.0, -slope);
  fit.amplitude = std::exp(intercept);
  fit.r2 = sll > 0.0 ? std::clamp(stl * stl / (stt * sll), 0.0, 1.0) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Forward equation
// ---------------------------------------------------------------------------

namespace {

// Finite-volume generator dp/dt = V^{-1} L p on a node grid, L tridiagonal:
//   (L p)_i = a_{i-1} p_{i-1} - (b_{i-1} + a_i) p_i + b_i p_{i+1}
// with face coefficients a_i, b_i between nodes i and i+1.
struct Generator {
  std::vector<double> volume, a, b, psi, face_weight;
};

Generator build_generator(const ModelSpec& model, double x, std::span<const double> grid) {
  require_scalar(model, "forward_pde_solve");
  const std::size_t n = grid.size();
  if (n < 3) throw ConfigError("forward solver needs at least three grid points");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("forward solver grid must be increasing");
  }
  Generator gen;
  const auto phi = potential_on_grid(model, x, grid);
  gen.psi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = scalar_g(model, x, grid[i]);
    gen.psi[i] = phi[i] - std::log(g * g);
  }
  gen.volume.assign(n, 0.0);
  gen.a.resize(n - 1);
  gen.b.resize(n - 1);
  gen.face_weight.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = grid[i + 1] - grid[i];
    gen.volume[i] += 0.5 * h;
    gen.volume[i + 1] += 0.5 * h;
    const double g = scalar_g(model, x, 0.5 * (grid[i] + grid[i + 1]));
    const double w = 0.5 * g * g / h;
    const double r = std::clamp(gen.psi[i + 1] - gen.psi[i], -600.0, 600.0);
    gen.face_weight[i] = w;
    gen.a[i] = w * std::exp(0.5 * r);
    gen.b[i] = w * std::exp(-0.5 * r);
  }
  return gen;
}

void apply_generator(const Generator& gen, std::span<const double> p, std::span<double> out) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double flux = gen.a[i] * p[i] - gen.b[i] * p[i + 1];
    out[i] -= flux;
    out[i + 1] += flux;
  }
}

// Solves (V - alpha L) p = rhs by the Thomas algorithm; the matrix is
// column diagonally dominant, so no pivoting is needed.
void solve_implicit(const Generator& gen, double alpha, std::span<const double> rhs,
                    std::span<double> p, std::vector<double>& cprime) {
  const std::size_t n = rhs.size();
  cprime.resize(n);
  auto diag = [&](std::size_t i) {
    double d = gen.volume[i];
    if (i > 0) d += alpha * gen.b[i - 1];
    if (i + 1 < n) d += alpha * gen.a[i];
    return d;
  };
  // Sub-diagonal (row i, column i-1): -alpha a_{i-1}; super (row i, col i+1): -alpha b_i.
  double denom = diag(0);
  cprime[0] = n > 1 ? -alpha * gen.b[0] / denom : 0.0;
  p[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    const double sub = -alpha * gen.a[i - 1];
    denom = diag(i) - sub * cprime[i - 1];
    cprime[i] = i + 1 < n ? -alpha * gen.b[i] / denom : 0.0;
    p[i] = (rhs[i] - sub * p[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) p[i] -= cprime[i] * p[i + 1];
}

double mass(const Generator& gen, std::span<const double> p) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m += gen.volume[i] * p[i];
  return m;
}

std::vector<Density1D> evolve(const Generator& gen, std::span<const double> grid,
                              std::vector<double> p, std::span<const double> times,
                              double first_step) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || (i > 0 && times[i] < times[i - 1])) {
      throw ConfigError("output times must be nonnegative and nondecreasing");
    }
  }
  const std::size_t n = p.size();
  const double m0 = mass(gen, p);
  for (auto& v : p) v /= m0;

  constexpr double gamma = 2.0 - std::numbers::sqrt2;
  constexpr int kStartupSteps = 40;
  constexpr double kRelativeStep = 0.02;
  std::vector<double> rhs(n), lp(n), stage(n), cprime;
  std::vector<Density1D> out;
  double t = 0.0, tau = first_step;
  int steps = 0;

  auto emit = [&] {
    const double drift = std::abs(mass(gen, p) - 1.0);
    if (drift > 1e-4) {
      std::ostringstream msg;
      msg << "forward solver lost mass: drift " << drift << " at t = " << t;
      throw ConservationError(msg.str());
    }
    std::vector<double> vals(p);
    for (auto& v : vals) v = std::max(v, 0.0);
    out.push_back(Density1D::from_unnormalized(std::vector<double>(grid.begin(), grid.end()),
                                               std::move(vals)));
  };

  for (double target : times) {
    while (t < target * (1.0 - 1e-14)) {
      double h = std::min(tau, target - t);
      if (steps < kStartupSteps) {
        // Implicit Euler while the initial layer is resolved.
        for (std::size_t i = 0; i < n; ++i) rhs[i] = gen.volume[i] * p[i];
        solve_implicit(gen, h, rhs, p, cprime);
        tau = std::min(tau * 1.3, std::max(first_step, kRelativeStep * (t + h)));
      } else {
        // TR-BDF2: trapezoid to t + gamma h, then BDF2 to t + h.
        apply_generator(gen, p, lp);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = gen.volume[i] * p[i] + 0.5 * gamma * h * lp[i];
        solve_implicit(gen, 0.5 * gamma * h, rhs, stage, cprime);
        const double c1 = 1.0 / (gamma * (2.0 - gamma));
        const double c0 = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
        for (std::size_t i = 0; i < n; ++i) rhs[i] = gen.volume[i] * (c1 * stage[i] - c0 * p[i]);
        solve_implicit(gen, (1.0 - gamma) / (2.0 - gamma) * h, rhs, p, cprime);
        tau = std::min(tau * 1.3, kRelativeStep * (t + h));
      }
      t += h;
      ++steps;
      for (double v : p) {
        if (!std::isfinite(v)) throw ConservationError("forward solver produced non-finite values");
      }
    }
    emit();
  }
  return out;
}

}  // namespace

std::vector<double> pde_grid(const ModelSpec& model, double x, double y0) {
  if (!model.fast_domain.contains(y0)) {
    std::ostringstream msg;
    msg << "y0 = " << y0 << " lies outside the fast domain";
    throw DomainError(msg.str());
  }
  auto grid = default_stationary_grid(model, x);
  auto extend = [&](bool upper) {
    const double edge = upper ? grid.back() : grid.front();
    const double h = upper ? grid[grid.size() - 1] - grid[grid.size() - 2] : grid[1] - grid[0];
    const double length = std::abs(y0 - edge) + 5.0;
    const std::size_t extra =
        std::min<std::size_t>(20000, static_cast<std::size_t>(std::ceil(length / std::min(h, 0.01))));
    std::vector<double> add(extra);
    for (std::size_t k = 0; k < extra; ++k) {
      add[k] = edge + (upper ? 1.0 : -1.0) * length * static_cast<double>(k + 1) /
                          static_cast<double>(extra);
    }
    if (upper) {
      grid.insert(grid.end(), add.begin(), add.end());
    } else {
      std::reverse(add.begin(), add.end());
      grid.insert(grid.begin(), add.begin(), add.end());
    }
  };
  if (y0 > grid.back()) extend(true);
  if (y0 < grid.front()) extend(false);
  return grid;
}

std::vector<Density1D> forward_pde_solve(const ModelSpec& model, double x, double y0,
                                         std::span<const double> times,
                                         std::span<const double> grid) {
  const Generator gen = build_generator(model, x, grid);
  if (y0 < grid.front() || y0 > grid.back()) throw DomainError("y0 lies outside the solver grid");
  const auto it = std::upper_bound(grid.begin(), grid.end(), y0);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - grid.begin()),
                                              grid.size() - 1);
  const double cell = grid[i] - grid[i - (i > 0 ? 1 : 0)];
  const double width = 2.0 * (cell > 0.0 ? cell : grid[1] - grid[0]);
  std::vector<double> p(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double z = (grid[k] - y0) / width;
    p[k] = std::exp(-0.5 * z * z);
  }
  const double g = scalar_g(model, x, y0);
  const double first = 0.01 * width * width / std::max(0.5 * g * g, 1e-12);
  return evolve(gen, grid, std::move(p), times, first);
}

Density1D forward_pde_solve(const ModelSpec& model, double x, double y0, double t,
                            std::span<const double> grid) {
  if (!(t > 0.0)) throw ConfigError("forward solve time must be positive");
  const double times[1] = {t};
  return forward_pde_solve(model, x, y0, times, grid).front();
}

std::vector<Density1D> forward_pde_solve(const ModelSpec& model, double x,
                                         const Density1D& initial, std::span<const double> times) {
  const Generator gen = build_generator(model, x, initial.grid);
  double first = 1e-4;
  for (double t : times) {
    if (t > 0.0) {
      first = std::min(first, 1e-4 * t);
      break;
    }
  }
  return evolve(gen, initial.grid, initial.values, times, first);
}

double relaxation_time(const ModelSpec& model, double x, std::span<const double> grid) {
  const Generator gen = build_generator(model, x, grid);
  const std::size_t n = grid.size();
  // Symmetrised with weights V_i exp(psi_i); off-diagonals lose the exponentials.
  Eigen::VectorXd diag(n), sub(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    if (i > 0) d += gen.b[i - 1];
    if (i + 1 < n) d += gen.a[i];
    diag[static_cast<Eigen::Index>(i)] = d / gen.volume[i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    sub[static_cast<Eigen::Index>(i)] =
        -gen.face_weight[i] / std::sqrt(gen.volume[i] * gen.volume[i + 1]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DomainError("spectral gap computation failed");
  const double gap = solver.eigenvalues()[1];
  if (!(gap > 0.0)) throw NotPositiveRecurrentError("generator has no spectral gap on the grid");
  return 1.0 / gap;
}

double relaxation_time(const ModelSpec& model, double x) {
  const auto grid = default_stationary_grid(model, x);
  return relaxation_time(model, x, grid);
}

DecayCurve tv_decay_curve(const ModelSpec& model, double x, double y0,
                          std::span<const double> times) {
  const auto grid = pde_grid(model, x, y0);
  const Density1D stat = stationary_density(model, x, grid);
  const auto sols = forward_pde_solve(model, x, y0, times, grid);
  DecayCurve c;
  c.times.assign(times.begin(), times.end());
  for (const auto& d : sols) c.values.push_back(tv_distance(d, stat));
  c.fit = fit_exponential(c.times, c.values, 1.0, 1e-9);
  return c;
}

DecayCurve tv_decay_curve(const ModelSpec& model, double x, const Density1D& initial,
                          std::span<const double> times) {
  const Density1D stat = stationary_density(model, x, initial.grid);
  const auto sols = forward_pde_solve(model, x, initial, times);
  DecayCurve c;
  c.times.assign(times.begin(), times.end());
  for (const auto& d : sols) c.values.push_back(tv_distance(d, stat));
  c.fit = fit_exponential(c.times, c.values, 1.0, 1e-9);
  return c;
}

DecayCurve w1_decay_coupling(const ModelSpec& model, double x, double y, double y_prime,
                             std::span<const double> times, const SimConfig& config) {
  if (times.empty()) throw ConfigError("decay curve needs at least one time");
  SimConfig cfg = config;
  cfg.horizon = std::max(times.back(), 2.0 * cfg.dt);
  const double xs[1] = {x}, ya[1] = {y}, yb[1] = {y_prime};
  const auto gaps = synchronous_coupling_gaps(model, xs, ya, yb, cfg);
  DecayCurve c;
  c.times.assign(times.begin(), times.end());
  for (double t : times) {
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::llround(t / cfg.dt)),
                                         gaps.size() - 1);
    c.values.push_back(gaps[k]);
  }
  const double top = *std::max_element(c.values.begin(), c.values.end());
  c.fit = fit_exponential(c.times, c.values, std::numeric_limits<double>::infinity(),
                          std::max(1e-300, 1e-9 * top));
  return c;
}

FittedRates estimate_rates(const ModelSpec& model, std::span<const double> xs, double y,
                           double y_prime, std::span<const double> times, const SimConfig& config) {
  if (xs.empty()) throw ConfigError("rate estimation needs at least one x");
  FittedRates r;
  for (double x : xs) {
    const auto tv = tv_decay_curve(model, x, y, times);
    const auto w1 = w1_decay_coupling(model, x, y, y_prime, times, config);
    if (tv.fit.points >= 2) {
      r.lambda1 = r.lambda1 ? std::min(*r.lambda1, tv.fit.rate) : tv.fit.rate;
      r.kappa1 = r.kappa1 ? std::max(*r.kappa1, tv.fit.amplitude) : tv.fit.amplitude;
    }
    if (w1.fit.points >= 2) {
      r.lambda2 = r.lambda2 ? std::min(*r.lambda2, w1.fit.rate) : w1.fit.rate;
      r.kappa2 = r.kappa2 ? std::max(*r.kappa2, w1.fit.amplitude) : w1.fit.amplitude;
    }
  }
  return r;
}

}  // namespace slowfast
