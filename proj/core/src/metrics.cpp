#include "slowfast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "slowfast/error.hpp"
#include "transport.hpp"

namespace slowfast {

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::tv:
      return "tv";
    case Metric::w1:
      return "w1";
    case Metric::wbl:
      return "wbl";
  }
  return "unknown";
}

std::string to_string(DistanceMethod method) {
  switch (method) {
    case DistanceMethod::quadrature:
      return "quadrature";
    case DistanceMethod::cdf_integral:
      return "cdf-integral";
    case DistanceMethod::sorted_samples:
      return "sorted-samples";
    case DistanceMethod::discrete_transport:
      return "discrete-transport";
  }
  return "unknown";
}

Metric metric_from_string(const std::string& text) {
  if (text == "tv") return Metric::tv;
  if (text == "w1") return Metric::w1;
  if (text == "wbl") return Metric::wbl;
  throw RegistryError("unknown metric '" + text + "' (tv, w1, wbl)");
}

// ---------------------------------------------------------------------------
// Discrete measures
// ---------------------------------------------------------------------------

DiscreteMeasure DiscreteMeasure::from_atoms(std::vector<double> positions,
                                            std::vector<double> weights) {
  if (positions.size() != weights.size() || positions.empty()) {
    throw DomainError("discrete measure needs matching, nonempty positions and weights");
  }
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  DiscreteMeasure m;
  double total = 0.0;
  for (std::size_t k : order) {
    const double x = positions[k], w = weights[k];
    if (!std::isfinite(x) || !(w >= 0.0) || !std::isfinite(w)) {
      throw DomainError("discrete atoms must be finite with nonnegative weight");
    }
    if (w == 0.0) continue;
    total += w;
    if (!m.positions.empty() && m.positions.back() == x) {
      m.weights.back() += w;
    } else {
      m.positions.push_back(x);
      m.weights.push_back(w);
    }
  }
  if (!(total > 0.0)) throw DomainError("discrete measure has zero mass");
  for (auto& w : m.weights) w /= total;
  return m;
}

DiscreteMeasure DiscreteMeasure::point_mass(double at) { return from_atoms({at}, {1.0}); }

namespace {

// Integral of y * rho(y) from the grid start to y.
class FirstMoment {
 public:
  explicit FirstMoment(const Density1D& d) : d_(d), cum_(d.size(), 0.0) {
    for (std::size_t i = 1; i < d.size(); ++i) cum_[i] = cum_[i - 1] + partial(i - 1, d.grid[i]);
  }

  double at(double y) const {
    if (y <= d_.grid.front()) return 0.0;
    if (y >= d_.grid.back()) return cum_.back();
    const auto it = std::upper_bound(d_.grid.begin(), d_.grid.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - d_.grid.begin()) - 1;
    return cum_[i] + partial(i, y);
  }

 private:
  double partial(std::size_t i, double y) const {
    const double g = d_.grid[i], v = d_.values[i];
    const double s = (d_.values[i + 1] - v) / (d_.grid[i + 1] - g);
    const double t = y - g;
    return g * v * t + (g * s + v) * t * t / 2.0 + s * t * t * t / 3.0;
  }

  const Density1D& d_;
  std::vector<double> cum_;
};

}  // namespace

DiscreteMeasure atomize(const Density1D& d, std::size_t atoms) {
  if (atoms == 0) throw ConfigError("atomize needs at least one atom");
  const FirstMoment m1(d);
  std::vector<double> pos(atoms), w(atoms, 1.0 / static_cast<double>(atoms));
  double a = d.quantile(0.0);
  for (std::size_t k = 0; k < atoms; ++k) {
    const double b = k + 1 == atoms ? d.upper() : d.quantile(static_cast<double>(k + 1) /
                                                            static_cast<double>(atoms));
    const double mass = d.cdf_at(b) - d.cdf_at(a);
    double centre = 0.5 * (a + b);
    if (mass > 1e-300) centre = std::clamp((m1.at(b) - m1.at(a)) / mass, a, b);
    pos[k] = centre;
    a = b;
  }
  return DiscreteMeasure::from_atoms(std::move(pos), std::move(w));
}

DiscreteMeasure atomize(const EmpiricalMeasure& m) {
  return DiscreteMeasure::from_atoms(m.samples, std::vector<double>(m.size(), 1.0));
}

DiscreteMeasure coarsen(const DiscreteMeasure& m, std::size_t atoms) {
  if (atoms == 0) throw ConfigError("coarsen needs at least one atom");
  if (m.size() <= atoms) return m;
  std::vector<double> pos, w;
  double mass = 0.0, moment = 0.0, cum = 0.0;
  std::size_t group = 1;
  for (std::size_t i = 0; i < m.size(); ++i) {
    mass += m.weights[i];
    moment += m.weights[i] * m.positions[i];
    cum += m.weights[i];
    const bool last = i + 1 == m.size();
    if (last || cum >= static_cast<double>(group) / static_cast<double>(atoms) - 1e-12) {
      if (mass > 0.0) {
        pos.push_back(moment / mass);
        w.push_back(mass);
      }
      mass = moment = 0.0;
      ++group;
    }
  }
  return DiscreteMeasure::from_atoms(std::move(pos), std::move(w));
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

namespace {

std::vector<double> union_grid(const Density1D& p, const Density1D& q) {
  std::vector<double> u;
  u.reserve(p.size() + q.size());
  std::merge(p.grid.begin(), p.grid.end(), q.grid.begin(), q.grid.end(), std::back_inserter(u));
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

// Exact integral over a cell of |linear function| with end values d0, d1.
double abs_linear(double d0, double d1, double h) {
  if (d0 * d1 >= 0.0) return 0.5 * (std::abs(d0) + std::abs(d1)) * h;
  return 0.5 * h * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
}

// Right/left-limit values so a density that jumps to zero at its grid end is
// handled cell by cell.
double value_in_cell(const Density1D& d, double y, double other_end) {
  if (y < d.lower() || y > d.upper()) return 0.0;
  if (y == d.lower() && other_end < y) return 0.0;
  if (y == d.upper() && other_end > y) return 0.0;
  return d.value_at(y);
}

}  // namespace

double tv_distance(const Density1D& p, const Density1D& q) {
  const auto u = union_grid(p, q);
  double total = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double a = u[i - 1], b = u[i];
    const double d0 = value_in_cell(p, a, b) - value_in_cell(q, a, b);
    const double d1 = value_in_cell(p, b, a) - value_in_cell(q, b, a);
    total += abs_linear(d0, d1, b - a);
  }
  return std::min(total, 2.0);
}

double tv_distance(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < p.size() || j < q.size()) {
    if (j == q.size() || (i < p.size() && p.positions[i] < q.positions[j])) {
      total += p.weights[i++];
    } else if (i == p.size() || q.positions[j] < p.positions[i]) {
      total += q.weights[j++];
    } else {
      total += std::abs(p.weights[i++] - q.weights[j++]);
    }
  }
  return std::min(total, 2.0);
}

double w1_density(const Density1D& p, const Density1D& q) {
  // A density with a heavy first-moment tail cannot be compared in W1.
  expectation(p, [](double y) { return std::abs(y); });
  expectation(q, [](double y) { return std::abs(y); });
  const auto u = union_grid(p, q);
  double total = 0.0;
  // F is piecewise quadratic on the union grid; Simpson is exact per cell
  // unless the difference changes sign inside, where the cell is split.
  auto diff = [&](double y) { return p.cdf_at(y) - q.cdf_at(y); };
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double a = u[i - 1], b = u[i], mid = 0.5 * (a + b);
    const double fa = diff(a), fm = diff(mid), fb = diff(b);
    if ((fa >= 0 && fm >= 0 && fb >= 0) || (fa <= 0 && fm <= 0 && fb <= 0)) {
      total += std::abs((b - a) / 6.0 * (fa + 4.0 * fm + fb));
    } else {
      constexpr int k = 16;
      double prev = std::abs(fa);
      for (int s = 1; s <= k; ++s) {
        const double y = a + (b - a) * s / k;
        const double cur = std::abs(diff(y));
        total += 0.5 * (prev + cur) * (b - a) / k;
        prev = cur;
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Samples and atoms
// ---------------------------------------------------------------------------

double w1_discrete(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  // Integral of |F_p - F_q| between consecutive merged support points.
  double total = 0.0, fp = 0.0, fq = 0.0;
  std::size_t i = 0, j = 0;
  double prev = std::min(p.positions.front(), q.positions.front());
  while (i < p.size() || j < q.size()) {
    double next;
    if (j == q.size() || (i < p.size() && p.positions[i] <= q.positions[j])) {
      next = p.positions[i];
    } else {
      next = q.positions[j];
    }
    total += std::abs(fp - fq) * (next - prev);
    while (i < p.size() && p.positions[i] == next) fp += p.weights[i++];
    while (j < q.size() && q.positions[j] == next) fq += q.weights[j++];
    prev = next;
  }
  return total;
}

double w1_empirical(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() == 0 || b.size() == 0) throw DomainError("w1_empirical needs nonempty samples");
  if (a.size() == b.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a.samples[i] - b.samples[i]);
    return total / static_cast<double>(a.size());
  }
  // Unequal sizes: integrate |F_a - F_b| between merged order statistics.
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double prev = std::min(a.samples.front(), b.samples.front());
  while (i < a.size() || j < b.size()) {
    const double next = (j == b.size() || (i < a.size() && a.samples[i] <= b.samples[j]))
                            ? a.samples[i]
                            : b.samples[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - prev);
    while (i < a.size() && a.samples[i] == next) ++i;
    while (j < b.size() && b.samples[j] == next) ++j;
    prev = next;
  }
  return total;
}

double wbl_distance(const DiscreteMeasure& p_in, const DiscreteMeasure& q_in) {
  // Solve in a canonical orientation so that swapping the arguments repeats
  // the same floating-point operations.
  const bool swap = std::tie(q_in.positions, q_in.weights) < std::tie(p_in.positions, p_in.weights);
  const DiscreteMeasure& p = swap ? q_in : p_in;
  const DiscreteMeasure& q = swap ? p_in : q_in;
  if (p.size() > kMaxTransportAtoms || q.size() > kMaxTransportAtoms) {
    std::ostringstream msg;
    msg << "bounded-Lipschitz transport needs at most " << kMaxTransportAtoms << " atoms per side, got "
        << p.size() << " and " << q.size() << "; coarsen the inputs first";
    throw ResolutionError(msg.str());
  }
  // Mass sitting at a common position costs nothing; cancel it first.
  std::vector<double> sp = p.weights, sq = q.weights;
  for (std::size_t i = 0, j = 0; i < p.size() && j < q.size();) {
    if (p.positions[i] < q.positions[j]) {
      ++i;
    } else if (q.positions[j] < p.positions[i]) {
      ++j;
    } else {
      const double common = std::min(sp[i], sq[j]);
      sp[i] -= common;
      sq[j] -= common;
      ++i;
      ++j;
    }
  }
  const double value = detail::transport_cost(sp, sq, [&](std::size_t i, std::size_t j) {
    return std::min(std::abs(p.positions[i] - q.positions[j]), 2.0);
  });
  return std::clamp(value, 0.0, 2.0);
}

double wbl_distance(const Density1D& p, const Density1D& q) {
  return wbl_distance(atomize(p), atomize(q));
}

double wbl_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return wbl_distance(atomize(a), atomize(b));
}

DistanceReport distance(Metric metric, const Density1D& p, const Density1D& q) {
  DistanceReport r;
  r.metric = metric;
  switch (metric) {
    case Metric::tv:
      r.value = tv_distance(p, q);
      r.method = DistanceMethod::quadrature;
      r.resolution = union_grid(p, q).size();
      break;
    case Metric::w1:
      r.value = w1_density(p, q);
      r.method = DistanceMethod::cdf_integral;
      r.resolution = union_grid(p, q).size();
      break;
    case Metric::wbl:
      r.value = wbl_distance(p, q);
      r.method = DistanceMethod::discrete_transport;
      r.resolution = kMaxTransportAtoms;
      break;
  }
  return r;
}

DistanceReport distance(Metric metric, const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  DistanceReport r;
  r.metric = metric;
  switch (metric) {
    case Metric::tv:
      r.value = tv_distance(atomize(a), atomize(b));
      r.method = DistanceMethod::quadrature;
      r.resolution = a.size() + b.size();
      break;
    case Metric::w1:
      r.value = w1_empirical(a, b);
      r.method = a.size() == b.size() ? DistanceMethod::sorted_samples
                                      : DistanceMethod::cdf_integral;
      r.resolution = std::max(a.size(), b.size());
      break;
    case Metric::wbl: {
      const auto pa = coarsen(atomize(a)), pb = coarsen(atomize(b));
      r.value = wbl_distance(pa, pb);
      r.method = DistanceMethod::discrete_transport;
      r.resolution = std::max(pa.size(), pb.size());
      break;
    }
  }
  return r;
}

}  // namespace slowfast
