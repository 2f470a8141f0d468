#include "slowfast/io.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <string>

#include "slowfast/error.hpp"

namespace slowfast {

using nlohmann::json;

namespace {

// JSON has no infinities; they travel as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

double read_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw ConfigError("expected a number, got " + v.dump());
}

std::ostream& full(std::ostream& out) { return out << std::setprecision(17); }

}  // namespace

void to_json(json& j, const SimConfig& c) {
  j = json{{"epsilon", num(c.epsilon)},
           {"dt", c.dt},
           {"horizon", c.horizon},
           {"n_paths", c.n_paths},
           {"seed", c.seed},
           {"store", to_string(c.store)},
           {"stride", c.stride},
           {"fast_step_factor", c.fast_step_factor},
           {"x0", c.x0},
           {"y0", c.y0},
           {"freeze_fast", c.freeze_fast}};
}

void from_json(const json& j, SimConfig& c) {
  if (!j.is_object()) throw ConfigError("a simulation config must be a JSON object");
  static const std::set<std::string> known = {"epsilon", "dt",     "horizon", "n_paths",
                                              "seed",    "store",  "stride",  "fast_step_factor",
                                              "x0",      "y0",     "freeze_fast", "workers"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("epsilon")) c.epsilon = read_number(j["epsilon"]);
    if (j.contains("dt")) c.dt = read_number(j["dt"]);
    if (j.contains("horizon")) c.horizon = read_number(j["horizon"]);
    if (j.contains("n_paths")) c.n_paths = j["n_paths"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("store")) c.store = store_mode_from_string(j["store"].get<std::string>());
    if (j.contains("stride")) c.stride = j["stride"].get<std::size_t>();
    if (j.contains("fast_step_factor")) c.fast_step_factor = read_number(j["fast_step_factor"]);
    if (j.contains("x0")) c.x0 = j["x0"].get<std::vector<double>>();
    if (j.contains("y0")) c.y0 = j["y0"].get<std::vector<double>>();
    if (j.contains("freeze_fast")) c.freeze_fast = j["freeze_fast"].get<bool>();
    if (j.contains("workers")) c.workers = j["workers"].get<unsigned>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

void to_json(json& j, const StateDomain& d) {
  j = json{{"kind", to_string(d.kind)}, {"lower", num(d.lower)}, {"upper", num(d.upper)}};
}

void to_json(json& j, const AssumptionReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json parts = json::object();
    for (const auto& [name, value] : e.parts) parts[name] = num(value);
    entries.push_back({{"condition", e.condition},
                       {"status", to_string(e.status)},
                       {"estimated_constant", num(e.estimated_constant)},
                       {"witness", nums(e.witness)},
                       {"parts", parts},
                       {"note", e.note}});
  }
  j = json{{"model", r.model}, {"samples", r.samples}, {"entries", entries}};
}

void to_json(json& j, const Density1D& d) {
  j = json{{"points", d.size()}, {"grid", nums(d.grid)}, {"density", nums(d.values)}};
}

void to_json(json& j, const DistanceReport& r) {
  j = json{{"metric", to_string(r.metric)},
           {"value", num(r.value)},
           {"method", to_string(r.method)},
           {"resolution", r.resolution}};
}

void to_json(json& j, const ErgodicityReport& r) {
  json integrals = json::array();
  for (const auto& c : r.integrals) {
    integrals.push_back({{"name", c.name},
                         {"end", c.end},
                         {"finite", to_string(c.finite)},
                         {"log_value", num(c.log_value)},
                         {"doublings", c.doublings},
                         {"note", c.note}});
  }
  // Verdicts are booleans when decided and the string "inconclusive" otherwise.
  auto verdict = [](Verdict v) -> json {
    if (v == Verdict::inconclusive) return "inconclusive";
    return v == Verdict::yes;
  };
  j = json{{"model", r.model},
           {"x", num(r.x)},
           {"ergodic", verdict(r.ergodic)},
           {"exp_ergodic", verdict(r.exp_ergodic)},
           {"strongly_ergodic", verdict(r.strongly_ergodic)},
           {"integrals", integrals},
           {"fitted_rates",
            {{"kappa1", opt(r.fitted_rates.kappa1)},
             {"lambda1", opt(r.fitted_rates.lambda1)},
             {"kappa2", opt(r.fitted_rates.kappa2)},
             {"lambda2", opt(r.fitted_rates.lambda2)}}},
           {"diagnostics", r.diagnostics}};
}

void to_json(json& j, const DecayCurve& c) {
  j = json{{"times", nums(c.times)},
           {"values", nums(c.values)},
           {"fit",
            {{"amplitude", num(c.fit.amplitude)},
             {"rate", num(c.fit.rate)},
             {"r2", num(c.fit.r2)},
             {"points", c.fit.points}}}};
}

void to_json(json& j, const AveragedModel& m) {
  j = json{{"source", m.source},
           {"x_grid", nums(m.x_grid)},
           {"b_bar", nums(m.b_bar)},
           {"a_bar", nums(m.a_bar)},
           {"sigma_bar", nums(m.sigma_bar)},
           {"interpolation", m.interpolation},
           {"domain", m.domain}};
}

void to_json(json& j, const DiscontinuityProbe& p) {
  j = json{{"x0", num(p.x0)},
           {"deltas", nums(p.deltas)},
           {"values", nums(p.values)},
           {"value_at_x0", num(p.value_at_x0)},
           {"right_limit_estimate", num(p.right_limit_estimate)},
           {"gap", num(p.gap)}};
}

void to_json(json& j, const HolderFitReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"x1", num(p.x1)},
                     {"x2", num(p.x2)},
                     {"distance", num(p.distance)},
                     {"bound", num(p.bound)},
                     {"satisfied", p.satisfied}});
  }
  j = json{{"metric", to_string(r.metric)},
           {"model", r.model},
           {"pairs", pairs},
           {"fitted_exponent", num(r.fitted_exponent)},
           {"fitted_constant", num(r.fitted_constant)},
           {"r2", num(r.r2)},
           {"fitted_points", r.fitted_points},
           {"reference_exponent", num(r.reference_exponent)},
           {"bound_constant", num(r.bound_constant)},
           {"kappa", opt(r.kappa)},
           {"bound_satisfied", r.bound_satisfied}};
}

void to_json(json& j, const ConvergenceReport& r) {
  json functionals = json::array();
  for (const auto& f : r.functionals) {
    functionals.push_back(
        {{"name", f.name}, {"gap", nums(f.gap)}, {"standard_error", nums(f.standard_error)}});
  }
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"epsilon", num(b.epsilon)},
                      {"block", num(b.block)},
                      {"blocks", b.blocks},
                      {"paths", b.paths},
                      {"mean_gap", num(b.mean_gap)},
                      {"max_gap", num(b.max_gap)}});
  }
  j = json{{"model", r.model},
           {"horizon", num(r.horizon)},
           {"epsilons", nums(r.epsilons)},
           {"w1_terminal", nums(r.w1_terminal)},
           {"n_paths", r.n_paths},
           {"noise_floor", num(r.noise_floor)},
           {"seed", r.seed},
           {"config", r.config},
           {"functionals", functionals},
           {"blocks", blocks},
           {"scope", "terminal-time marginal only; path-space laws are not compared"}};
}

void to_json(json& j, const L2Report& r) {
  j = json{{"model", r.model},
           {"horizon", num(r.horizon)},
           {"epsilons", nums(r.epsilons)},
           {"mean_square_gap", nums(r.mean_square_gap)},
           {"standard_error", nums(r.standard_error)},
           {"relative_error", nums(r.relative_error)},
           {"w1_terminal", nums(r.w1_terminal)},
           {"predicted_limit", num(r.predicted_limit)},
           {"noise_floor", num(r.noise_floor)},
           {"sigma_bar", num(r.sigma_bar)},
           {"n_paths", r.n_paths},
           {"seed", r.seed},
           {"config", r.config}};
}

void write_density_csv(std::ostream& out, const Density1D& d) {
  full(out) << "y,density\n";
  for (std::size_t i = 0; i < d.size(); ++i) out << d.grid[i] << ',' << d.values[i] << '\n';
}

void write_samples_csv(std::ostream& out, const EmpiricalMeasure& m) {
  full(out) << "sample\n";
  for (double s : m.samples) out << s << '\n';
}

void write_averaged_csv(std::ostream& out, const AveragedModel& m) {
  full(out) << "x,b_bar,a_bar,sigma_bar\n";
  for (std::size_t i = 0; i < m.x_grid.size(); ++i) {
    out << m.x_grid[i] << ',' << m.b_bar[i] << ',' << m.a_bar[i] << ',' << m.sigma_bar[i] << '\n';
  }
}

void write_curve_csv(std::ostream& out, const DecayCurve& c) {
  full(out) << "t,value\n";
  for (std::size_t i = 0; i < c.times.size(); ++i) out << c.times[i] << ',' << c.values[i] << '\n';
}

void write_holder_csv(std::ostream& out, const HolderFitReport& r) {
  full(out) << "x1,x2,distance,bound,satisfied\n";
  for (const auto& p : r.pairs) {
    out << p.x1 << ',' << p.x2 << ',' << p.distance << ',' << p.bound << ','
        << (p.satisfied ? "true" : "false") << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& r) {
  full(out) << "epsilon,w1_terminal,noise_floor\n";
  for (std::size_t i = 0; i < r.epsilons.size(); ++i) {
    out << r.epsilons[i] << ',' << r.w1_terminal[i] << ',' << r.noise_floor << '\n';
  }
}

void write_l2_csv(std::ostream& out, const L2Report& r) {
  full(out) << "epsilon,mean_square_gap,standard_error,relative_error,w1_terminal,"
               "predicted_limit,noise_floor\n";
  for (std::size_t i = 0; i < r.epsilons.size(); ++i) {
    out << r.epsilons[i] << ',' << r.mean_square_gap[i] << ',' << r.standard_error[i] << ','
        << r.relative_error[i] << ',' << r.w1_terminal[i] << ',' << r.predicted_limit << ','
        << r.noise_floor << '\n';
  }
}

namespace {

void flatten(std::ostream& out, const json& j, const std::string& prefix) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      flatten(out, value, prefix.empty() ? key : prefix + "." + key);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(out, j[i], prefix + "." + std::to_string(i));
  } else {
    std::string text = j.is_string() ? j.get<std::string>() : j.dump();
    if (text.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      text = quoted + "\"";
    }
    out << prefix << ',' << text << '\n';
  }
}

}  // namespace

void write_key_value_csv(std::ostream& out, const json& j) {
  out << "key,value\n";
  flatten(out, j, "");
}

}  // namespace slowfast
