#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "slowfast/averaging.hpp"
#include "slowfast/ergodicity.hpp"
#include "slowfast/error.hpp"
#include "slowfast/experiments.hpp"
#include "slowfast/io.hpp"
#include "slowfast/metrics.hpp"
#include "slowfast/models.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/stationary.hpp"
#include "slowfast/version.hpp"

namespace slowfast::cli {

using nlohmann::json;

namespace {

// Parses "a:b:step" or a comma-separated list.
std::vector<double> parse_list(const std::string& text, const char* what) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw ConfigError(std::string("malformed ") + what + " entry '" + s + "'");
    }
    return v;
  };
  std::vector<std::string> parts;
  std::string item;
  std::stringstream in(text);
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  while (std::getline(in, item, sep)) parts.push_back(item);
  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 3) throw ConfigError(std::string(what) + " range must be a:b:step");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || !(b >= a)) throw ConfigError(std::string(what) + " range needs a <= b, step > 0");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  for (const auto& p : parts) out.push_back(number(p));
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::string item;
  std::stringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("pairs are written x1:x2,x1:x2,...");
    const auto a = parse_list(item.substr(0, colon), "pair");
    const auto b = parse_list(item.substr(colon + 1), "pair");
    out.emplace_back(a.at(0), b.at(0));
  }
  if (out.empty()) throw ConfigError("no pairs given");
  return out;
}

// Flat key = value file mirroring SimConfig.
SimConfig load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  json j = json::object();
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("config sections are not supported ('" + key + "')");
    const std::string value = node.data();
    if (key == "store") {
      j[key] = value;
    } else if (key == "freeze_fast") {
      if (value != "true" && value != "false") throw ConfigError("freeze_fast must be true or false");
      j[key] = value == "true";
    } else if (key == "x0" || key == "y0") {
      j[key] = parse_list(value, key.c_str());
    } else if (key == "n_paths" || key == "seed" || key == "stride" || key == "workers") {
      try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        j[key] = v;
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' needs a nonnegative integer");
      }
    } else if (key == "epsilon" && (value == "inf" || value == "infinity")) {
      j[key] = "inf";
    } else {
      j[key] = parse_list(value, key.c_str()).at(0);
    }
  }
  return j.get<SimConfig>();
}

json config_params(const SimConfig& c) {
  json j = c;  // workers never enters the report
  return j;
}

// Deterministic stand-in for a density: its quantiles at the midpoints (i + 1/2) / n.
EmpiricalMeasure quantile_samples(const Density1D& d, std::size_t n) {
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = d.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return EmpiricalMeasure::from_samples(std::move(q));
}

struct Output {
  json report;
  json params;
  std::function<void(std::ostream&)> csv;
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

std::vector<std::string> replace_flag(std::vector<std::string> args, const std::string& flag,
                                      const std::string& value) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag) {
      ++i;
      continue;
    }
    if (args[i].rfind(flag + "=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  if (!value.empty()) {
    out.push_back(flag);
    out.push_back(value);
  }
  return out;
}

const char* kCsvHelp =
    "CSV columns by command:\n"
    "  stationary  y,density (sample with --empirical)\n"
    "  averaged    x,b_bar,a_bar,sigma_bar\n"
    "  decay       t,value\n"
    "  holder      x1,x2,distance,bound,satisfied\n"
    "  converge    epsilon,w1_terminal,noise_floor\n"
    "  l2fail      epsilon,mean_square_gap,standard_error,relative_error,w1_terminal,"
    "predicted_limit,noise_floor\n"
    "  others      key,value (flattened report)\n";

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for slow-fast diffusions and their averaged limits", "slowfast"};
  app.footer(kCsvHelp);
  app.require_subcommand(1);
  app.fallthrough();

  std::string model_name, out_path, format = "json", config_path;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  double epsilon = 1.0, dt = 1e-2, horizon = 1.0;
  std::size_t n_paths = 1000;
  auto* model_opt = app.add_option("--model", model_name, "Built-in model name");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config file)");
  app.add_option("--out", out_path, "Report path; a <out>.manifest.json is written next to it");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--config", config_path, "Flat key = value file mirroring the simulation config")
      ->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "Worker threads (0 = all cores); never changes results");
  auto* eps_opt = app.add_option("--epsilon", epsilon, "Time-scale ratio");
  auto* dt_opt = app.add_option("--dt", dt, "Macro time step");
  auto* horizon_opt = app.add_option("--horizon", horizon, "Final time T");
  auto* paths_opt = app.add_option("--n-paths", n_paths, "Monte Carlo paths");

  auto* list_cmd = app.add_subcommand("list-models", "Registry of built-in models");

  double x = 0.0, x2 = 0.0, burn_in = 0.0, y = 0.0, y_prime = 0.0;
  std::size_t points = kDefaultGridPoints;
  bool empirical = false;
  auto* stat_cmd = app.add_subcommand("stationary", "Invariant density of the frozen fast process");
  stat_cmd->add_option("--x", x, "Frozen slow state")->required();
  stat_cmd->add_option("--points", points, "Grid points");
  stat_cmd->add_flag("--empirical", empirical, "Pool simulated states instead of quadrature");
  auto* burn_opt = stat_cmd->add_option("--burn-in", burn_in, "Burn-in time (default horizon/2)");

  bool rates = false;
  std::string times_text = "0.5:8:0.5";
  auto* cls_cmd = app.add_subcommand("classify", "Ergodicity verdicts from integral criteria");
  cls_cmd->add_option("--x", x, "Frozen slow state")->required();
  cls_cmd->add_flag("--rates", rates, "Also fit TV and coupling decay rates");
  cls_cmd->add_option("--y", y, "Start for the rate fits");
  cls_cmd->add_option("--y-prime", y_prime, "Second start for the coupling fit");
  cls_cmd->add_option("--times", times_text, "Fit times, a:b:step or a list");

  std::string metric_name = "w1";
  double x1 = 0.0;
  auto* dist_cmd = app.add_subcommand("distance", "Distance between invariant laws at two slow states");
  dist_cmd->add_option("--metric", metric_name, "tv, w1 or wbl")
      ->check(CLI::IsMember({"tv", "w1", "wbl"}));
  dist_cmd->add_option("--x1", x1, "First slow state")->required();
  dist_cmd->add_option("--x2", x2, "Second slow state")->required();
  dist_cmd->add_flag("--empirical", empirical, "Compare pooled simulated states");
  dist_cmd->add_option("--burn-in", burn_in, "Burn-in time for --empirical (default horizon/2)");

  std::string grid_text, probe_text;
  bool closed_form = false, allow_degenerate = false;
  double probe_x0 = 0.0;
  auto* avg_cmd = app.add_subcommand("averaged", "Tabulated averaged coefficients");
  avg_cmd->add_option("--x-grid", grid_text, "Nodes, a:b:step or a list")->required();
  avg_cmd->add_flag("--closed-form", closed_form, "Use the model's closed form instead of quadrature");
  avg_cmd->add_flag("--allow-degenerate", allow_degenerate, "Accept a vanishing averaged diffusion");
  auto* probe_opt = avg_cmd->add_option("--probe-x0", probe_x0, "Also probe the drift for a jump at x0");
  avg_cmd->add_option("--probe-deltas", probe_text, "Probe offsets (default 0.1,0.05,0.025,0.0125)");

  std::string pairs_text;
  double lambda = 0.0, k3 = 0.0, kappa = 0.0, exponent = 0.0, constant = 0.0;
  auto* hold_cmd = app.add_subcommand("holder", "Hoelder fit of x -> invariant law");
  hold_cmd->add_option("--metric", metric_name, "tv, w1 or wbl")
      ->check(CLI::IsMember({"tv", "w1", "wbl"}));
  hold_cmd->add_option("--pairs", pairs_text, "x1:x2,x1:x2,...")->required();
  auto* lambda_opt = hold_cmd->add_option("--lambda", lambda, "Coupling rate (fitted when omitted)");
  auto* k3_opt = hold_cmd->add_option("--K3", k3, "x-Lipschitz constant of f (estimated when omitted)");
  auto* kappa_opt = hold_cmd->add_option("--kappa", kappa, "Crossover of the two-regime bound");
  auto* exp_opt = hold_cmd->add_option("--exponent", exponent, "Reference exponent");
  auto* const_opt = hold_cmd->add_option("--constant", constant, "Constant of the power branch");

  std::string eps_text = "0.1,0.03,0.01";
  bool battery = false, blocks = false;
  auto* conv_cmd = app.add_subcommand("converge", "Terminal-law convergence to the averaged limit");
  conv_cmd->add_option("--epsilons", eps_text, "Epsilon ladder (inf = frozen fast dynamics)");
  conv_cmd->add_flag("--battery", battery, "Bounded test-function gaps");
  conv_cmd->add_flag("--blocks", blocks, "Per-block frozen-vs-true fast-path gaps");
  conv_cmd->add_flag("--allow-degenerate", allow_degenerate, "Accept degenerate models");

  double constant_sigma = 0.0;
  auto* l2_cmd = app.add_subcommand("l2fail", "Mean-square gap on pure-fast-l2 with shared noise");
  l2_cmd->add_option("--epsilons", eps_text, "Epsilon ladder");
  auto* csig_opt = l2_cmd->add_option("--constant-sigma", constant_sigma, "Replace sigma(y) = y by a constant");

  std::string kind = "tv";
  auto* decay_cmd = app.add_subcommand("decay", "Decay of the frozen fast law towards equilibrium");
  decay_cmd->add_option("--kind", kind, "tv (forward PDE) or coupling (synchronous coupling)")
      ->check(CLI::IsMember({"tv", "coupling"}));
  decay_cmd->add_option("--x", x, "Frozen slow state")->required();
  decay_cmd->add_option("--y", y, "Start")->required();
  decay_cmd->add_option("--y-prime", y_prime, "Second start for --kind coupling");
  decay_cmd->add_option("--times", times_text, "Times, a:b:step or a list");

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay_cmd->add_option("--manifest", manifest_path, "Manifest file")->required()->check(CLI::ExistingFile);

  auto usage_error = [&](const std::string& message) {
    err << message << "\n\n" << app.help() << std::flush;
    return kExitUsage;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  auto diagnostic = [&](const std::string& kind_tag, const std::string& message, int code) {
    json e{{"error", kind_tag}, {"message", message}, {"exit_code", code}};
    err << e.dump() << '\n' << std::flush;
    return code;
  };

  std::string command;
  try {
    if (replay_cmd->parsed()) {
      std::ifstream in(manifest_path);
      json manifest;
      try {
        manifest = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
      }
      if (!manifest.contains("argv") || !manifest["argv"].is_array()) {
        throw ConfigError("manifest has no argv");
      }
      auto argv = manifest["argv"].get<std::vector<std::string>>();
      argv = replace_flag(argv, "--out", out_path);
      if (workers != 0) argv = replace_flag(argv, "--workers", std::to_string(workers));
      return cli_main(argv, out, err);
    }

    SimConfig config = config_path.empty() ? SimConfig{} : load_config(config_path);
    if (seed_opt->count()) config.seed = seed;
    if (eps_opt->count()) config.epsilon = epsilon;
    if (dt_opt->count()) config.dt = dt;
    if (horizon_opt->count()) config.horizon = horizon;
    if (paths_opt->count()) config.n_paths = n_paths;
    config.workers = workers;

    auto need_model = [&]() {
      if (!model_opt->count()) throw CLI::RequiredError("--model");
      return get_builtin(model_name);
    };

    Output result;
    if (list_cmd->parsed()) {
      command = "list-models";
      json models = json::array();
      for (const auto& name : builtin_names()) {
        const auto m = get_builtin(name);
        json constants = nullptr;
        if (m.assumption_constants) {
          const auto& c = *m.assumption_constants;
          auto o = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
          constants = {{"K1", o(c.K1)}, {"K2", o(c.K2)}, {"K3", o(c.K3)},
                       {"K4", o(c.K4)}, {"lambda3", o(c.lambda3)}};
        }
        models.push_back({{"name", m.name},
                          {"dx", m.dx},
                          {"dy", m.dy},
                          {"slow_domain", m.slow_domain},
                          {"fast_domain", m.fast_domain},
                          {"analytic", m.analytic.has_value()},
                          {"assumption_constants", constants},
                          {"default_x0", m.default_x0},
                          {"default_y0", m.default_y0}});
      }
      result.report = {{"models", models}};
      result.params = json::object();
    } else if (stat_cmd->parsed()) {
      command = "stationary";
      const auto model = need_model();
      result.params = {{"model", model.name}, {"x", x}, {"empirical", empirical}};
      if (empirical) {
        const double b = burn_opt->count() ? burn_in : config.horizon / 2.0;
        result.params["burn_in"] = b;
        result.params["config"] = config_params(config);
        const auto m = empirical_invariant(model, x, config, b);
        const auto d = stationary_density(model, x);
        result.report = {{"model", model.name},
                         {"x", x},
                         {"samples", m.samples},
                         {"moments", {{"m1", moment(m, 1)}, {"m2", moment(m, 2)}}},
                         {"w1_to_quadrature", w1_empirical(m, quantile_samples(d, 4096))}};
        result.csv = [m](std::ostream& o) { write_samples_csv(o, m); };
      } else {
        result.params["points"] = points;
        const auto grid = default_stationary_grid(model, x, points);
        const auto d = stationary_density(model, x, grid);
        json moments = {{"m1", moment(d, 1)}};
        try {
          moments["m2"] = moment(d, 2);
        } catch (const InfiniteMomentError&) {
          moments["m2"] = "infinite";
        }
        result.report = {{"model", model.name}, {"x", x}, {"density", d}, {"moments", moments}};
        result.csv = [d](std::ostream& o) { write_density_csv(o, d); };
      }
    } else if (cls_cmd->parsed()) {
      command = "classify";
      const auto model = need_model();
      result.params = {{"model", model.name}, {"x", x}, {"rates", rates}};
      auto report = classify(model, x);
      if (rates) {
        const auto times = parse_list(times_text, "times");
        result.params["y"] = y;
        result.params["y_prime"] = y_prime;
        result.params["times"] = times;
        result.params["config"] = config_params(config);
        const double xs[1] = {x};
        report.fitted_rates = estimate_rates(model, xs, y, y_prime, times, config);
      }
      result.report = report;
    } else if (dist_cmd->parsed()) {
      command = "distance";
      const auto model = need_model();
      const Metric metric = metric_from_string(metric_name);
      result.params = {{"model", model.name}, {"metric", metric_name}, {"x1", x1}, {"x2", x2},
                       {"empirical", empirical}};
      DistanceReport d;
      if (empirical) {
        const double b = burn_in > 0.0 ? burn_in : config.horizon / 2.0;
        result.params["burn_in"] = b;
        result.params["config"] = config_params(config);
        SimConfig c1 = config, c2 = config;
        c1.seed = mix_seed(config.seed, 1);
        c2.seed = mix_seed(config.seed, 2);
        d = distance(metric, empirical_invariant(model, x1, c1, b), empirical_invariant(model, x2, c2, b));
      } else {
        d = distance(metric, stationary_density(model, x1), stationary_density(model, x2));
      }
      result.report = {{"model", model.name}, {"x1", x1}, {"x2", x2}, {"distance", d}};
    } else if (avg_cmd->parsed()) {
      command = "averaged";
      const auto model = need_model();
      const auto grid = parse_list(grid_text, "x-grid");
      AveragingOptions opts;
      opts.allow_degenerate = allow_degenerate;
      opts.use_analytic = closed_form;
      opts.workers = workers;
      result.params = {{"model", model.name}, {"x_grid", grid}, {"closed_form", closed_form},
                       {"allow_degenerate", allow_degenerate}};
      const auto table = build_averaged_model(model, grid, opts);
      result.report = {{"averaged_model", table}};
      if (probe_opt->count()) {
        const auto deltas =
            probe_text.empty() ? std::vector<double>{0.1, 0.05, 0.025, 0.0125} : parse_list(probe_text, "deltas");
        result.params["probe_x0"] = probe_x0;
        result.params["probe_deltas"] = deltas;
        result.report["discontinuity_probe"] = discontinuity_probe(model, probe_x0, deltas);
      }
      result.csv = [table](std::ostream& o) { write_averaged_csv(o, table); };
    } else if (hold_cmd->parsed()) {
      command = "holder";
      const auto model = need_model();
      const Metric metric = metric_from_string(metric_name);
      const auto pairs = parse_pairs(pairs_text);
      HolderOptions opts;
      if (exp_opt->count()) opts.reference_exponent = exponent;
      if (kappa_opt->count()) opts.kappa = kappa;
      if (const_opt->count()) opts.bound_constant = constant;
      json pair_params = json::array();
      for (const auto& [a, b] : pairs) pair_params.push_back({a, b});
      result.params = {{"model", model.name}, {"metric", metric_name}, {"pairs", pair_params}};
      if (metric != Metric::tv && !opts.reference_exponent) {
        if (k3_opt->count()) {
          opts.K3 = k3;
        } else if (model.assumption_constants && model.assumption_constants->K3) {
          opts.K3 = *model.assumption_constants->K3;
        } else {
          const auto grid = random_assumption_grid(model, 1000, -3, 3, -3, 3, mix_seed(config.seed, 5));
          const auto assumptions = check_assumptions(model, grid);
          for (const auto& [name, value] : assumptions.at("B1").parts) {
            if (name == "x-lipschitz") opts.K3 = value;
          }
        }
        if (lambda_opt->count()) {
          opts.lambda = lambda;
        } else {
          // Smallest coupling rate over the probed slow states.
          std::vector<double> xs;
          for (const auto& [a, b] : pairs) {
            xs.push_back(a);
            xs.push_back(b);
          }
          std::sort(xs.begin(), xs.end());
          xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
          const auto times = parse_list(times_text, "times");
          double rate = std::numeric_limits<double>::infinity();
          for (double xv : xs) {
            const double yv = model.default_y0.empty() ? 0.0 : model.default_y0.front();
            const auto c = w1_decay_coupling(model, xv, yv + 1.0, yv - 1.0, times, config);
            rate = std::min(rate, c.fit.rate);
          }
          opts.lambda = rate;
          result.params["config"] = config_params(config);
          result.params["times"] = times;
        }
        result.params["lambda"] = *opts.lambda;
        result.params["K3"] = *opts.K3;
      }
      if (opts.reference_exponent) result.params["exponent"] = *opts.reference_exponent;
      if (opts.kappa) result.params["kappa"] = *opts.kappa;
      if (opts.bound_constant) result.params["constant"] = *opts.bound_constant;
      const auto report = holder_fit(metric, model, pairs, opts);
      result.report = report;
      result.csv = [report](std::ostream& o) { write_holder_csv(o, report); };
    } else if (conv_cmd->parsed()) {
      command = "converge";
      const auto model = need_model();
      std::vector<double> eps;
      std::stringstream in(eps_text);
      std::string item;
      while (std::getline(in, item, ',')) {
        eps.push_back(item == "inf" || item == "infinity" ? INFINITY : parse_list(item, "epsilons").at(0));
      }
      ConvergenceOptions opts;
      opts.allow_degenerate = allow_degenerate;
      opts.functional_battery = battery;
      opts.block_diagnostic = blocks;
      result.params = {{"model", model.name}, {"epsilons", json::array()}, {"battery", battery},
                       {"blocks", blocks}, {"allow_degenerate", allow_degenerate},
                       {"config", config_params(config)}};
      for (double e : eps) result.params["epsilons"].push_back(std::isinf(e) ? json("inf") : json(e));
      const auto report = run_averaging_convergence(model, eps, config, opts);
      result.report = report;
      result.csv = [report](std::ostream& o) { write_convergence_csv(o, report); };
    } else if (l2_cmd->parsed()) {
      command = "l2fail";
      const auto eps = parse_list(eps_text, "epsilons");
      L2Options opts;
      if (csig_opt->count()) opts.constant_sigma = constant_sigma;
      result.params = {{"epsilons", eps}, {"config", config_params(config)}};
      if (opts.constant_sigma) result.params["constant_sigma"] = *opts.constant_sigma;
      const auto report = run_l2_failure(config, eps, opts);
      result.report = report;
      result.csv = [report](std::ostream& o) { write_l2_csv(o, report); };
    } else if (decay_cmd->parsed()) {
      command = "decay";
      const auto model = need_model();
      const auto times = parse_list(times_text, "times");
      result.params = {{"model", model.name}, {"kind", kind}, {"x", x}, {"y", y}, {"times", times}};
      DecayCurve curve;
      if (kind == "tv") {
        curve = tv_decay_curve(model, x, y, times);
      } else {
        result.params["y_prime"] = y_prime;
        result.params["config"] = config_params(config);
        curve = w1_decay_coupling(model, x, y, y_prime, times, config);
      }
      result.report = curve;
      result.csv = [curve](std::ostream& o) { write_curve_csv(o, curve); };
    }

    json manifest{{"command", command},
                  {"seed", config.seed},
                  {"params", result.params},
                  {"artifact_version", kVersion}};
    std::string text;
    if (format == "csv") {
      std::ostringstream o;
      if (result.csv) {
        result.csv(o);
      } else {
        write_key_value_csv(o, result.report);
      }
      text = o.str();
    } else {
      json doc = manifest;
      doc["schema_version"] = kReportSchemaVersion;
      doc["report"] = result.report;
      text = doc.dump(2) + "\n";
    }
    if (out_path.empty()) {
      out << text << std::flush;
    } else {
      write_text_file(out_path, text);
      manifest["argv"] = args;
      write_text_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  } catch (const RegistryError& e) {
    return diagnostic(e.kind(), e.what(), kExitUsage);
  } catch (const ConfigError& e) {
    return diagnostic(e.kind(), e.what(), kExitUsage);
  } catch (const Error& e) {
    return diagnostic(e.kind(), e.what(), kExitNumerical);
  } catch (const std::exception& e) {
    return diagnostic("internal", e.what(), kExitNumerical);
  }
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace slowfast::cli
