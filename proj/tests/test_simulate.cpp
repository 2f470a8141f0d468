#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "slowfast/error.hpp"
#include "slowfast/simulate.hpp"

using namespace slowfast;

namespace {

ModelSpec scalar(const char* name, ScalarField b, ScalarField sigma, ScalarField f, ScalarField g,
                 double x0 = 0.0, double y0 = 0.0) {
  return make_scalar_model(name, std::move(b), std::move(sigma), std::move(f), std::move(g),
                           StateDomain::full_line(), StateDomain::full_line(), x0, y0);
}

double sample_variance(const std::vector<double>& v) {
  double m = 0.0, q = 0.0;
  for (double s : v) m += s;
  m /= static_cast<double>(v.size());
  for (double s : v) q += (s - m) * (s - m);
  return q / static_cast<double>(v.size() - 1);
}

auto zero = [](double, double) { return 0.0; };

}  // namespace

TEST_CASE("zero dynamics keep every path at its start") {
  const auto m = scalar("still", zero, zero, zero, zero, 0.3, -1.2);
  SimConfig c;
  c.n_paths = 50;
  c.epsilon = 0.1;
  c.store = StoreMode::full_paths;
  const auto e = simulate_coupled(m, c);
  for (std::size_t p = 0; p < e.n_paths(); ++p) {
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      CHECK(e.slow(p, k)[0] == 0.3);
      CHECK(e.fast(p, k)[0] == -1.2);
    }
  }
  const double x[1] = {0.7};
  const auto fz = simulate_frozen(m, x, c);
  for (double v : fz.terminal_fast()) CHECK(v == -1.2);
  const AveragedCoefficients flat{"flat", [](double) { return 0.0; }, [](double) { return 0.0; },
                                  StateDomain::full_line()};
  SimConfig a = c;
  a.x0 = {2.5};
  for (double v : simulate_averaged(flat, a).terminal_slow()) CHECK(v == 2.5);
}

TEST_CASE("slow Brownian motion has unit variance at T = 1") {
  const auto m = scalar("bm", zero, [](double, double) { return 1.0; }, zero,
                        [](double, double) { return 1.0; });
  SimConfig c;
  c.n_paths = 100000;
  c.epsilon = 1.0;
  c.dt = 0.05;
  c.fast_step_factor = 0.05;
  c.seed = 2024;
  const double var = sample_variance(simulate_coupled(m, c).terminal_slow());
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / c.n_paths));
}

TEST_CASE("reflection keeps example21 in its domain") {
  const auto m = get_builtin("example21");
  SimConfig c;
  c.n_paths = 200;
  c.epsilon = 0.05;
  c.store = StoreMode::full_paths;
  c.x0 = {0.98};
  c.y0 = {0.01};
  const auto e = simulate_coupled(m, c);
  for (std::size_t p = 0; p < e.n_paths(); ++p) {
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      CHECK(e.slow(p, k)[0] >= 0.0);
      CHECK(e.slow(p, k)[0] <= 1.0);
      CHECK(e.fast(p, k)[0] >= 0.0);
    }
  }
  const double x[1] = {0.5};
  for (double v : simulate_frozen(m, x, c).terminal_fast()) CHECK(v >= 0.0);
}

TEST_CASE("frozen ou-coupled relaxes to mean x") {
  const auto m = get_builtin("ou-coupled");
  SimConfig c;
  c.n_paths = 20000;
  c.horizon = 10.0;
  c.dt = 0.01;
  c.y0 = {0.0};
  c.seed = 9;
  const double x[1] = {2.0};
  const auto y = simulate_frozen(m, x, c).terminal_fast();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(sample_variance(y) / y.size()));
}

TEST_CASE("deterministic averaged ODE") {
  const AveragedCoefficients decay{"decay", [](double x) { return -x; }, [](double) { return 0.0; },
                                   StateDomain::full_line()};
  SimConfig c;
  c.n_paths = 3;
  c.x0 = {1.0};
  c.dt = 1e-3;
  const auto xt = simulate_averaged(decay, c).terminal_slow();
  CHECK(std::abs(xt[0] - std::exp(-1.0)) < c.dt);
}

TEST_CASE("Euler mean error is first order in dt") {
  // For a linear drift the Euler mean is (1 - dt)^n whatever the noise, so the
  // noiseless run measures the weak error of the mean exactly.
  const AveragedCoefficients ou{"ou", [](double x) { return -x; }, [](double) { return 0.0; },
                                StateDomain::full_line()};
  std::vector<double> lx, le;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    SimConfig c;
    c.n_paths = 1;
    c.x0 = {1.0};
    c.dt = dt;
    const double err = std::abs(simulate_averaged(ou, c).terminal_slow()[0] - std::exp(-1.0));
    lx.push_back(std::log(dt));
    le.push_back(std::log(err));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (le[0] + le[1] + le[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (le[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  CHECK(std::abs(sxy / sxx - 1.0) < 0.3);
}

TEST_CASE("paired averaged run shares the slow noise") {
  const auto m = get_builtin("pure-fast-l2");
  SimConfig c;
  c.n_paths = 4000;
  c.epsilon = 0.05;
  c.seed = 77;
  const auto xe = simulate_coupled(m, c).terminal_slow();
  const AveragedCoefficients bm{"bm", [](double) { return 0.0; }, [](double) { return 1.0; },
                                StateDomain::full_line()};
  const auto xb = simulate_averaged(bm, c, true).terminal_slow();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < xe.size(); ++i) {
    sab += xe[i] * xb[i];
    saa += xe[i] * xe[i];
    sbb += xb[i] * xb[i];
  }
  // E[X^eps Xbar] = E integral of Y ds = 0: shared W, yet uncorrelated.
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.06);

  // With sigma = 1 the coupled slow path is exactly the paired Brownian sum.
  const auto unit = scalar("unit", zero, [](double, double) { return 1.0; },
                           [](double, double y) { return -y; }, [](double, double) { return 1.0; });
  const auto xu = simulate_coupled(unit, c).terminal_slow();
  for (std::size_t i = 0; i < xu.size(); ++i) CHECK(xu[i] == doctest::Approx(xb[i]).epsilon(1e-10));
}

TEST_CASE("ensembles do not depend on the worker count") {
  const auto m = get_builtin("ou-coupled");
  SimConfig c;
  c.n_paths = 37;
  c.epsilon = 0.1;
  c.store = StoreMode::strided;
  c.stride = 10;
  c.workers = 1;
  const auto a = simulate_coupled(m, c);
  c.workers = 4;
  const auto b = simulate_coupled(m, c);
  CHECK(a.states == b.states);
  CHECK(a.times == b.times);
  CHECK(a.times.size() == 11);
}

TEST_CASE("configuration errors") {
  const auto m = get_builtin("ou-coupled");
  SimConfig c;
  c.epsilon = 0.01;
  c.fast_step_factor = 0.5;
  CHECK_THROWS_AS(simulate_coupled(m, c), ConfigError);
  SimConfig d;
  d.dt = 2.0;
  CHECK_THROWS_AS(simulate_coupled(m, d), ConfigError);
  SimConfig e;
  e.n_paths = 0;
  CHECK_THROWS_AS(simulate_coupled(m, e), ConfigError);
  SimConfig f;
  f.epsilon = -1;
  CHECK_THROWS_AS(simulate_coupled(m, f), ConfigError);
}

TEST_CASE("blow-up is reported") {
  const auto m = scalar("cubic", [](double x, double) { return x * x * x; }, zero, zero,
                        [](double, double) { return 1.0; }, 10.0, 0.0);
  SimConfig c;
  c.n_paths = 2;
  c.dt = 0.1;
  c.fast_step_factor = 0.1;
  c.horizon = 5.0;
  try {
    simulate_coupled(m, c);
    FAIL("expected a blow-up");
  } catch (const BlowUpError& e) {
    CHECK(std::string(e.what()).find("path") != std::string::npos);
  }
}

TEST_CASE("binary round trip and csv layout") {
  const auto m = get_builtin("example21");
  SimConfig c;
  c.n_paths = 3;
  c.epsilon = 0.1;
  c.store = StoreMode::full_paths;
  c.horizon = 0.05;
  const auto e = simulate_coupled(m, c);
  std::stringstream bin;
  write_binary(bin, e);
  const auto r = read_binary(bin);
  CHECK(r.states == e.states);
  CHECK(r.times == e.times);
  CHECK(r.stream_ids == e.stream_ids);
  std::ostringstream csv;
  write_csv(csv, e);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "path_id,t,x_0,y_0");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == e.n_paths() * e.times.size());
}
