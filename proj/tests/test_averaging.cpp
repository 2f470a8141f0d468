#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "slowfast/averaging.hpp"
#include "slowfast/error.hpp"

using namespace slowfast;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gauss_expectation(double mean, const std::function<double(double)>& fn) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double y) { return fn(y) * std::exp(-0.5 * (y - mean) * (y - mean)) / std::sqrt(2 * std::numbers::pi); },
      -kInf, kInf, 15, 1e-14);
}

}  // namespace

TEST_CASE("averaged drift of example21") {
  const auto e = get_builtin("example21");
  CHECK(std::abs(averaged_drift(e, 0.5) - 1.5) < 1e-6);
  CHECK(std::abs(averaged_drift(e, 0.0) - 1.0) < 1e-6);
  for (int i = 1; i <= 10; ++i) {
    const double x = 0.1 * i;
    CHECK(std::abs(averaged_drift(e, x) - (2 - x)) < 1e-6);
  }
}

TEST_CASE("averaged coefficients of ou-coupled against quadrature oracles") {
  const auto ou = get_builtin("ou-coupled");
  const double b1 = gauss_expectation(1.0, [](double y) { return -1.0 + std::sin(y); });
  CHECK(std::abs(b1 - (-1.0 + std::sin(1.0) * std::exp(-0.5))) < 1e-12);
  CHECK(std::abs(averaged_drift(ou, 1.0) - b1) < 1e-6);

  const double a0 = gauss_expectation(0.0, [](double y) { return 1.0 + 0.5 * std::cos(y); });
  CHECK(std::abs(a0 - (1.0 + 0.5 * std::exp(-0.5))) < 1e-12);
  const auto d = averaged_diffusion(ou, 0.0);
  CHECK(std::abs(d.a_bar - a0) < 1e-6);
  CHECK(d.sigma_bar * d.sigma_bar == doctest::Approx(d.a_bar).epsilon(1e-12));
}

TEST_CASE("averaged diffusion of example21 against the exponential moments") {
  // int y^2 (0.25 e^{-y/2} + 0.5 e^{-y}) dy = 0.25 * 2 / 0.125 + 0.5 * 2 = 5.
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double y) { return y * y * (0.25 * std::exp(-0.5 * y) + 0.5 * std::exp(-y)); }, 0.0, kInf, 15, 1e-14);
  CHECK(std::abs(oracle - 5.0) < 1e-10);
  CHECK(std::abs(averaged_diffusion(get_builtin("example21"), 0.5).a_bar - oracle) < 1e-5);
}

TEST_CASE("constant and degenerate coefficients") {
  const auto flat = make_scalar_model(
      "flat", [](double, double) { return 0.25; }, [](double, double) { return 0.6; },
      [](double, double y) { return -y; }, [](double, double) { return 1.0; }, StateDomain::full_line(),
      StateDomain::full_line());
  const auto d = averaged_diffusion(flat, 0.3);
  CHECK(d.a_bar == doctest::Approx(0.36).epsilon(1e-9));
  CHECK(d.sigma_bar == doctest::Approx(0.6).epsilon(1e-9));
  const std::vector<double> grid = {-1, 0, 1};
  const auto table = build_averaged_model(flat, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(table.b_bar[i] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(table.sigma_bar[i] * table.sigma_bar[i] == doctest::Approx(table.a_bar[i]).epsilon(1e-12));
  }
  CHECK(discontinuity_probe(flat, 0.0, std::vector<double>{0.1, 0.05, 0.01}).gap < 1e-9);

  const auto still = make_scalar_model(
      "still", [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double y) { return -y; }, [](double, double) { return 1.0; }, StateDomain::full_line(),
      StateDomain::full_line());
  CHECK_THROWS_AS(averaged_diffusion(still, 0.0), DegeneracyError);
  CHECK(averaged_diffusion(still, 0.0, true).sigma_bar == 0.0);
  try {
    build_averaged_model(still, grid);
    FAIL("expected a degeneracy error");
  } catch (const Error& err) {
    CHECK(std::string(err.what()).find("node 0") != std::string::npos);
  }
}

TEST_CASE("tabulated models") {
  const auto e = get_builtin("example21");
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.1 * i);
  AveragingOptions quad;
  quad.use_analytic = false;
  const auto t = build_averaged_model(e, grid, quad);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(t.b_bar[i] - (2 - grid[i])) < 1e-6);
  CHECK(t.drift(0.15) == doctest::Approx(0.5 * (t.b_bar[0] + t.b_bar[1])));
  CHECK(t.drift(-3) == t.b_bar.front());

  const auto pf = get_builtin("pure-fast-l2");
  const auto tp = build_averaged_model(pf, std::vector<double>{-1, 0, 2}, quad);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(tp.b_bar[i]) < 1e-12);
    CHECK(std::abs(tp.sigma_bar[i] - 1.0) < 1e-6);
  }
  CHECK_THROWS_AS(build_averaged_model(e, std::vector<double>{0.5, 1.5}), DomainError);
}

TEST_CASE("discontinuity probes") {
  const auto e = get_builtin("example21");
  const auto p = discontinuity_probe(e, 0.0, std::vector<double>{0.1, 0.03, 0.01, 0.003});
  CHECK(std::abs(p.gap - 1.0) < 0.02);
  CHECK(std::abs(p.value_at_x0 - 1.0) < 1e-6);
  const auto ou = get_builtin("ou-coupled");
  CHECK(discontinuity_probe(ou, 0.0, std::vector<double>{0.1, 0.03, 0.01, 0.003}).gap < 0.01);
}

TEST_CASE("hoelder fits") {
  const auto ou = get_builtin("ou-coupled");
  std::vector<std::pair<double, double>> pairs;
  for (double d : {1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0}) pairs.emplace_back(0.2, 0.2 + d);
  pairs.emplace_back(0.4, 0.4);
  HolderOptions o;
  o.lambda = 1.0;
  o.K3 = 1.0;
  const auto r = holder_fit(Metric::w1, ou, pairs, o);
  CHECK(r.reference_exponent == doctest::Approx(0.5));
  CHECK(std::abs(r.fitted_exponent - 1.0) < 0.05);
  CHECK(r.fitted_points == 7);
  CHECK(r.pairs.back().distance == 0.0);
  CHECK(r.bound_satisfied);
  for (std::size_t i = 0; i + 1 < r.pairs.size(); ++i) {
    const double dx = std::abs(r.pairs[i].x2 - r.pairs[i].x1);
    CHECK(std::abs(r.pairs[i].distance - dx) < 1e-4);
  }

  const auto e = get_builtin("example21");
  std::vector<std::pair<double, double>> at_zero = {{0.3, 0.0}, {0.1, 0.0}, {0.03, 0.0}};
  const auto re = holder_fit(Metric::w1, e, at_zero, o);
  for (const auto& p : re.pairs) CHECK(std::abs(p.distance - (1 - p.x1)) < 1e-4);
  CHECK_FALSE(re.bound_satisfied);

  const auto tv = holder_fit(Metric::tv, e, at_zero);
  CHECK(tv.reference_exponent == doctest::Approx(2.0 / 3.0));
  CHECK(tv.bound_satisfied);
  CHECK_THROWS_AS(holder_fit(Metric::w1, e, at_zero), ConfigError);
}
