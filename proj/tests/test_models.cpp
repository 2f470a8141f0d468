#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "slowfast/error.hpp"
#include "slowfast/models.hpp"

using namespace slowfast;

namespace {

double eval_f(const ModelSpec& m, double x, double y) {
  const double xs[1] = {x}, ys[1] = {y};
  return eval_coefficients(m, xs, ys).f[0];
}

}  // namespace

TEST_CASE("registry") {
  for (const auto& name : builtin_names()) {
    const auto m = get_builtin(name);
    CHECK(m.name == name);
    CHECK(m.dx == 1);
    CHECK(m.dy == 1);
  }
  try {
    get_builtin("nosuchmodel");
    FAIL("expected a registry error");
  } catch (const RegistryError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("example21") != std::string::npos);
    CHECK(msg.find("ou-coupled") != std::string::npos);
    CHECK(msg.find("pure-fast-l2") != std::string::npos);
  }
}

TEST_CASE("example21 coefficients") {
  const auto m = get_builtin("example21");
  CHECK(m.analytic->averaged_drift(0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(m.analytic->averaged_drift(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double y : {0.0, 0.3, 2.0, 17.0}) {
    CHECK(eval_f(m, 1.0, y) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(eval_f(m, 0.0, y) == doctest::Approx(-1.0).epsilon(1e-14));
  }
  // Direct transcription of the fast drift.
  for (double x : {0.1, 0.5, 0.9}) {
    for (double y : {0.0, 1.0, 5.0}) {
      const double num = -x * x * x * std::exp(-x * y) - (1 - x) * std::exp(-y);
      const double den = x * x * std::exp(-x * y) + (1 - x) * std::exp(-y);
      CHECK(eval_f(m, x, y) == doctest::Approx(num / den).epsilon(1e-12));
    }
  }
  const double xs[1] = {0.5}, ys[1] = {2.0};
  const auto v = eval_coefficients(m, xs, ys);
  CHECK(v.b[0] == 2.0);
  CHECK(v.sigma[0] == 2.0);
  CHECK(v.g[0] == doctest::Approx(std::sqrt(2.0)));

  const double bad_x[1] = {1.5}, bad_y[1] = {-1.0};
  CHECK_THROWS_AS(eval_coefficients(m, bad_x, ys), DomainError);
  CHECK_THROWS_AS(eval_coefficients(m, xs, bad_y), DomainError);
}

TEST_CASE("analytic densities integrate to one") {
  using boost::math::quadrature::gauss_kronrod;
  const auto e = get_builtin("example21");
  for (int i = 0; i <= 10; ++i) {
    const double x = 0.1 * i;
    const double mass = gauss_kronrod<double, 61>::integrate(
        [&](double y) { return e.analytic->stationary_density(x, y); }, 0.0,
        std::numeric_limits<double>::infinity(), 15, 1e-14);
    CHECK(std::abs(mass - 1.0) < 1e-8);
  }
  const auto ou = get_builtin("ou-coupled");
  for (double x : {-1.0, 0.0, 2.0}) {
    const double mass = gauss_kronrod<double, 61>::integrate(
        [&](double y) { return ou.analytic->stationary_density(x, y); },
        -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-14);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    CHECK(ou.analytic->stationary_density(x, x) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
  }
}

TEST_CASE("ou-coupled is odd at the origin") {
  const auto m = get_builtin("ou-coupled");
  const double z[1] = {0.0};
  const auto v = eval_coefficients(m, z, z);
  CHECK(v.b[0] == 0.0);
  CHECK(v.f[0] == 0.0);
}

TEST_CASE("coefficient evaluation is pure") {
  const auto m = get_builtin("example21");
  const double xs[1] = {0.37}, ys[1] = {1.234};
  const auto a = eval_coefficients(m, xs, ys);
  const auto b = eval_coefficients(m, xs, ys);
  CHECK(a.b == b.b);
  CHECK(a.sigma == b.sigma);
  CHECK(a.f == b.f);
  CHECK(a.g == b.g);
}

TEST_CASE("assumption spot checks") {
  const auto ou = get_builtin("ou-coupled");
  const auto grid = random_assumption_grid(ou, 1000, -3, 3, -3, 3, 11);
  const auto r = check_assumptions(ou, grid);
  const auto& b1 = r.at("B1");
  CHECK(b1.status != ConditionStatus::fail);
  double k3 = -1;
  for (const auto& [name, value] : b1.parts) {
    if (name == "x-lipschitz") k3 = value;
  }
  CHECK(k3 <= 1.0 + 1e-9);
  CHECK(k3 > 0.99);

  const auto e = get_builtin("example21");
  std::vector<AssumptionTuple> wide;
  for (double y : {0.0, 10.0, 100.0, 1000.0}) wide.push_back({{0.5}, {y}, {0.25}, {y / 2}});
  const auto re = check_assumptions(e, wide);
  CHECK(re.at("A2").status == ConditionStatus::unbounded_domain_caveat);

  const auto constant = make_scalar_model(
      "constant-sigma", [](double x, double) { return -x; }, [](double, double) { return 0.7; },
      [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      StateDomain::full_line(), StateDomain::full_line());
  const auto rc = check_assumptions(constant, random_assumption_grid(constant, 200, -2, 2, -2, 2, 3));
  double sigma_part = -1;
  for (const auto& [name, value] : rc.at("A1").parts) {
    if (name.find("sigma") != std::string::npos) sigma_part = value;
  }
  CHECK(sigma_part == 0.0);
}

TEST_CASE("a failing condition carries a witness") {
  const auto bad = make_scalar_model(
      "no-fast-noise", [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
      [](double, double y) { return -y; }, [](double, double) { return 0.0; },
      StateDomain::full_line(), StateDomain::full_line());
  const auto r = check_assumptions(bad, random_assumption_grid(bad, 100, -1, 1, -1, 1, 5));
  CHECK(r.at("B3").status == ConditionStatus::fail);
  CHECK(r.at("B3").witness.size() == 4);
  CHECK(r.at("A3").status == ConditionStatus::pass);
}

TEST_CASE("reflection") {
  const auto half = StateDomain::half_line(0.0);
  CHECK(half.reflect(-0.25) == 0.25);
  CHECK(half.reflect(3.0) == 3.0);
  const auto unit = StateDomain::interval(0.0, 1.0);
  CHECK(unit.reflect(1.25) == doctest::Approx(0.75));
  CHECK(unit.reflect(-0.1) == doctest::Approx(0.1));
  CHECK(unit.contains(unit.reflect(7.3)));
  CHECK(unit.contains(unit.reflect(-4.9)));
}
