#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "slowfast/error.hpp"
#include "slowfast/ergodicity.hpp"
#include "slowfast/metrics.hpp"
#include "slowfast/stationary.hpp"

using namespace slowfast;

namespace {

double gauss_pdf(double y, double mean) {
  return std::exp(-0.5 * (y - mean) * (y - mean)) / std::sqrt(2.0 * std::numbers::pi);
}

double max_abs_error(const Density1D& d, const std::function<double(double)>& truth) {
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(d.values[i] - truth(d.grid[i])));
  return worst;
}

}  // namespace

TEST_CASE("potential") {
  const auto e = get_builtin("example21");
  CHECK(potential(e, 0.4, 0.0) == 0.0);
  for (double y : {0.5, 3.0, 20.0}) CHECK(potential(e, 0.0, y) == doctest::Approx(-y).epsilon(1e-12));
  // At x = 0.5 the potential is log of the normalised density ratio.
  const double y = 2.0;
  const double expected = std::log((0.25 * std::exp(-0.5 * y) + 0.5 * std::exp(-y)) / 0.75);
  CHECK(std::abs(potential(e, 0.5, y) - expected) < 1e-10);
  const auto ou = get_builtin("ou-coupled");
  for (double v : {-2.0, 0.7, 3.0}) CHECK(std::abs(potential(ou, 0.0, v) + 0.5 * v * v) < 1e-10);
}

TEST_CASE("closed-form densities are reproduced") {
  const auto e = get_builtin("example21");
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto d = stationary_density(e, x);
    CHECK(std::abs(d.integral() - 1.0) < 1e-8);
    CHECK(std::abs(d.cdf.back() - 1.0) < 1e-8);
    CHECK(max_abs_error(d, [x](double y) { return example21_density(x, y); }) < 1e-6);
  }
  const auto d0 = stationary_density(e, 0.0);
  CHECK(max_abs_error(d0, [](double y) { return std::exp(-y); }) < 1e-6);
  const auto d5 = stationary_density(e, 0.5);
  CHECK(max_abs_error(d5, [](double y) { return 0.25 * std::exp(-0.5 * y) + 0.5 * std::exp(-y); }) < 1e-6);

  const auto ou = get_builtin("ou-coupled");
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto d = stationary_density(ou, x);
    CHECK(std::abs(d.integral() - 1.0) < 1e-8);
    CHECK(max_abs_error(d, [x](double y) { return gauss_pdf(y, x); }) < 1e-6);
  }
}

TEST_CASE("cdf and quantile are inverse") {
  const auto d = stationary_density(get_builtin("ou-coupled"), 1.0);
  for (double u : {0.001, 0.1, 0.5, 0.9, 0.999}) CHECK(d.cdf_at(d.quantile(u)) == doctest::Approx(u).epsilon(1e-9));
  CHECK(d.cdf_at(1.0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(d.cdf_at(d.lower() - 1.0) == 0.0);
  CHECK(d.cdf_at(d.upper() + 1.0) == 1.0);
}

TEST_CASE("moments") {
  const auto e = get_builtin("example21");
  CHECK(std::abs(moment(stationary_density(e, 0.5), 1) - 1.5) < 1e-6);
  // Exponential(1) second moment, checked against adaptive quadrature.
  std::vector<double> grid;
  for (int i = 0; i <= 20000; ++i) grid.push_back(40.0 * i / 20000.0);
  const auto expo = Density1D::from_function(grid, [](double y) { return std::exp(-y); });
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double y) { return y * y * std::exp(-y); }, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-14);
  CHECK(std::abs(oracle - 2.0) < 1e-10);
  CHECK(std::abs(moment(expo, 2) - oracle) < 1e-5);

  const auto point = EmpiricalMeasure::from_samples(std::vector<double>(10, 1.7));
  for (int k = 1; k <= 4; ++k) CHECK(moment(point, k) == doctest::Approx(std::pow(1.7, k)));
}

TEST_CASE("heavy tails are refused") {
  // Cauchy-like tail: density ~ 1/(1+y^2).
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(-1000.0 + 2000.0 * i / 4000.0);
  const auto cauchy = Density1D::from_function(grid, [](double y) { return 1.0 / (1.0 + y * y); });
  CHECK_THROWS_AS(expectation(cauchy, [](double y) { return y * y; }), InfiniteMomentError);

  // f = +y pushes mass to infinity: no invariant law.
  const auto repelling = make_scalar_model(
      "repelling", [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
      [](double, double y) { return y; }, [](double, double) { return 1.0; }, StateDomain::full_line(),
      StateDomain::full_line());
  CHECK_THROWS_AS(stationary_density(repelling, 0.0), NotPositiveRecurrentError);

  const auto flat = make_scalar_model(
      "no-noise", [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
      [](double, double y) { return -y; }, [](double, double) { return 0.0; }, StateDomain::full_line(),
      StateDomain::full_line());
  CHECK_THROWS_AS(potential(flat, 0.0, 1.0), DegeneracyError);
}

TEST_CASE("empirical invariant measure") {
  const auto ou = get_builtin("ou-coupled");
  SimConfig c;
  c.n_paths = 2000;
  c.horizon = 20.0;
  c.dt = 0.01;
  c.store = StoreMode::strided;
  c.stride = 100;
  c.seed = 5;
  const auto m = empirical_invariant(ou, 2.0, c, 10.0);
  CHECK(m.size() == 2000 * 11);
  double mean = 0.0, var = 0.0;
  for (double s : m.samples) mean += s;
  mean /= m.size();
  for (double s : m.samples) var += (s - mean) * (s - mean);
  var /= m.size() - 1;
  // Pooled samples along a path are correlated; the stride of 1 time unit
  // keeps the correlation below e^-1, so 3 * sqrt(2) naive errors is generous.
  CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(2.0) * std::sqrt(var / m.size()));

  const auto still = make_scalar_model(
      "still", [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; }, [](double, double) { return 0.0; }, StateDomain::full_line(),
      StateDomain::full_line(), 0.0, 5.0);
  SimConfig s;
  s.n_paths = 10;
  s.horizon = 1.0;
  s.store = StoreMode::strided;
  s.stride = 10;
  for (double v : empirical_invariant(still, 0.0, s, 0.5).samples) CHECK(v == 5.0);
}

TEST_CASE("forward equation preserves the invariant density") {
  const auto e = get_builtin("example21");
  const auto d = stationary_density(e, 0.5);
  const double t[1] = {1.0};
  const auto evolved = forward_pde_solve(e, 0.5, d, t);
  CHECK(tv_distance(evolved[0], d) < 1e-4);
}
