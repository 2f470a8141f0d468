#include <doctest.h>

#include <cmath>
#include <limits>

#include "slowfast/error.hpp"
#include "slowfast/experiments.hpp"

using namespace slowfast;

TEST_CASE("degenerate model has zero distances") {
  const auto still = make_scalar_model(
      "still", [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double y) { return -y; }, [](double, double) { return 1.0; }, StateDomain::full_line(),
      StateDomain::full_line(), 0.4, 0.0);
  SimConfig c;
  c.n_paths = 300;
  const std::vector<double> eps = {0.1, 0.03};
  CHECK_THROWS_AS(run_averaging_convergence(still, eps, c), DegeneracyError);
  ConvergenceOptions o;
  o.allow_degenerate = true;
  const auto r = run_averaging_convergence(still, eps, c, o);
  CHECK(r.noise_floor == 0.0);
  for (double w : r.w1_terminal) CHECK(w == 0.0);
}

TEST_CASE("frozen fast dynamics do not average") {
  const auto ou = get_builtin("ou-coupled");
  SimConfig c;
  c.n_paths = 3000;
  c.seed = 4;
  const std::vector<double> eps = {std::numeric_limits<double>::infinity(), 0.05};
  const auto r = run_averaging_convergence(ou, eps, c);
  CHECK(r.w1_terminal[0] > 3.0 * r.noise_floor);
  CHECK(r.w1_terminal[0] > 0.1);
  CHECK(r.w1_terminal[1] < r.w1_terminal[0]);
}

TEST_CASE("optional diagnostics are filled in") {
  const auto ou = get_builtin("ou-coupled");
  SimConfig c;
  c.n_paths = 400;
  c.seed = 8;
  ConvergenceOptions o;
  o.functional_battery = true;
  o.block_diagnostic = true;
  o.block_paths = 50;
  const std::vector<double> eps = {0.1, 0.02};
  const auto r = run_averaging_convergence(ou, eps, c, o);
  REQUIRE(r.functionals.size() >= 4);
  for (const auto& f : r.functionals) {
    CHECK(f.gap.size() == 2);
    for (double se : f.standard_error) CHECK(se > 0.0);
  }
  REQUIRE(r.blocks.size() == 2);
  for (const auto& b : r.blocks) {
    CHECK(b.block == doctest::Approx(b.epsilon * std::log(std::log(1.0 / b.epsilon))));
    CHECK(b.blocks > 0);
    CHECK(b.mean_gap >= 0.0);
    CHECK(b.max_gap >= b.mean_gap);
  }
}

TEST_CASE("reports do not depend on the worker count") {
  const auto ou = get_builtin("ou-coupled");
  SimConfig c;
  c.n_paths = 200;
  c.workers = 1;
  const std::vector<double> eps = {0.1};
  const auto a = run_averaging_convergence(ou, eps, c);
  c.workers = 3;
  const auto b = run_averaging_convergence(ou, eps, c);
  CHECK(a.w1_terminal == b.w1_terminal);
  CHECK(a.noise_floor == b.noise_floor);
}

TEST_CASE("constant slow diffusion closes the mean-square gap") {
  SimConfig c;
  c.n_paths = 500;
  L2Options o;
  o.constant_sigma = 0.8;
  const std::vector<double> eps = {0.05};
  const auto r = run_l2_failure(c, eps, o);
  CHECK(r.sigma_bar == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(r.predicted_limit < 1e-12);
  CHECK(r.mean_square_gap[0] < 1e-20);
}

TEST_CASE("the mean-square gap does not vanish") {
  SimConfig c;
  c.n_paths = 2000;
  c.seed = 12;
  const std::vector<double> eps = {0.05};
  const auto r = run_l2_failure(c, eps);
  CHECK(r.predicted_limit == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.sigma_bar == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.mean_square_gap[0] - 2.0) < 4.0 * r.standard_error[0] + 0.1);
}

TEST_CASE("bad ladders") {
  const auto ou = get_builtin("ou-coupled");
  SimConfig c;
  CHECK_THROWS_AS(run_averaging_convergence(ou, std::vector<double>{}, c), ConfigError);
  CHECK_THROWS_AS(run_averaging_convergence(ou, std::vector<double>{0.1, -0.2}, c), ConfigError);
  CHECK_THROWS_AS(run_l2_failure(c, std::vector<double>{std::numeric_limits<double>::infinity()}), ConfigError);
}
