#include "quadrature.hpp"

#include <algorithm>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace slowfast::detail {

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double error = 0.0, l1 = 0.0;
  double value = GK::integrate(f, a, b, 15, 1e-12, &error, &l1);
  if (error > abs_tol && l1 > 0.0) {
    // Boost's tolerance is relative to the L1 norm of the integrand.
    const double rel = std::max(abs_tol / l1, 4.0 * std::numeric_limits<double>::epsilon());
    value = GK::integrate(f, a, b, 20, rel, &error, &l1);
  }
  return value;
}

double integrate_cell(const std::function<double(double)>& f, double a, double b,
                      double abs_tol) {
  if (a == b) return 0.0;
  const double whole = gauss15(f, a, b);
  const double mid = 0.5 * (a + b);
  const double halves = gauss15(f, a, mid) + gauss15(f, mid, b);
  if (std::abs(whole - halves) <= std::max(abs_tol, 1e-14 * std::abs(halves))) return halves;
  return integrate(f, a, b, abs_tol);
}

double gauss15(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss<double, 15>::integrate(f, a, b);
}

}  // namespace slowfast::detail
