#pragma once

#include <cmath>
#include <functional>
#include <limits>

namespace slowfast::detail {

/// Adaptive Gauss-Kronrod (15-point) with an absolute error target.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol);

/// Integral over a short cell: a 15-point Gauss rule checked against its two
/// halves, falling back to the adaptive rule when they disagree.
double integrate_cell(const std::function<double(double)>& f, double a, double b, double abs_tol);

/// Fixed 15-point Gauss-Legendre rule; exact for polynomials up to degree 29.
double gauss15(const std::function<double(double)>& f, double a, double b);

inline double log_add(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

/// log of the integral over a cell of width w of exp(l(t)), where l is linear
/// from l0 to l1.
inline double log_integral_loglinear(double l0, double l1, double w) noexcept {
  const double d = l1 - l0;
  if (std::abs(d) < 1e-10) return std::log(w) + 0.5 * (l0 + l1);
  if (d > 0) return std::log(w) + l1 + std::log(-std::expm1(-d)) - std::log(d);
  return std::log(w) + l0 + std::log(-std::expm1(d)) - std::log(-d);
}

}  // namespace slowfast::detail
