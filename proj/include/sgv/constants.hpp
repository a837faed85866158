#pragma once

// Maximal-inequality constants: the tail integral behind every uniform
// (running-sup) bound, the sup-constant in both exponent variants, the
// optimal-constant identity used as a quadrature cross-check, and the
// classical comparison constant evaluated in closed form.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sgv/quadrature.hpp"

namespace sgv {

struct ConstantValue {
  double value;
  double abs_error_bound;
};

inline constexpr double kDefaultConstantTol = 1e-10;

// I(r, a) = integral of s^r / (s+1)^2 over (a, infinity), r in (0,1), a >= 0.
inline ConstantValue tail_integral(double r, double a,
                                   double tol = kDefaultConstantTol) {
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("tail_integral: r must lie in (0,1)");
  if (!(a >= 0.0) || !std::isfinite(a))
    throw std::invalid_argument("tail_integral: a must be finite and >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tail_integral: tol <= 0");
  const auto q = quad::power_tail_integral(r, 2.0, a, tol);
  return {q.value, q.error};
}

enum class SupVariant { half, full };

// (p/q3 * I(q3/p, (p-q3)/q3) + 1)^e with e = p/(2 q3) (half) or p/q3 (full).
// Both exponents give valid sup-moment constants; half is the sharper one.
inline ConstantValue sup_constant(double p, double q3, SupVariant variant,
                                  double tol = kDefaultConstantTol) {
  if (!(q3 > 0.0 && q3 < p))
    throw std::invalid_argument("sup_constant: need 0 < q3 < p");
  const double e = (variant == SupVariant::half) ? p / (2.0 * q3) : p / q3;
  // Rough pass sizes the inner tolerance: the outer power map amplifies
  // quadrature error by its derivative, which can reach 1e5 for small q3.
  const double rough = tail_integral(q3 / p, (p - q3) / q3, 1e-6).value;
  const double base_r = (p / q3) * rough + 1.0;
  const double deriv_r = e * std::pow(base_r, e - 1.0) * (p / q3);
  const double inner =
      std::clamp(tol / (2.0 * std::max(deriv_r, 1.0)), 1e-14, tol);
  const ConstantValue I = tail_integral(q3 / p, (p - q3) / q3, inner);
  const double base = (p / q3) * I.value + 1.0;
  const double value = std::pow(base, e);
  const double deriv = e * std::pow(base, e - 1.0) * (p / q3);
  return {value, deriv * I.abs_error_bound};
}

struct BurkholderForms {
  double form_a;
  double form_b;
  double gap;
};

// The two closed forms of the optimal maximal-inequality constant for
// q in (0,1):
//   A = ((1/q - 1)^q + integral of s^(q-1)/(s+1) over ((1-q)/q, inf))^(1/q)
//   B = (1/q * integral of s^q/(s+1)^2 over ((1-q)/q, inf))^(1/q)
// They agree analytically; the gap measures quadrature fidelity.
inline BurkholderForms burkholder_forms(double q,
                                        double tol = kDefaultConstantTol) {
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("burkholder: q must lie in (0,1)");
  const double a = (1.0 - q) / q;
  const double eps = std::numeric_limits<double>::epsilon();
  // Size each inner tolerance from a rough pass: the outer 1/q power
  // amplifies quadrature error by its derivative (large for small q), while
  // round-off caps how small an absolute error large integrals can reach.
  const double j0 = quad::power_tail_integral(q - 1.0, 1.0, a, 1e-6).value;
  const double i0 = quad::power_tail_integral(q, 2.0, a, 1e-6).value;
  const double da = (1.0 / q) * std::pow(std::pow(a, q) + j0, 1.0 / q - 1.0);
  const double db = (1.0 / (q * q)) * std::pow(i0 / q, 1.0 / q - 1.0);
  const auto inner = [&](double deriv, double rough) {
    const double floor = 200.0 * eps * std::max(1.0, rough);
    return std::clamp(tol / (4.0 * std::max(deriv, 1.0)), floor, tol);
  };
  const auto J = quad::power_tail_integral(q - 1.0, 1.0, a, inner(da, j0));
  const auto I = quad::power_tail_integral(q, 2.0, a, inner(db, i0));
  const double form_a = std::pow(std::pow(a, q) + J.value, 1.0 / q);
  const double form_b = std::pow(I.value / q, 1.0 / q);
  return {form_a, form_b, std::abs(form_a - form_b)};
}

inline double burkholder_identity_gap(double q,
                                      double tol = kDefaultConstantTol) {
  return burkholder_forms(q, tol).gap;
}

// Comparison constant (min{4, 1/q3} * pi q3 / sin(pi q3) + 1)^(1/q3),
// evaluated exactly; diverges to +inf as q3 -> 1.
inline ConstantValue classical_sup_constant(double q3) {
  if (!(q3 > 0.0 && q3 < 1.0))
    throw std::invalid_argument("classical_sup_constant: q3 must lie in (0,1)");
  const double pi = std::numbers::pi;
  const double full_line = pi * q3 / std::sin(pi * q3);
  const double base = std::min(4.0, 1.0 / q3) * full_line + 1.0;
  const double value = std::pow(base, 1.0 / q3);
  if (!std::isfinite(value))
    return {std::numeric_limits<double>::infinity(), 0.0};
  return {value, 16.0 * std::numeric_limits<double>::epsilon() * value};
}

}  // namespace sgv
