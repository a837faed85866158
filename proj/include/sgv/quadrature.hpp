#pragma once

// Adaptive Gauss-Kronrod (7-15) quadrature on finite intervals, plus the
// change of variables that turns the tail integrals behind the maximal
// inequality constants into bounded integrands on [0, 1].

#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <vector>

namespace sgv::quad {

struct PanelResult {
  double value;
  double error;
  double resasc;  // scale used by the QUADPACK error heuristic
};

// 15-point Kronrod nodes on [-1,1] (symmetric halves) with Kronrod weights
// and the embedded 7-point Gauss weights.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
PanelResult gk15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double hlen = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(center - hlen * kXgk[i]);
    fv[14 - i] = f(center + hlen * kXgk[i]);
  }
  fv[7] = f(center);

  double resk = kWgk[7] * fv[7];
  double resg = kWg[3] * fv[7];
  double resabs = std::abs(resk);
  for (int i = 0; i < 7; ++i) {
    const double sum = fv[i] + fv[14 - i];
    resk += kWgk[i] * sum;
    resabs += kWgk[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
    if (i % 2 == 1) resg += kWg[i / 2] * sum;
  }
  const double mean = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fv[7] - mean);
  for (int i = 0; i < 7; ++i)
    resasc += kWgk[i] * (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
  resasc *= hlen;
  resabs *= hlen;

  double err = std::abs((resk - resg) * hlen);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps_floor = 50.0 * 2.220446049250313e-16 * resabs;
  if (eps_floor > err) err = eps_floor;
  return {resk * hlen, err, resasc};
}

struct QuadResult {
  double value;
  double error;
  int panels;
};

// Globally adaptive bisection, worst panel first, until the summed error
// estimate is at or below tol.
template <class F>
QuadResult integrate(const F& f, double a, double b, double tol,
                     int max_panels = 4000) {
  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  std::priority_queue<Panel> heap;
  PanelResult first = gk15(f, a, b);
  heap.push({a, b, first.value, first.error});
  double total_value = first.value;
  double total_error = first.error;
  int panels = 1;
  while (total_error > tol && panels < max_panels) {
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const PanelResult left = gk15(f, worst.a, mid);
    const PanelResult right = gk15(f, mid, worst.b);
    total_value += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push({worst.a, mid, left.value, left.error});
    heap.push({mid, worst.b, right.value, right.error});
    ++panels;
  }
  if (total_error > tol)
    throw std::runtime_error(
        "quadrature: tolerance not reached within panel budget");
  return {total_value, total_error, panels};
}

// Integral of s^rho / (s+1)^sigma_exp over (a, infinity), for exponents with
// rho + 2 - sigma_exp in (0, 1) so the tail converges. Two substitutions:
// s = a + u/(1-u) maps the tail onto u in [0,1) and leaves an integrable
// (1-u)^-w endpoint singularity with w = rho + 2 - sigma_exp; u = 1-(1-v)^m
// with m = 1/(1-w) absorbs that singularity exactly, leaving a bounded
// integrand on [0,1].
inline QuadResult power_tail_integral(double rho, double sigma_exp, double a,
                                      double tol) {
  const double w = rho + 2.0 - sigma_exp;
  if (!(w > 0.0 && w < 1.0))
    throw std::invalid_argument("power_tail_integral: w outside (0,1)");
  if (!(a >= 0.0) || !std::isfinite(a))
    throw std::invalid_argument("power_tail_integral: bad lower limit");
  if (rho < 0.0 && a == 0.0)
    throw std::invalid_argument(
        "power_tail_integral: negative power needs a > 0");
  const double m = 1.0 / (1.0 - w);
  const auto g = [=](double v) {
    const double one_minus_u = std::pow(1.0 - v, m);
    const double u = 1.0 - one_minus_u;
    // A = a(1-u)+u interpolates a and 1, B = a(1-u)+1 stays >= 1.
    const double A = a * one_minus_u + u;
    const double B = a * one_minus_u + 1.0;
    return m * std::pow(A, rho) * std::pow(B, -sigma_exp);
  };
  return integrate(g, 0.0, 1.0, tol);
}

}  // namespace sgv::quad
