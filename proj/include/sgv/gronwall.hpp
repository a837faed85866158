#pragma once

// Deterministic pathwise checkers: the nonlinear comparison rule that turns
// x^p <= x0^p + p * int x^(p-1) beta into x <= x0 + int beta, verified on
// discrete grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sgv/grid.hpp"
#include "sgv/models.hpp"
#include "sgv/reduce.hpp"
#include "sgv/rng.hpp"
#include "sgv/simulate.hpp"

namespace sgv {

// Comparison value x0 + integral of beta over [0, t].
inline double opial_conclusion(double x0, const GridFunction& beta, double t) {
  if (!(x0 >= 0.0))
    throw std::invalid_argument("opial_conclusion: x0 must be >= 0");
  return x0 + beta.integral_to(t);
}

// One sampled trajectory x with forcing beta on a shared grid; the checker
// asks whether the power-integral hypothesis holds and whether the linear
// conclusion follows, both within a grid tolerance.
struct OpialInstance {
  double p;
  GridFunction x;
  GridFunction beta;

  OpialInstance(double p_in, GridFunction x_in, GridFunction beta_in)
      : p(p_in), x(std::move(x_in)), beta(std::move(beta_in)) {
    if (!(p > 1.0)) throw std::invalid_argument("OpialInstance: p must be > 1");
    if (x.times() != beta.times())
      throw std::invalid_argument("OpialInstance: x and beta need one grid");
  }
};

struct OpialReport {
  bool hypothesis_ok;
  bool conclusion_ok;
  double max_violation;
};

// Hypothesis and conclusion are compared in the scale of x itself (p-th
// roots of both hypothesis sides), so one tolerance proportional to the
// step size works uniformly across p and across trajectory magnitudes.
inline OpialReport opial_check(const OpialInstance& inst, double grid_tol) {
  if (!(grid_tol > 0.0))
    throw std::invalid_argument("opial_check: grid_tol must be > 0");
  const auto& t = inst.x.times();
  const auto& xv = inst.x.values();
  const auto& bv = inst.beta.values();
  const double p = inst.p;
  const double x0p = std::pow(xv[0], p);

  double hyp_integral = 0.0;  // trapezoid of x^(p-1) * beta
  double con_integral = 0.0;  // trapezoid of beta
  double worst = -std::numeric_limits<double>::infinity();
  bool hyp_ok = true;
  bool con_ok = true;
  auto node = [&](std::size_t k) {
    const double rhs_p = x0p + p * hyp_integral;
    const double hyp_rhs = std::pow(std::max(rhs_p, 0.0), 1.0 / p);
    const double hyp_slack = xv[k] - hyp_rhs;
    const double con_slack = xv[k] - (xv[0] + con_integral);
    if (hyp_slack > grid_tol) hyp_ok = false;
    if (con_slack > grid_tol) con_ok = false;
    worst = std::max({worst, hyp_slack, con_slack});
  };
  node(0);
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double dt = t[k] - t[k - 1];
    const double g_prev = std::pow(xv[k - 1], p - 1.0) * bv[k - 1];
    const double g_here = std::pow(xv[k], p - 1.0) * bv[k];
    hyp_integral += 0.5 * dt * (g_prev + g_here);
    con_integral += 0.5 * dt * (bv[k - 1] + bv[k]);
    node(k);
  }
  return {hyp_ok, con_ok, worst};
}

// Randomized equality case: draw a nonnegative piecewise-linear beta with
// kinks on grid nodes and integrate x' = beta by the same trapezoid rule the
// checker uses, so the conclusion holds with equality and the hypothesis
// holds up to quadrature error of order h.
inline OpialInstance make_equality_instance(std::uint64_t seed,
                                            std::uint64_t index,
                                            std::size_t n_steps,
                                            double horizon = 1.0) {
  if (n_steps < 8)
    throw std::invalid_argument("make_equality_instance: need >= 8 steps");
  n_steps -= n_steps % 8;  // kinks at eighths of the grid stay on nodes
  std::uint32_t k = 0;
  auto draw = [&] {
    return rng::indexed_unit(seed, rng::Stream::instances, index, k++);
  };
  const double x0 = 10.0 * draw();
  const double p = 1.0 + 4.0 * draw();
  double kink[9];
  for (auto& v : kink) v = 4.0 * draw();

  auto times = GridFunction::uniform_times(horizon, n_steps);
  std::vector<double> beta(n_steps + 1);
  const std::size_t span = n_steps / 8;
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const std::size_t j = i / span;
    if (j >= 8) {
      beta[i] = kink[8];
      continue;
    }
    const double w = static_cast<double>(i - j * span) /
                     static_cast<double>(span);
    beta[i] = kink[j] + w * (kink[j + 1] - kink[j]);
  }
  std::vector<double> x(n_steps + 1);
  x[0] = x0;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    const double dt = times[i] - times[i - 1];
    x[i] = x[i - 1] + 0.5 * dt * (beta[i - 1] + beta[i]);
  }
  GridFunction xf(times, std::move(x));
  GridFunction bf(std::move(times), std::move(beta));
  return OpialInstance(p, std::move(xf), std::move(bf));
}

// RMS over paths of the discrete defect in the discounted-value identity
//   V(t,X_t) e^{-int_0^t chi} = V(0,X_0) + martingale part + drift part,
// where the drift part integrates (generator V - chi V) e^{-int chi} with
// left-point rules and the martingale part pairs grad V . sigma with the
// stored Brownian increments. Exact dynamics make this O(h^(1/2)) or better;
// each path is truncated at its last in-domain node.
inline double integrating_factor_residual(const ItoModel& model,
                                          const ScalarField& V,
                                          const GridFunction& chi,
                                          const PathBatch& batch) {
  if (!batch.has_trajectories || !batch.has_increments)
    throw std::invalid_argument(
        "integrating_factor_residual: batch needs recorded trajectories and "
        "increments");
  if (batch.d != model.d || batch.m != model.m)
    throw std::invalid_argument(
        "integrating_factor_residual: batch dimensions do not match model");
  if (chi.horizon() + 1e-12 < batch.T)
    throw std::invalid_argument(
        "integrating_factor_residual: chi grid does not cover the horizon");

  const std::size_t d = model.d, m = model.m;
  const std::size_t K = batch.n_steps;
  const double h = batch.h();

  std::vector<double> discount(K + 1), chi_at(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    const double t = std::min(h * static_cast<double>(k), chi.horizon());
    discount[k] = std::exp(-chi.integral_to(t));
    chi_at[k] = chi.value_at(t);
  }

  std::vector<double> sq(batch.n_paths);
  std::vector<double> mu(d), sig(d * m), g, hs;
  for (std::size_t p = 0; p < batch.n_paths; ++p) {
    const std::size_t M = batch.last_node(p);
    double rhs = detail::field_value(V, 0.0, batch.state(p, 0));
    for (std::size_t k = 0; k < M; ++k) {
      const double t = h * static_cast<double>(k);
      const double* x = batch.state(p, k);
      model.mu(t, x, mu.data());
      model.sigma(t, x, sig.data());
      detail::field_grad(V, t, x, d, g);
      detail::field_hess(V, t, x, d, hs);
      const double* dW = batch.increment(p, k);
      double mart = 0.0;  // grad V . sigma dW
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < m; ++j)
          mart += g[i] * sig[i * m + j] * dW[j];
      const double dt_term = V.dt ? V.dt(t, x) : 0.0;
      const double gen = dt_term + detail::dot(g, mu) +
                         0.5 * detail::diffusion_trace(sig, hs, d, m) -
                         chi_at[k] * detail::field_value(V, t, x);
      rhs += discount[k] * (mart + gen * h);
    }
    const double tM = h * static_cast<double>(M);
    const double lhs =
        detail::field_value(V, tM, batch.state(p, M)) * discount[M];
    sq[p] = (lhs - rhs) * (lhs - rhs);
  }
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(batch.n_paths));
}

}  // namespace sgv
