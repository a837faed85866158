#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgv/bounds.hpp"
#include "sgv/constants.hpp"
#include "sgv/estimators.hpp"
#include "sgv/gronwall.hpp"
#include "sgv/models.hpp"
#include "sgv/simulate.hpp"

// Config-driven experiment runner. An ExperimentSpec names a model, a
// certificate, and one inequality; run_experiment estimates the left side by
// Monte Carlo, evaluates the right side from the certificate, and issues a
// verdict under the statistical slack rule. Suites parse from JSON and
// serialize to CSV or JSON with byte-stable formatting.

namespace sgv {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic checks that fail attach this flag; like a clamped
// exponential it disqualifies a PASS regardless of the numeric rule.
inline const char* kFlagCheckFailed = "deterministic check failed";

inline const std::array<const char*, 15>& inequality_ids() {
  static const std::array<const char*, 15> ids = {
      "marginal_moment",        "uniform_moment",
      "exp_marginal",           "exp_uniform",
      "poly_from_exp_marginal", "poly_from_exp_uniform",
      "lipschitz_marginal",     "lipschitz_uniform",
      "temporal_regularity",    "holder",
      "perturbation_marginal",  "perturbation_uniform",
      "opial_property",         "integrating_factor_residual",
      "constants_identity"};
  return ids;
}

inline bool known_inequality(const std::string& id) {
  const auto& ids = inequality_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

struct ExperimentSpec {
  std::string id;
  std::string inequality_id;
  std::string model = "ou";
  std::map<std::string, double> params;

  double p = 2.0;
  // Secondary norm index; NaN resolves to the inequality's default.
  double q = std::numeric_limits<double>::quiet_NaN();
  double q3 = 1.0;
  // Interpolation index (lipschitz_uniform) or perturbation delta; NaN
  // resolves to 0.5 or to the optimizing delta respectively.
  double delta = std::numeric_limits<double>::quiet_NaN();
  // Certificate strength (Lyapunov/coupling) or perturbation epsilon; NaN
  // resolves to 0.5 (certificates) or 1.0 (perturbation).
  double eps = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> y0;  // coupled partner start
  double t1 = std::numeric_limits<double>::quiet_NaN();
  double t2 = std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;          // temporal window start
  std::string variant = "half";

  SimConfig sim;
  double confidence = 0.99;
  double slack = 1.05;
  std::size_t n_bootstrap = 2000;

  std::size_t instances = 200;   // opial_property
  double grid_tol_mult = 10.0;   // opial_property: tolerance = mult * h
  std::size_t refine = 16;       // residual: coarse grid = fine / refine
  double rate = 0.4;             // residual: asserted convergence order
  double chi = 0.0;              // residual: constant discount rate

  void validate() const {
    if (!known_inequality(inequality_id))
      throw std::invalid_argument("experiment '" + id +
                                  "': unknown inequality '" + inequality_id +
                                  "'");
    if (!(slack > 1.0))
      throw std::invalid_argument("experiment '" + id + "': slack must be > 1");
    if (!(confidence > 0.0 && confidence < 1.0))
      throw std::invalid_argument("experiment '" + id +
                                  "': confidence must lie in (0,1)");
    if (variant != "half" && variant != "full")
      throw std::invalid_argument("experiment '" + id +
                                  "': variant must be half or full");
    if (refine < 2)
      throw std::invalid_argument("experiment '" + id + "': refine must be >= 2");
    if (!(rate > 0.0))
      throw std::invalid_argument("experiment '" + id + "': rate must be > 0");
    if (instances == 0)
      throw std::invalid_argument("experiment '" + id + "': instances == 0");
    if (!(grid_tol_mult > 0.0))
      throw std::invalid_argument("experiment '" + id +
                                  "': grid_tol_mult must be > 0");
    if (n_bootstrap < 2)
      throw std::invalid_argument("experiment '" + id +
                                  "': n_bootstrap must be >= 2");
    sim.validate();
  }
};

struct VerificationReport {
  std::string experiment_id;
  std::string inequality_id;
  std::string model;
  double p = std::numeric_limits<double>::quiet_NaN();
  double q = std::numeric_limits<double>::quiet_NaN();
  MomentEstimate lhs;
  BoundValue rhs;
  std::string verdict = "NOT-EVALUABLE";
  std::vector<std::string> flags;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double slack = 1.05;
  double wall_ms = 0.0;
};

namespace detail {

inline double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline double vec_norm(const double* x, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

inline std::vector<double> terminal_norms(const PathBatch& b) {
  std::vector<double> out(b.n_paths);
  for (std::size_t i = 0; i < b.n_paths; ++i)
    out[i] = vec_norm(b.terminal(i), b.d);
  return out;
}

// A percentile CI maps through any increasing transform.
inline MomentEstimate powered(MomentEstimate e, double r) {
  e.point = std::pow(e.point, r);
  e.ci_lo = std::pow(e.ci_lo, r);
  e.ci_hi = std::pow(e.ci_hi, r);
  return e;
}

inline std::uint64_t experiment_seed(std::uint64_t suite_seed,
                                     std::size_t index) {
  const rng::Block ctr = {static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32), 0u, 0u};
  return rng::u64_pair(rng::make_key(suite_seed, rng::Stream::suite), ctr)
      .first;
}

inline std::string format_state(const std::vector<double>& x) {
  std::string out = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x[i]);
    out += buf;
    if (i + 1 < x.size()) out += ", ";
  }
  return out + ")";
}

inline void require_cert(const CertCheckResult& chk, const std::string& label) {
  if (chk.ok) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", chk.worst_violation);
  throw CertificateUnavailable("certificate self-test failed (" + label +
                               "): worst violation " + buf + " at " +
                               format_state(chk.worst_state));
}

inline CloudSpec cloud_for(const SimConfig& sim) {
  CloudSpec cloud;
  cloud.times = {0.0, 0.5 * sim.T, sim.T};
  return cloud;
}

inline double resolve_q(const ExperimentSpec& spec) {
  if (!std::isnan(spec.q)) return spec.q;
  const std::string& id = spec.inequality_id;
  if (id == "uniform_moment") return 0.5 * spec.p;
  if (id == "exp_uniform") return 0.5;
  if (id == "poly_from_exp_uniform") return 1.0;
  // Coupling certificates pair the p-th moment with a q-th Lyapunov norm;
  // q = p keeps the combined norm index at p/2.
  return spec.p;
}

inline double resolve_eps(const ExperimentSpec& spec) {
  if (!std::isnan(spec.eps)) return spec.eps;
  const bool perturbation = spec.inequality_id == "perturbation_marginal" ||
                            spec.inequality_id == "perturbation_uniform";
  return perturbation ? 1.0 : 0.5;
}

inline SupVariant variant_of(const ExperimentSpec& spec) {
  return spec.variant == "half" ? SupVariant::half : SupVariant::full;
}

// Snaps a time to the nearest grid node; evaluation times and the bound
// must agree on the node actually used.
inline std::size_t snap_node(double t, double T, std::size_t n_steps,
                             const char* what) {
  if (!(t >= 0.0 && t <= T + 1e-12))
    throw std::invalid_argument(std::string(what) + " outside [0, T]");
  const double h = T / static_cast<double>(n_steps);
  const auto k = static_cast<std::size_t>(std::llround(t / h));
  return std::min(k, n_steps);
}

}  // namespace detail

inline bool flag_disqualifies(const std::string& flag) {
  return flag == kFlagClamped || flag == kFlagCheckFailed;
}

// PASS needs the upper confidence limit under the slack-scaled bound and a
// flag set free of disqualifiers; NaN on either side fails the comparison.
inline std::string decide_verdict(const MomentEstimate& lhs,
                                  const BoundValue& rhs, double slack,
                                  const std::vector<std::string>& flags) {
  for (const auto& f : flags)
    if (flag_disqualifies(f)) return "FAIL";
  return lhs.ci_hi <= rhs.value * slack ? "PASS" : "FAIL";
}

namespace detail {

inline void run_moment(const ExperimentSpec& spec, VerificationReport& rep) {
  const bool uniform = spec.inequality_id == "uniform_moment";
  const double q = resolve_q(spec);
  if (uniform) {
    rep.q = q;
    if (!(q > 0.0 && q < spec.p))
      throw std::invalid_argument("uniform_moment: need 0 < q < p");
  }
  const ItoModel model = catalog_get(spec.model, spec.params);
  const GrowthCertificate cert = growth_certificate(model, spec.p);
  require_cert(check_growth_certificate(model, cert, cloud_for(spec.sim)),
               "growth");
  const double x0n = vec_norm(model.x0.data(), model.d);
  rep.rhs = uniform
                ? uniform_moment_bound(cert, x0n, spec.sim.T, q, variant_of(spec))
                : marginal_moment_bound(cert, x0n, spec.sim.T);
  const PathBatch batch = simulate_batch(model, spec.sim);
  rep.lhs = uniform
                ? sup_lp_estimate(batch, q, spec.confidence, spec.n_bootstrap,
                                  spec.sim.master_seed)
                : lp_norm_estimate(terminal_norms(batch), spec.p,
                                   spec.confidence, spec.n_bootstrap,
                                   spec.sim.master_seed);
}

inline void run_exp_moment(const ExperimentSpec& spec,
                           VerificationReport& rep) {
  const bool uniform = spec.inequality_id == "exp_uniform";
  const double q = resolve_q(spec);
  if (uniform) {
    rep.q = q;
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("exp_uniform: need q in (0,1)");
  }
  const ItoModel model = catalog_get(spec.model, spec.params);
  const LyapunovCertificate cert =
      lyapunov_certificate(model, resolve_eps(spec), LyapunovForm::exponential);
  require_cert(check_lyapunov_certificate(model, cert,
                                          LyapunovForm::exponential,
                                          cloud_for(spec.sim)),
               "lyapunov exponential");
  rep.rhs = exp_moment_bound(cert, model.x0,
                             uniform ? BoundMode::uniform : BoundMode::marginal,
                             uniform ? q : 0.5);
  SimConfig sim = spec.sim;
  sim.record_trajectories = true;
  const PathBatch batch = simulate_batch(model, sim);
  rep.lhs = exp_functional_estimate(
      batch, cert, uniform ? ExpMode::uniform : ExpMode::marginal,
      uniform ? q : 1.0, spec.confidence, spec.n_bootstrap, sim.master_seed);
  if (uniform) rep.lhs.flags.push_back(kFlagGridSup);
}

inline void run_poly_from_exp(const ExperimentSpec& spec,
                              VerificationReport& rep) {
  const bool uniform = spec.inequality_id == "poly_from_exp_uniform";
  const double q = resolve_q(spec);
  if (uniform) {
    rep.q = q;
    if (!(q > 0.0 && q < spec.p))
      throw std::invalid_argument("poly_from_exp_uniform: need 0 < q < p");
  }
  const ItoModel model = catalog_get(spec.model, spec.params);
  const LyapunovCertificate cert =
      lyapunov_certificate(model, resolve_eps(spec), LyapunovForm::moment);
  require_cert(
      check_lyapunov_certificate(model, cert, LyapunovForm::moment,
                                 cloud_for(spec.sim)),
      "lyapunov moment");
  rep.rhs = poly_from_exp_bound(cert, model.x0, spec.p, spec.sim.T,
                                uniform ? BoundMode::uniform
                                        : BoundMode::marginal,
                                uniform ? q : 1.0);
  SimConfig sim = spec.sim;
  sim.record_trajectories = uniform;
  const PathBatch batch = simulate_batch(model, sim);
  const double h = batch.h();
  std::vector<double> samples(batch.n_paths);
  if (uniform) {
    // sup_k of the discounted Lyapunov value, then the shifted sample
    // p + sup enters the q-th-power mean.
    for (std::size_t i = 0; i < batch.n_paths; ++i) {
      const std::size_t M = batch.last_node(i);
      double sup = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k <= M; ++k) {
        const double t = h * static_cast<double>(k);
        const double u = std::exp(-cert.alpha * t) *
                         field_value(cert.U, t, batch.state(i, k));
        sup = std::max(sup, u);
      }
      samples[i] = spec.p + sup;
    }
    rep.lhs = powered(lp_norm_estimate(samples, q, spec.confidence,
                                       spec.n_bootstrap, sim.master_seed),
                      q);
    rep.lhs.flags.push_back(kFlagGridSup);
  } else {
    for (std::size_t i = 0; i < batch.n_paths; ++i) {
      const std::size_t M = batch.last_node(i);
      const double t = h * static_cast<double>(M);
      samples[i] = spec.p + std::exp(-cert.alpha * t) *
                               field_value(cert.U, t, batch.terminal(i));
    }
    rep.lhs = powered(lp_norm_estimate(samples, spec.p, spec.confidence,
                                       spec.n_bootstrap, sim.master_seed),
                      spec.p);
  }
}

inline void run_lipschitz(const ExperimentSpec& spec,
                          VerificationReport& rep) {
  const bool uniform = spec.inequality_id == "lipschitz_uniform";
  const double q = resolve_q(spec);
  rep.q = q;
  const double delta = std::isnan(spec.delta) ? 0.5 : spec.delta;
  if (uniform && !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("lipschitz_uniform: need delta in (0,1)");
  const ItoModel model = catalog_get(spec.model, spec.params);
  if (spec.y0.size() != model.d)
    throw std::invalid_argument("lipschitz: y0 must have the model dimension");
  const CouplingCertificate cert =
      coupling_certificate(model, spec.p, 2.0 * q, 2.0 * q, spec.sim.T,
                           CouplingKind::plain);
  require_cert(check_coupling_certificate(model, cert, cloud_for(spec.sim)),
               "coupling");
  rep.rhs = lipschitz_bound(cert, model.x0, spec.y0, spec.sim.T,
                            uniform ? BoundMode::uniform : BoundMode::marginal,
                            delta);
  const CoupledBatch cb = simulate_coupled(model, spec.sim, model.x0, spec.y0);
  // Norm index of the coupled comparison: pq/(p+q) marginal, p q delta/(p delta + q)
  // uniform, with q the certificate's combined Lyapunov index.
  const double idx =
      uniform ? spec.p * cert.q * delta / (spec.p * delta + cert.q)
              : spec.p * cert.q / (spec.p + cert.q);
  rep.lhs = lp_norm_estimate(uniform ? cb.sup_diffs : cb.terminal_diffs, idx,
                             spec.confidence, spec.n_bootstrap,
                             spec.sim.master_seed);
  if (uniform) rep.lhs.flags.push_back(kFlagGridSup);
}

inline void run_temporal(const ExperimentSpec& spec, VerificationReport& rep) {
  const double q = resolve_q(spec);
  const ItoModel model = catalog_get(spec.model, spec.params);
  const CouplingCertificate cert =
      coupling_certificate(model, spec.p, 2.0 * q, 2.0 * q, spec.sim.T,
                           CouplingKind::envelope, resolve_eps(spec));
  require_cert(check_coupling_certificate(model, cert, cloud_for(spec.sim)),
               "coupling envelope");
  const std::size_t ks =
      snap_node(spec.s, spec.sim.T, spec.sim.n_steps, "temporal start s");
  const double h = spec.sim.T / static_cast<double>(spec.sim.n_steps);
  const double s_used = h * static_cast<double>(ks);
  rep.rhs = temporal_regularity_bound(cert, model.x0, s_used, spec.sim.T,
                                      spec.p);
  SimConfig sim = spec.sim;
  sim.record_trajectories = true;
  const PathBatch batch = simulate_batch(model, sim);
  std::vector<double> samples(batch.n_paths);
  for (std::size_t i = 0; i < batch.n_paths; ++i) {
    // Exited paths stay frozen, so every node clamps to the last live one.
    const std::size_t M = batch.last_node(i);
    const double* base = batch.state(i, std::min(ks, M));
    double sup = 0.0;
    for (std::size_t k = ks + 1; k <= batch.n_steps; ++k) {
      const double* x = batch.state(i, std::min(k, M));
      double d2 = 0.0;
      for (std::size_t j = 0; j < batch.d; ++j)
        d2 += (x[j] - base[j]) * (x[j] - base[j]);
      sup = std::max(sup, d2);
    }
    samples[i] = std::sqrt(sup);
  }
  rep.lhs = lp_norm_estimate(samples, spec.p, spec.confidence,
                             spec.n_bootstrap, sim.master_seed);
  rep.lhs.flags.push_back(kFlagGridSup);
}

inline void run_holder(const ExperimentSpec& spec, VerificationReport& rep) {
  if (std::isnan(spec.t1) || std::isnan(spec.t2))
    throw std::invalid_argument("holder: t1 and t2 are required");
  const double q = resolve_q(spec);
  rep.q = q;
  const ItoModel model = catalog_get(spec.model, spec.params);
  if (spec.y0.size() != model.d)
    throw std::invalid_argument("holder: y0 must have the model dimension");
  const CouplingCertificate cert =
      coupling_certificate(model, spec.p, 2.0 * q, 2.0 * q, spec.sim.T,
                           CouplingKind::envelope, resolve_eps(spec));
  require_cert(check_coupling_certificate(model, cert, cloud_for(spec.sim)),
               "coupling envelope");
  const std::size_t k1 =
      snap_node(spec.t1, spec.sim.T, spec.sim.n_steps, "holder t1");
  const std::size_t k2 =
      snap_node(spec.t2, spec.sim.T, spec.sim.n_steps, "holder t2");
  const double h = spec.sim.T / static_cast<double>(spec.sim.n_steps);
  rep.rhs = holder_bound(cert, model.x0, spec.y0,
                         h * static_cast<double>(k1),
                         h * static_cast<double>(k2), spec.p);
  SimConfig sim = spec.sim;
  sim.record_trajectories = true;
  const CoupledBatch cb = simulate_coupled(model, sim, model.x0, spec.y0);
  std::vector<double> samples(cb.a.n_paths);
  for (std::size_t i = 0; i < cb.a.n_paths; ++i) {
    const double* xa = cb.a.state(i, std::min(k1, cb.a.last_node(i)));
    const double* xb = cb.b.state(i, std::min(k2, cb.b.last_node(i)));
    double d2 = 0.0;
    for (std::size_t j = 0; j < cb.a.d; ++j)
      d2 += (xa[j] - xb[j]) * (xa[j] - xb[j]);
    samples[i] = std::sqrt(d2);
  }
  const double idx = spec.p * cert.q / (spec.p + cert.q);
  rep.lhs = lp_norm_estimate(samples, idx, spec.confidence, spec.n_bootstrap,
                             sim.master_seed);
}

inline void run_perturbation(const ExperimentSpec& spec,
                             VerificationReport& rep) {
  const bool uniform = spec.inequality_id == "perturbation_uniform";
  if (uniform) {
    rep.q = spec.q3;
    if (!(spec.q3 > 0.0 && spec.q3 < spec.p))
      throw std::invalid_argument("perturbation_uniform: need 0 < q3 < p");
  }
  const ItoModel model = catalog_get(spec.model, spec.params);
  if (!model.oracles.exact_transition)
    throw CertificateUnavailable("perturbation: model '" + model.name +
                                 "' has no exact transition oracle");
  if (std::isnan(model.drift_one_sided_lip) ||
      std::isnan(model.diffusion_lip_sq))
    throw CertificateUnavailable(
        "perturbation: model '" + model.name +
        "' declares no drift/diffusion envelope constants");
  const PerturbedBatch pb = simulate_perturbed(model, spec.sim, spec.p);
  rep.rhs = perturbation_bound(model, pb.mismatch, 0.0, resolve_eps(spec),
                               spec.delta,
                               uniform ? BoundMode::uniform
                                       : BoundMode::marginal,
                               spec.q3);
  rep.lhs = lp_norm_estimate(uniform ? pb.sup_diffs : pb.terminal_diffs,
                             spec.p, spec.confidence, spec.n_bootstrap,
                             spec.sim.master_seed);
  if (uniform) rep.lhs.flags.push_back(kFlagGridSup);
}

inline void run_opial(const ExperimentSpec& spec, VerificationReport& rep) {
  const double h = spec.sim.T / static_cast<double>(spec.sim.n_steps);
  const double tol = spec.grid_tol_mult * h;
  double worst = 0.0;
  bool all_ok = true;
  for (std::size_t i = 0; i < spec.instances; ++i) {
    const OpialInstance inst = make_equality_instance(
        spec.sim.master_seed, i, spec.sim.n_steps, spec.sim.T);
    const OpialReport r = opial_check(inst, tol);
    worst = std::max(worst, r.max_violation);
    all_ok = all_ok && r.hypothesis_ok && r.conclusion_ok;
  }
  rep.lhs.q = 1.0;
  rep.lhs.point = std::max(worst, 0.0);
  rep.lhs.ci_lo = rep.lhs.point;
  rep.lhs.ci_hi = rep.lhs.point;
  rep.lhs.level = spec.confidence;
  rep.lhs.n = spec.instances;
  if (!all_ok) rep.lhs.flags.push_back(kFlagCheckFailed);
  rep.rhs.value = tol;
  rep.rhs.breakdown = {{"grid_tolerance", tol}};
  rep.rhs.details = {{"step", h},
                     {"instances", static_cast<double>(spec.instances)}};
  rep.rhs.assumptions = {"equality-constructed instances"};
}

inline void run_residual(const ExperimentSpec& spec, VerificationReport& rep) {
  if (spec.sim.n_steps % spec.refine != 0 || spec.sim.n_steps == spec.refine)
    throw std::invalid_argument(
        "integrating_factor_residual: refine must properly divide steps");
  const ItoModel model = catalog_get(spec.model, spec.params);
  const ScalarField V = quadratic_field(1.0);
  SimConfig fine = spec.sim;
  fine.record_trajectories = true;
  fine.record_increments = true;
  SimConfig coarse = fine;
  coarse.n_steps = fine.n_steps / spec.refine;
  const auto rms = [&](const SimConfig& cfg) {
    const GridFunction chi =
        GridFunction::constant(spec.chi, cfg.T, cfg.n_steps);
    const PathBatch batch = simulate_batch(model, cfg);
    return integrating_factor_residual(model, V, chi, batch);
  };
  const double r_coarse = rms(coarse);
  const double r_fine = rms(fine);
  rep.lhs.q = 1.0;
  rep.lhs.point = r_fine;
  rep.lhs.ci_lo = r_fine;
  rep.lhs.ci_hi = r_fine;
  rep.lhs.level = spec.confidence;
  rep.lhs.n = spec.sim.n_paths;
  // The claim "RMS decays with order >= rate" as an inequality between the
  // two grids: fine <= coarse * refine^(-rate).
  const double decay =
      std::pow(static_cast<double>(spec.refine), -spec.rate);
  rep.rhs.value = r_coarse * decay;
  rep.rhs.breakdown = {{"coarse_residual", r_coarse},
                       {"refinement_decay", decay}};
  rep.rhs.details = {{"rate", spec.rate},
                     {"refine", static_cast<double>(spec.refine)},
                     {"chi", spec.chi}};
  rep.rhs.assumptions = {"quadratic test function"};
}

inline void run_constants(const ExperimentSpec& spec,
                          VerificationReport& rep) {
  (void)spec;
  double worst = 0.0;
  // Reflection identity of the tail integral at a = 0.
  for (int i = 1; i <= 19; ++i) {
    const double r = static_cast<double>(i) / 20.0;
    const double exact = std::numbers::pi * r / std::sin(std::numbers::pi * r);
    const double gap = std::abs(tail_integral(r, 0.0).value - exact);
    worst = std::max(worst, gap / 1e-8);
  }
  // Dual quadrature routes to the same maximal-inequality constant.
  for (int i = 1; i <= 9; ++i) {
    const double q = static_cast<double>(i) / 10.0;
    worst = std::max(worst, burkholder_identity_gap(q, 1e-10) / 2e-10);
  }
  // Closed-form spot value at r = 1/2, a = 1.
  const double spot =
      std::abs(tail_integral(0.5, 1.0).value - (std::numbers::pi / 4.0 + 0.5));
  worst = std::max(worst, spot / 1e-10);
  rep.lhs.q = 1.0;
  rep.lhs.point = worst;
  rep.lhs.ci_lo = worst;
  rep.lhs.ci_hi = worst;
  rep.lhs.level = spec.confidence;
  rep.lhs.n = 29;
  rep.rhs.value = 1.0;
  rep.rhs.breakdown = {{"normalized_tolerance", 1.0}};
  rep.rhs.assumptions = {"identity gaps scaled by their tolerances"};
}

inline void dispatch(const ExperimentSpec& spec, VerificationReport& rep) {
  const std::string& id = spec.inequality_id;
  if (id == "marginal_moment" || id == "uniform_moment")
    return run_moment(spec, rep);
  if (id == "exp_marginal" || id == "exp_uniform")
    return run_exp_moment(spec, rep);
  if (id == "poly_from_exp_marginal" || id == "poly_from_exp_uniform")
    return run_poly_from_exp(spec, rep);
  if (id == "lipschitz_marginal" || id == "lipschitz_uniform")
    return run_lipschitz(spec, rep);
  if (id == "temporal_regularity") return run_temporal(spec, rep);
  if (id == "holder") return run_holder(spec, rep);
  if (id == "perturbation_marginal" || id == "perturbation_uniform")
    return run_perturbation(spec, rep);
  if (id == "opial_property") return run_opial(spec, rep);
  if (id == "integrating_factor_residual") return run_residual(spec, rep);
  if (id == "constants_identity") return run_constants(spec, rep);
  throw std::invalid_argument("unknown inequality '" + id + "'");
}

}  // namespace detail

// True when the inequality consumes the configured model; rows for the
// purely deterministic checks print "-" in the model column.
inline bool inequality_uses_model(const std::string& id) {
  return id != "opial_property" && id != "constants_identity";
}

inline VerificationReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  VerificationReport rep;
  rep.experiment_id = spec.id;
  rep.inequality_id = spec.inequality_id;
  rep.model = inequality_uses_model(spec.inequality_id) ? spec.model : "-";
  rep.p = spec.p;
  rep.seed = spec.sim.master_seed;
  rep.n_paths = spec.sim.n_paths;
  rep.n_steps = spec.sim.n_steps;
  rep.slack = spec.slack;
  rep.lhs.point = detail::quiet_nan();
  rep.lhs.ci_lo = detail::quiet_nan();
  rep.lhs.ci_hi = detail::quiet_nan();
  rep.lhs.level = spec.confidence;
  rep.rhs.value = detail::quiet_nan();
  rep.rhs.inequality_id = spec.inequality_id;
  try {
    detail::dispatch(spec, rep);
    rep.rhs.inequality_id = spec.inequality_id;
    rep.flags = rep.lhs.flags;
    rep.verdict = decide_verdict(rep.lhs, rep.rhs, spec.slack, rep.flags);
  } catch (const UnknownModelError& e) {
    rep.verdict = "NOT-EVALUABLE";
    rep.flags = {std::string("not evaluable: ") + e.what()};
  } catch (const CertificateUnavailable& e) {
    rep.verdict = "NOT-EVALUABLE";
    rep.flags = {std::string("not evaluable: ") + e.what()};
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

// ---------------------------------------------------------------------------
// Suite configuration

struct SuiteConfig {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::vector<ExperimentSpec> experiments;
};

namespace detail {

using json = nlohmann::ordered_json;

inline double json_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

inline std::size_t json_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(where + ": expected a nonnegative integer");
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

inline std::string json_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  return v.get<std::string>();
}

// Fields shared by "defaults" and each experiment entry. "id", "inequality",
// and "seed" stay per-experiment.
inline bool apply_common_field(ExperimentSpec& spec, const std::string& key,
                               const json& v, const std::string& where) {
  const std::string at = where + "." + key;
  if (key == "model") {
    spec.model = json_string(v, at);
  } else if (key == "params") {
    if (!v.is_object()) throw ConfigError(at + ": expected an object");
    for (const auto& [name, pv] : v.items())
      spec.params[name] = json_number(pv, at + "." + name);
  } else if (key == "p") {
    spec.p = json_number(v, at);
  } else if (key == "q") {
    spec.q = json_number(v, at);
  } else if (key == "q3") {
    spec.q3 = json_number(v, at);
  } else if (key == "delta") {
    spec.delta = json_number(v, at);
  } else if (key == "eps") {
    spec.eps = json_number(v, at);
  } else if (key == "y0") {
    if (!v.is_array()) throw ConfigError(at + ": expected an array");
    spec.y0.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
      spec.y0.push_back(json_number(v[i], at + "[" + std::to_string(i) + "]"));
  } else if (key == "t1") {
    spec.t1 = json_number(v, at);
  } else if (key == "t2") {
    spec.t2 = json_number(v, at);
  } else if (key == "s") {
    spec.s = json_number(v, at);
  } else if (key == "variant") {
    spec.variant = json_string(v, at);
  } else if (key == "paths") {
    spec.sim.n_paths = json_count(v, at);
  } else if (key == "steps") {
    spec.sim.n_steps = json_count(v, at);
  } else if (key == "horizon") {
    spec.sim.T = json_number(v, at);
  } else if (key == "scheme") {
    try {
      spec.sim.scheme = scheme_from_name(json_string(v, at));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + ": " + e.what());
    }
  } else if (key == "confidence") {
    spec.confidence = json_number(v, at);
  } else if (key == "slack") {
    spec.slack = json_number(v, at);
  } else if (key == "bootstrap") {
    spec.n_bootstrap = json_count(v, at);
  } else if (key == "instances") {
    spec.instances = json_count(v, at);
  } else if (key == "grid_tol_mult") {
    spec.grid_tol_mult = json_number(v, at);
  } else if (key == "refine") {
    spec.refine = json_count(v, at);
  } else if (key == "rate") {
    spec.rate = json_number(v, at);
  } else if (key == "chi") {
    spec.chi = json_number(v, at);
  } else {
    return false;
  }
  return true;
}

}  // namespace detail

inline SuiteConfig parse_suite_config(const std::string& text) {
  detail::json root;
  try {
    root = detail::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");

  SuiteConfig cfg;
  ExperimentSpec base;
  for (const auto& [key, v] : root.items()) {
    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::json_count(v, "seed"));
    } else if (key == "jobs") {
      cfg.jobs = std::max<std::size_t>(1, detail::json_count(v, "jobs"));
    } else if (key == "defaults") {
      if (!v.is_object()) throw ConfigError("defaults: expected an object");
      for (const auto& [dk, dv] : v.items())
        if (!detail::apply_common_field(base, dk, dv, "defaults"))
          throw ConfigError("defaults: unknown field '" + dk + "'");
    } else if (key == "experiments") {
      if (!v.is_array()) throw ConfigError("experiments: expected an array");
    } else {
      throw ConfigError("config: unknown field '" + key + "'");
    }
  }

  if (!root.contains("experiments")) return cfg;
  const auto& arr = root["experiments"];
  cfg.experiments.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "experiments[" + std::to_string(i) + "]";
    const auto& e = arr[i];
    if (!e.is_object()) throw ConfigError(where + ": expected an object");
    ExperimentSpec spec = base;
    bool seed_given = false;
    for (const auto& [key, v] : e.items()) {
      if (key == "id") {
        spec.id = detail::json_string(v, where + ".id");
      } else if (key == "inequality") {
        spec.inequality_id = detail::json_string(v, where + ".inequality");
      } else if (key == "seed") {
        spec.sim.master_seed = static_cast<std::uint64_t>(
            detail::json_count(v, where + ".seed"));
        seed_given = true;
      } else if (!detail::apply_common_field(spec, key, v, where)) {
        throw ConfigError(where + ": unknown field '" + key + "'");
      }
    }
    if (spec.inequality_id.empty())
      throw ConfigError(where + ": missing field 'inequality'");
    if (!known_inequality(spec.inequality_id))
      throw ConfigError(where + ": unknown inequality '" + spec.inequality_id +
                        "'");
    if (spec.id.empty())
      spec.id = spec.inequality_id + "-" + std::to_string(i);
    if (!seed_given)
      spec.sim.master_seed = detail::experiment_seed(cfg.seed, i);
    cfg.experiments.push_back(std::move(spec));
  }
  return cfg;
}

inline SuiteConfig load_suite_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_suite_config(buf.str());
}

// ---------------------------------------------------------------------------
// Suite execution

struct SuiteResult {
  std::vector<VerificationReport> reports;
  bool all_pass = true;
};

inline SuiteResult run_suite(const SuiteConfig& cfg) {
  SuiteResult result;
  const std::size_t n = cfg.experiments.size();
  result.reports.resize(n);
  const auto run_one = [&](std::size_t i) {
    ExperimentSpec spec = cfg.experiments[i];
    spec.sim.jobs = cfg.jobs;
    try {
      result.reports[i] = run_experiment(spec);
    } catch (const std::exception& e) {
      // Partial results survive individual failures; the row records why.
      VerificationReport rep;
      rep.experiment_id = spec.id;
      rep.inequality_id = spec.inequality_id;
      rep.model =
          inequality_uses_model(spec.inequality_id) ? spec.model : "-";
      rep.p = spec.p;
      rep.seed = spec.sim.master_seed;
      rep.n_paths = spec.sim.n_paths;
      rep.n_steps = spec.sim.n_steps;
      rep.slack = spec.slack;
      rep.lhs.point = detail::quiet_nan();
      rep.lhs.ci_lo = detail::quiet_nan();
      rep.lhs.ci_hi = detail::quiet_nan();
      rep.rhs.value = detail::quiet_nan();
      rep.rhs.inequality_id = spec.inequality_id;
      rep.verdict = "NOT-EVALUABLE";
      rep.flags = {std::string("error: ") + e.what()};
      result.reports[i] = std::move(rep);
    }
  };
  const std::size_t workers = std::min(cfg.jobs, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          run_one(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& r : result.reports)
    result.all_pass = result.all_pass && r.verdict == "PASS";
  return result;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace detail {

// Shortest round-trip decimal via the JSON serializer keeps CSV and JSON
// numerically identical; NaN and infinities print by name.
inline std::string number_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return json(v).dump();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i) out += ";";
    out += flags[i];
  }
  return out;
}

}  // namespace detail

inline const char* kCsvHeader =
    "experiment_id,inequality_id,model,p,q,lhs,lhs_ci_hi,rhs,margin,verdict,"
    "flags,paths,steps,seed,wall_ms";

inline std::string suite_csv(const std::vector<VerificationReport>& reports,
                             bool include_wall = true) {
  std::string out = kCsvHeader;
  out += "\n";
  for (const auto& r : reports) {
    out += detail::csv_escape(r.experiment_id) + ",";
    out += r.inequality_id + ",";
    out += detail::csv_escape(r.model) + ",";
    out += detail::number_text(r.p) + ",";
    out += detail::number_text(r.q) + ",";
    out += detail::number_text(r.lhs.point) + ",";
    out += detail::number_text(r.lhs.ci_hi) + ",";
    out += detail::number_text(r.rhs.value) + ",";
    out += detail::number_text(r.rhs.value / r.lhs.point) + ",";
    out += r.verdict + ",";
    out += detail::csv_escape(detail::join_flags(r.flags)) + ",";
    out += std::to_string(r.n_paths) + ",";
    out += std::to_string(r.n_steps) + ",";
    out += std::to_string(r.seed) + ",";
    out += include_wall ? detail::number_text(r.wall_ms) : std::string("0");
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json report_json(const VerificationReport& r,
                                          bool include_wall = true) {
  detail::json j;
  j["experiment_id"] = r.experiment_id;
  j["inequality_id"] = r.inequality_id;
  j["model"] = r.model;
  j["p"] = r.p;
  j["q"] = r.q;
  detail::json lhs;
  lhs["point"] = r.lhs.point;
  lhs["ci_lo"] = r.lhs.ci_lo;
  lhs["ci_hi"] = r.lhs.ci_hi;
  lhs["level"] = r.lhs.level;
  lhs["n"] = r.lhs.n;
  j["lhs"] = lhs;
  detail::json rhs;
  rhs["value"] = r.rhs.value;
  detail::json breakdown = detail::json::object();
  for (const auto& [name, value] : r.rhs.breakdown) breakdown[name] = value;
  rhs["breakdown"] = breakdown;
  detail::json details = detail::json::object();
  for (const auto& [name, value] : r.rhs.details) details[name] = value;
  rhs["details"] = details;
  rhs["assumptions"] = r.rhs.assumptions;
  j["rhs"] = rhs;
  j["verdict"] = r.verdict;
  j["flags"] = r.flags;
  j["slack"] = r.slack;
  j["paths"] = r.n_paths;
  j["steps"] = r.n_steps;
  j["seed"] = r.seed;
  if (include_wall) j["wall_ms"] = r.wall_ms;
  return j;
}

inline std::string suite_json(const SuiteResult& result,
                              const SuiteConfig& cfg,
                              bool include_wall = true) {
  detail::json j;
  j["seed"] = cfg.seed;
  j["all_pass"] = result.all_pass;
  detail::json rows = detail::json::array();
  for (const auto& r : result.reports)
    rows.push_back(report_json(r, include_wall));
  j["reports"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace sgv
