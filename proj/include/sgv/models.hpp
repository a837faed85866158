#pragma once

// Catalog of scalar Ito models packaged with hypothesis certificates and,
// where closed forms exist, exact moment oracles and transition samplers.
// Certificates are data; check_* functions verify them on sampled clouds.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sgv/rng.hpp"

namespace sgv {

struct UnknownModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested certificate does not exist for the model (for example quadratic
// Lyapunov functions under multiplicative noise).
struct CertificateUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Analytic derivatives disagree with finite differences: the certificate
// data itself is broken, which is distinct from a condition violation.
struct DerivativeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scalar function of (t, x) with analytic time derivative, gradient, and
// Hessian (row-major d*d). Null dt/grad/hess mean identically zero.
struct ScalarField {
  std::function<double(double, const double*)> value;
  std::function<double(double, const double*)> dt;
  std::function<void(double, const double*, double*)> grad;
  std::function<void(double, const double*, double*)> hess;
};

inline ScalarField zero_field() {
  ScalarField f;
  f.value = [](double, const double*) { return 0.0; };
  return f;
}

// eps * |x|^2 in any dimension.
inline ScalarField quadratic_field(double eps) {
  ScalarField f;
  f.value = [eps](double, const double* x) { return eps * x[0] * x[0]; };
  f.grad = [eps](double, const double* x, double* g) { g[0] = 2.0 * eps * x[0]; };
  f.hess = [eps](double, const double*, double* h) { h[0] = 2.0 * eps; };
  return f;
}

struct ExactOracles {
  std::function<double(double, double)> pth_moment;   // (t, p)
  std::function<double(double)> second_moment;        // (t)
  // (t, h, state, standard gaussians (m of them), next state)
  std::function<void(double, double, const double*, const double*, double*)>
      exact_transition;
};

struct ItoModel {
  std::string name;
  std::size_t d = 1;
  std::size_t m = 1;
  std::function<void(double, const double*, double*)> mu;     // out: d
  std::function<void(double, const double*, double*)> sigma;  // out: d*m
  std::function<bool(const double*)> domain;
  std::vector<double> x0;
  std::map<std::string, double> params;
  ExactOracles oracles;
  // One-sided Lipschitz constant of the drift and the squared Lipschitz
  // constant of the diffusion; NaN marks "no certified constant".
  double drift_one_sided_lip = std::numeric_limits<double>::quiet_NaN();
  double diffusion_lip_sq = std::numeric_limits<double>::quiet_NaN();
};

// Witnesses <x, mu> + 1/2 |sigma|_F^2 + ((p-2)/2)|sigma^T x|^2/|x|^2
//   <= alpha |x|^2 + beta^2 / 2 on the domain (0/0 = 0 at x = 0).
struct GrowthCertificate {
  double p;
  double alpha;
  double beta;
};

enum class LyapunovForm { exponential, moment };

// Witnesses dtU + (grad U) mu + 1/2 tr(sigma sigma^T Hess U)
//   + (1/(2 e^{alpha s})) |sigma^T grad U|^2 + Ubar <= alpha U      (exponential)
//   or <= alpha U + beta                                            (moment).
struct LyapunovCertificate {
  ScalarField U;
  std::function<double(double, const double*)> Ubar;  // null means zero
  double alpha = 0.0;
  double beta = 0.0;
};

// Witnesses the coupled one-sided condition on pairs, one Lyapunov-type
// condition for each of V0 (with alpha0, beta0) and V1 (with Vbar, alpha1,
// beta1), and optionally the growth envelope max{|mu|, |sigma|} <=
// c (1 + V0)^gamma (c = NaN when no envelope is certified).
struct CouplingCertificate {
  double p = 2.0;
  double q = 1.0;
  double q0 = 2.0;
  double q1 = 2.0;
  std::function<double(double)> ell;
  ScalarField V0;
  ScalarField V1;
  std::function<double(double, const double*)> Vbar;  // null means zero
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double c = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double T = 1.0;
};

struct CloudSpec {
  std::size_t n = 10000;
  double r_min = 1e-6;
  double r_max = 1e3;
  std::uint64_t seed = 0x5EED;
  std::vector<double> times = {0.0, 0.5, 1.0};
};

struct CertCheckResult {
  bool ok = true;
  double worst_violation = -std::numeric_limits<double>::infinity();
  std::vector<double> worst_state;
  std::vector<double> worst_partner;  // empty unless a pair condition lost
};

// ---------------------------------------------------------------------------
// Catalog

inline ItoModel make_ou(double theta, double sigma, double x0) {
  if (!(sigma >= 0.0) || !std::isfinite(theta))
    throw std::invalid_argument("ou: need finite theta and sigma >= 0");
  ItoModel mod;
  mod.name = "ou";
  mod.mu = [theta](double, const double* x, double* out) {
    out[0] = -theta * x[0];
  };
  mod.sigma = [sigma](double, const double*, double* out) { out[0] = sigma; };
  mod.domain = [](const double*) { return true; };
  mod.x0 = {x0};
  mod.params = {{"theta", theta}, {"sigma", sigma}, {"x0", x0}};
  mod.drift_one_sided_lip = -theta;
  mod.diffusion_lip_sq = 0.0;
  // Variance accumulated over a window of length t.
  auto var = [theta, sigma](double t) {
    if (theta == 0.0) return sigma * sigma * t;
    return sigma * sigma * (1.0 - std::exp(-2.0 * theta * t)) / (2.0 * theta);
  };
  mod.oracles.second_moment = [x0, theta, var](double t) {
    const double mean = x0 * std::exp(-theta * t);
    return mean * mean + var(t);
  };
  if (x0 == 0.0) {
    // Centered Gaussian absolute moment: E|Z|^p = 2^{p/2} Gamma((p+1)/2)/sqrt(pi).
    mod.oracles.pth_moment = [var](double t, double p) {
      const double zmom = std::pow(2.0, 0.5 * p) *
                          std::tgamma(0.5 * (p + 1.0)) /
                          std::sqrt(std::numbers::pi);
      return std::pow(var(t), 0.5 * p) * zmom;
    };
  }
  mod.oracles.exact_transition = [theta, var](double, double h, const double* x,
                                              const double* z, double* out) {
    out[0] = x[0] * std::exp(-theta * h) + std::sqrt(var(h)) * z[0];
  };
  return mod;
}

inline ItoModel make_gbm(double mu, double sigma, double x0) {
  if (!(x0 > 0.0))
    throw std::invalid_argument("gbm: x0 must lie in the domain x > 0");
  if (!(sigma >= 0.0) || !std::isfinite(mu))
    throw std::invalid_argument("gbm: need finite mu and sigma >= 0");
  ItoModel mod;
  mod.name = "gbm";
  mod.mu = [mu](double, const double* x, double* out) { out[0] = mu * x[0]; };
  mod.sigma = [sigma](double, const double* x, double* out) {
    out[0] = sigma * x[0];
  };
  mod.domain = [](const double* x) { return x[0] > 0.0; };
  mod.x0 = {x0};
  mod.params = {{"mu", mu}, {"sigma", sigma}, {"x0", x0}};
  mod.drift_one_sided_lip = mu;
  mod.diffusion_lip_sq = sigma * sigma;
  mod.oracles.pth_moment = [x0, mu, sigma](double t, double p) {
    return std::pow(std::abs(x0), p) *
           std::exp(p * mu * t + 0.5 * p * (p - 1.0) * sigma * sigma * t);
  };
  mod.oracles.second_moment = [x0, mu, sigma](double t) {
    return x0 * x0 * std::exp(2.0 * mu * t + sigma * sigma * t);
  };
  mod.oracles.exact_transition = [mu, sigma](double, double h, const double* x,
                                             const double* z, double* out) {
    out[0] = x[0] * std::exp((mu - 0.5 * sigma * sigma) * h +
                             sigma * std::sqrt(h) * z[0]);
  };
  return mod;
}

inline ItoModel make_ginzburg_landau(double eta, double lambda, double sigma,
                                     double x0) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ginzburg_landau: lambda must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("ginzburg_landau: need finite eta, sigma >= 0");
  ItoModel mod;
  mod.name = "ginzburg_landau";
  mod.mu = [eta, lambda](double, const double* x, double* out) {
    out[0] = eta * x[0] - lambda * x[0] * x[0] * x[0];
  };
  mod.sigma = [sigma](double, const double*, double* out) { out[0] = sigma; };
  mod.domain = [](const double*) { return true; };
  mod.x0 = {x0};
  mod.params = {{"eta", eta}, {"lambda", lambda}, {"sigma", sigma}, {"x0", x0}};
  mod.drift_one_sided_lip = eta;
  mod.diffusion_lip_sq = 0.0;
  return mod;
}

inline ItoModel catalog_get(const std::string& name,
                            const std::map<std::string, double>& params = {}) {
  std::map<std::string, double> merged;
  if (name == "ou") {
    merged = {{"theta", 1.0}, {"sigma", 1.0}, {"x0", 0.0}};
  } else if (name == "gbm") {
    merged = {{"mu", 0.05}, {"sigma", 0.2}, {"x0", 1.0}};
  } else if (name == "ginzburg_landau") {
    merged = {{"eta", 1.0}, {"lambda", 1.0}, {"sigma", 1.0}, {"x0", 1.0}};
  } else {
    throw UnknownModelError("unknown model: " + name);
  }
  for (const auto& [key, value] : params) {
    if (merged.find(key) == merged.end())
      throw std::invalid_argument("model " + name + ": unknown parameter " +
                                  key);
    merged[key] = value;
  }
  if (name == "ou") return make_ou(merged["theta"], merged["sigma"], merged["x0"]);
  if (name == "gbm") return make_gbm(merged["mu"], merged["sigma"], merged["x0"]);
  return make_ginzburg_landau(merged["eta"], merged["lambda"], merged["sigma"],
                              merged["x0"]);
}

// ---------------------------------------------------------------------------
// Certificate factories

inline GrowthCertificate growth_certificate(const ItoModel& model, double p) {
  if (!(p >= 2.0))
    throw std::invalid_argument("growth_certificate: p must be >= 2");
  const auto& pr = model.params;
  if (model.name == "ou")
    return {p, 0.0, pr.at("sigma") * std::sqrt(p - 1.0)};
  if (model.name == "gbm") {
    const double s = pr.at("sigma");
    return {p, pr.at("mu") + 0.5 * (p - 1.0) * s * s, 0.0};
  }
  if (model.name == "ginzburg_landau")
    return {p, pr.at("eta"), pr.at("sigma") * std::sqrt(p - 1.0)};
  throw CertificateUnavailable("growth_certificate: no certificate for " +
                               model.name);
}

inline LyapunovCertificate lyapunov_certificate(const ItoModel& model,
                                                double eps, LyapunovForm form) {
  if (!(eps > 0.0))
    throw std::invalid_argument("lyapunov_certificate: eps must be > 0");
  const auto& pr = model.params;
  double beta = 0.0;
  if (model.name == "ou") {
    const double s = pr.at("sigma");
    beta = eps * s * s;
  } else if (model.name == "ginzburg_landau") {
    const double s = pr.at("sigma");
    const double eta = pr.at("eta");
    const double lambda = pr.at("lambda");
    const double top = eta + eps * s * s;
    beta = eps * s * s + eps * top * top / (2.0 * lambda);
  } else {
    throw CertificateUnavailable(
        "lyapunov_certificate: no quadratic Lyapunov function for " +
        model.name);
  }
  LyapunovCertificate cert;
  cert.U = quadratic_field(eps);
  cert.alpha = 0.0;
  if (form == LyapunovForm::moment) {
    cert.beta = beta;
  } else {
    cert.Ubar = [beta](double, const double*) { return -beta; };
  }
  return cert;
}

enum class CouplingKind { plain, envelope };

inline CouplingCertificate coupling_certificate(const ItoModel& model, double p,
                                                double q0, double q1, double T,
                                                CouplingKind kind,
                                                double eps = 0.5) {
  if (!(p >= 2.0) || !(q0 > 0.0) || !(q1 > 0.0) || !(T > 0.0) || !(eps > 0.0))
    throw std::invalid_argument(
        "coupling_certificate: need p >= 2, q0, q1, T, eps > 0");
  const auto& pr = model.params;
  CouplingCertificate cert;
  cert.p = p;
  cert.q0 = q0;
  cert.q1 = q1;
  cert.q = 1.0 / (1.0 / q0 + 1.0 / q1);
  cert.T = T;
  cert.V0 = zero_field();
  cert.V1 = zero_field();
  if (model.name == "ou") {
    cert.ell = [](double) { return 0.0; };
    if (kind == CouplingKind::envelope) {
      const double theta = pr.at("theta");
      const double s = pr.at("sigma");
      cert.V0 = quadratic_field(eps);
      cert.beta0 = eps * s * s;
      cert.c = std::max(s, theta / std::sqrt(eps));
      cert.gamma = 0.5;
    }
    return cert;
  }
  if (model.name == "ginzburg_landau") {
    const double eta = pr.at("eta");
    cert.ell = [eta](double) { return eta; };
    if (kind == CouplingKind::envelope) {
      const double s = pr.at("sigma");
      const double lambda = pr.at("lambda");
      const double top = eta + eps * s * s;
      cert.V0 = quadratic_field(eps);
      cert.beta0 = eps * s * s + eps * top * top / (2.0 * lambda);
      cert.c = s + eta / std::sqrt(eps) + lambda / std::pow(eps, 1.5);
      cert.gamma = 1.5;
    }
    return cert;
  }
  if (model.name == "gbm") {
    if (kind == CouplingKind::envelope)
      throw CertificateUnavailable(
          "coupling_certificate: gbm admits no quadratic growth envelope");
    const double mu = pr.at("mu");
    const double s = pr.at("sigma");
    const double rate = mu + 0.5 * (p - 1.0) * s * s;
    cert.ell = [rate](double) { return rate; };
    return cert;
  }
  throw CertificateUnavailable("coupling_certificate: no certificate for " +
                               model.name);
}

// ---------------------------------------------------------------------------
// Cloud sampling and certificate checks

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const std::vector<double>& a) { return dot(a, a); }

// |sigma^T v|^2 for row-major d x m sigma.
inline double sigma_t_v_sq(const std::vector<double>& sig,
                           const std::vector<double>& v, std::size_t d,
                           std::size_t m) {
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < d; ++i) col += sig[i * m + j] * v[i];
    total += col * col;
  }
  return total;
}

inline double fro_sq(const std::vector<double>& sig) {
  double s = 0.0;
  for (double v : sig) s += v * v;
  return s;
}

// tr(sigma sigma^T H) for row-major d x m sigma and d x d H.
inline double diffusion_trace(const std::vector<double>& sig,
                              const std::vector<double>& hess, std::size_t d,
                              std::size_t m) {
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double ssij = 0.0;
      for (std::size_t k = 0; k < m; ++k) ssij += sig[i * m + k] * sig[j * m + k];
      trace += ssij * hess[i * d + j];
    }
  return trace;
}

inline double field_value(const ScalarField& f, double t, const double* x) {
  return f.value ? f.value(t, x) : 0.0;
}

inline void field_grad(const ScalarField& f, double t, const double* x,
                       std::size_t d, std::vector<double>& g) {
  g.assign(d, 0.0);
  if (f.grad) f.grad(t, x, g.data());
}

inline void field_hess(const ScalarField& f, double t, const double* x,
                       std::size_t d, std::vector<double>& h) {
  h.assign(d * d, 0.0);
  if (f.hess) f.hess(t, x, h.data());
}

// 1e-12 relative slack on pointwise conditions.
inline bool within_slack(double lhs, double rhs) {
  const double tol =
      1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return lhs - rhs <= tol;
}

}  // namespace detail

// Log-uniform radii in [r_min, r_max] with random directions, mirrored into
// the domain; includes the origin when the domain contains it.
inline std::vector<std::vector<double>> sample_cloud(const ItoModel& model,
                                                     const CloudSpec& spec) {
  std::vector<std::vector<double>> cloud;
  cloud.reserve(spec.n + 1);
  const double log_lo = std::log(spec.r_min);
  const double log_hi = std::log(spec.r_max);
  std::vector<double> zero(model.d, 0.0);
  if (model.domain(zero.data())) cloud.push_back(zero);
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::uint32_t k = 0;
    auto draw = [&] {
      return rng::indexed_unit(spec.seed, rng::Stream::cloud, i, k++);
    };
    const double r = std::exp(log_lo + (log_hi - log_lo) * draw());
    std::vector<double> x(model.d);
    if (model.d == 1) {
      x[0] = (draw() < 0.5) ? r : -r;
    } else {
      double nrm = 0.0;
      for (std::size_t c = 0; c < model.d; ++c) {
        x[c] = rng::box_muller(draw(), draw()).first;
        nrm += x[c] * x[c];
      }
      nrm = std::sqrt(nrm);
      for (auto& v : x) v *= r / nrm;
    }
    if (!model.domain(x.data())) {
      for (auto& v : x) v = -v;
      if (!model.domain(x.data()))
        throw std::runtime_error("sample_cloud: state outside domain");
    }
    cloud.push_back(std::move(x));
  }
  return cloud;
}

inline CertCheckResult check_growth_certificate(const ItoModel& model,
                                                const GrowthCertificate& cert,
                                                const CloudSpec& spec) {
  CertCheckResult res;
  const auto cloud = sample_cloud(model, spec);
  std::vector<double> mu(model.d), sig(model.d * model.m);
  for (const auto& x : cloud) {
    model.mu(0.0, x.data(), mu.data());
    model.sigma(0.0, x.data(), sig.data());
    const double xx = detail::norm_sq(x);
    const double quot =
        xx > 0.0 ? detail::sigma_t_v_sq(sig, x, model.d, model.m) / xx : 0.0;
    const double lhs = detail::dot(x, mu) + 0.5 * detail::fro_sq(sig) +
                       0.5 * (cert.p - 2.0) * quot;
    const double rhs = cert.alpha * xx + 0.5 * cert.beta * cert.beta;
    if (!detail::within_slack(lhs, rhs)) res.ok = false;
    if (lhs - rhs > res.worst_violation) {
      res.worst_violation = lhs - rhs;
      res.worst_state = x;
    }
  }
  return res;
}

// Central finite differences of a field's analytic derivatives at moderate
// radii; any relative mismatch above 1e-5 is a data error, not a violation.
inline void validate_field_derivatives(const ItoModel& model,
                                       const ScalarField& field,
                                       const CloudSpec& spec,
                                       const std::string& label) {
  if (!field.value) return;
  CloudSpec fd = spec;
  fd.n = 32;
  fd.r_min = 1e-2;
  fd.r_max = 10.0;
  fd.seed = spec.seed ^ 0xFDFDFD;
  const auto cloud = sample_cloud(model, fd);
  const double tol = 1e-5;
  auto close = [tol](double a, double b) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
  };
  std::vector<double> g, h, xp, xm;
  for (double t : spec.times) {
    for (const auto& x : cloud) {
      detail::field_grad(field, t, x.data(), model.d, g);
      detail::field_hess(field, t, x.data(), model.d, h);
      for (std::size_t i = 0; i < model.d; ++i) {
        const double hi = 1e-5 * std::max(1.0, std::abs(x[i]));
        xp = x;
        xm = x;
        xp[i] += hi;
        xm[i] -= hi;
        const double fd_grad =
            (field.value(t, xp.data()) - field.value(t, xm.data())) /
            (2.0 * hi);
        if (!close(g[i], fd_grad))
          throw DerivativeMismatch(label + ": gradient component " +
                                   std::to_string(i) +
                                   " disagrees with finite differences");
        for (std::size_t j = 0; j <= i; ++j) {
          const double hj = 2e-4 * std::max(1.0, std::abs(x[j]));
          const double hi2 = 2e-4 * std::max(1.0, std::abs(x[i]));
          double fd_hess;
          if (i == j) {
            xp = x;
            xm = x;
            xp[i] += hi2;
            xm[i] -= hi2;
            fd_hess = (field.value(t, xp.data()) -
                       2.0 * field.value(t, x.data()) +
                       field.value(t, xm.data())) /
                      (hi2 * hi2);
          } else {
            std::vector<double> pp = x, pm = x, mp = x, mm = x;
            pp[i] += hi2; pp[j] += hj;
            pm[i] += hi2; pm[j] -= hj;
            mp[i] -= hi2; mp[j] += hj;
            mm[i] -= hi2; mm[j] -= hj;
            fd_hess = (field.value(t, pp.data()) - field.value(t, pm.data()) -
                       field.value(t, mp.data()) + field.value(t, mm.data())) /
                      (4.0 * hi2 * hj);
          }
          if (!close(h[i * model.d + j], fd_hess))
            throw DerivativeMismatch(label + ": Hessian entry disagrees with "
                                             "finite differences");
        }
      }
    }
  }
}

inline CertCheckResult check_lyapunov_certificate(
    const ItoModel& model, const LyapunovCertificate& cert, LyapunovForm form,
    const CloudSpec& spec) {
  validate_field_derivatives(model, cert.U, spec, "lyapunov U");
  CertCheckResult res;
  const auto cloud = sample_cloud(model, spec);
  std::vector<double> mu(model.d), sig(model.d * model.m), g, h;
  for (double t : spec.times) {
    for (const auto& x : cloud) {
      model.mu(t, x.data(), mu.data());
      model.sigma(t, x.data(), sig.data());
      detail::field_grad(cert.U, t, x.data(), model.d, g);
      detail::field_hess(cert.U, t, x.data(), model.d, h);
      const double trace = detail::diffusion_trace(sig, h, model.d, model.m);
      const double dt_term = cert.U.dt ? cert.U.dt(t, x.data()) : 0.0;
      const double grad_sq = detail::sigma_t_v_sq(sig, g, model.d, model.m);
      const double ubar = cert.Ubar ? cert.Ubar(t, x.data()) : 0.0;
      const double lhs = dt_term + detail::dot(g, mu) + 0.5 * trace +
                         0.5 * std::exp(-cert.alpha * t) * grad_sq + ubar;
      double rhs = cert.alpha * detail::field_value(cert.U, t, x.data());
      if (form == LyapunovForm::moment) rhs += cert.beta;
      if (!detail::within_slack(lhs, rhs)) res.ok = false;
      if (lhs - rhs > res.worst_violation) {
        res.worst_violation = lhs - rhs;
        res.worst_state = x;
      }
    }
  }
  return res;
}

inline CertCheckResult check_coupling_certificate(
    const ItoModel& model, const CouplingCertificate& cert,
    const CloudSpec& spec) {
  validate_field_derivatives(model, cert.V0, spec, "coupling V0");
  validate_field_derivatives(model, cert.V1, spec, "coupling V1");
  CertCheckResult res;
  CloudSpec twice = spec;
  twice.n = 2 * spec.n;
  const auto cloud = sample_cloud(model, twice);
  std::vector<double> mux(model.d), muy(model.d), sigx(model.d * model.m),
      sigy(model.d * model.m), diff(model.d), sdiff(model.d * model.m),
      mudiff(model.d), g, h;

  auto lyap_side = [&](const ScalarField& V, double alpha, double beta,
                       bool add_vbar, double t, const std::vector<double>& x) {
    model.mu(t, x.data(), mux.data());
    model.sigma(t, x.data(), sigx.data());
    detail::field_grad(V, t, x.data(), model.d, g);
    detail::field_hess(V, t, x.data(), model.d, h);
    const double trace = detail::diffusion_trace(sigx, h, model.d, model.m);
    const double vbar =
        add_vbar && cert.Vbar ? cert.Vbar(t, x.data()) : 0.0;
    const double lhs = detail::dot(g, mux) + 0.5 * trace +
                       0.5 * std::exp(-alpha * t) *
                           detail::sigma_t_v_sq(sigx, g, model.d, model.m) +
                       vbar;
    const double rhs = alpha * detail::field_value(V, t, x.data()) + beta;
    return std::pair<double, double>(lhs, rhs);
  };

  for (double t : spec.times) {
    // Pair condition over consecutive cloud points.
    for (std::size_t i = 0; i + 1 < cloud.size(); i += 2) {
      const auto& x = cloud[i];
      const auto& y = cloud[i + 1];
      for (std::size_t c = 0; c < model.d; ++c) diff[c] = x[c] - y[c];
      const double dd = detail::norm_sq(diff);
      if (dd == 0.0) continue;
      model.mu(t, x.data(), mux.data());
      model.mu(t, y.data(), muy.data());
      model.sigma(t, x.data(), sigx.data());
      model.sigma(t, y.data(), sigy.data());
      for (std::size_t c = 0; c < sdiff.size(); ++c)
        sdiff[c] = sigx[c] - sigy[c];
      for (std::size_t c = 0; c < model.d; ++c) mudiff[c] = mux[c] - muy[c];
      const double lhs =
          detail::dot(diff, mudiff) + 0.5 * detail::fro_sq(sdiff) +
          0.5 * (cert.p - 2.0) *
              detail::sigma_t_v_sq(sdiff, diff, model.d, model.m) / dd;
      const double v0x = detail::field_value(cert.V0, t, x.data());
      const double v0y = detail::field_value(cert.V0, t, y.data());
      const double vbx = cert.Vbar ? cert.Vbar(t, x.data()) : 0.0;
      const double vby = cert.Vbar ? cert.Vbar(t, y.data()) : 0.0;
      const double rhs =
          dd * (cert.ell(t) +
                (v0x + v0y) / (2.0 * cert.q0 * cert.T *
                               std::exp(cert.alpha0 * t)) +
                (vbx + vby) / (2.0 * cert.q1 * std::exp(cert.alpha1 * t)));
      if (!detail::within_slack(lhs, rhs)) res.ok = false;
      if (lhs - rhs > res.worst_violation) {
        res.worst_violation = lhs - rhs;
        res.worst_state = x;
        res.worst_partner = y;
      }
    }
    // The two Lyapunov-type conditions and the growth envelope.
    for (const auto& x : cloud) {
      const auto [l0, r0] = lyap_side(cert.V0, cert.alpha0, cert.beta0, false,
                                      t, x);
      if (!detail::within_slack(l0, r0)) res.ok = false;
      if (l0 - r0 > res.worst_violation) {
        res.worst_violation = l0 - r0;
        res.worst_state = x;
        res.worst_partner.clear();
      }
      const auto [l1, r1] = lyap_side(cert.V1, cert.alpha1, cert.beta1, true,
                                      t, x);
      if (!detail::within_slack(l1, r1)) res.ok = false;
      if (l1 - r1 > res.worst_violation) {
        res.worst_violation = l1 - r1;
        res.worst_state = x;
        res.worst_partner.clear();
      }
      if (std::isfinite(cert.c)) {
        model.mu(t, x.data(), mux.data());
        model.sigma(t, x.data(), sigx.data());
        const double scale =
            cert.c * std::pow(1.0 + detail::field_value(cert.V0, t, x.data()),
                              cert.gamma);
        const double need = std::max(std::sqrt(detail::norm_sq(mux)),
                                     std::sqrt(detail::fro_sq(sigx)));
        if (!detail::within_slack(need, scale)) res.ok = false;
        if (need - scale > res.worst_violation) {
          res.worst_violation = need - scale;
          res.worst_state = x;
          res.worst_partner.clear();
        }
      }
    }
  }
  return res;
}

}  // namespace sgv
