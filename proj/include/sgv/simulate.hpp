#pragma once

// Path simulation for Ito models on a uniform grid: plain batches, coupled
// pairs driven by shared increments, and scheme-vs-exact perturbed pairs.
// All randomness is counter-based per (path, step), so results are
// bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sgv/models.hpp"
#include "sgv/reduce.hpp"
#include "sgv/rng.hpp"

namespace sgv {

enum class Scheme { euler, tamed };

inline const char* scheme_name(Scheme s) {
  return s == Scheme::euler ? "euler" : "tamed";
}

inline Scheme scheme_from_name(const std::string& s) {
  if (s == "euler") return Scheme::euler;
  if (s == "tamed") return Scheme::tamed;
  throw std::invalid_argument("scheme: unknown name '" + s + "'");
}

struct SimConfig {
  double T = 1.0;
  std::size_t n_steps = 256;
  std::size_t n_paths = 1000;
  std::uint64_t master_seed = 1;
  Scheme scheme = Scheme::euler;
  bool record_increments = false;
  bool record_trajectories = false;
  std::size_t jobs = 1;

  double h() const { return T / static_cast<double>(n_steps); }

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T))
      throw std::invalid_argument("sim config: horizon must be positive");
    if (n_steps == 0) throw std::invalid_argument("sim config: n_steps == 0");
    if (n_paths == 0) throw std::invalid_argument("sim config: n_paths == 0");
  }
};

// exit_steps[i] is the first grid index whose state left the domain
// (n_steps + 1 when the path never exits); the state stays frozen at the
// preceding node, so terminal_states and sup_norms only see in-domain nodes.
struct PathBatch {
  std::size_t d = 1;
  std::size_t m = 1;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double T = 0.0;
  std::vector<double> terminal_states;    // n_paths * d
  std::vector<double> sup_norms;          // n_paths
  std::vector<std::uint32_t> exit_steps;  // n_paths
  bool has_trajectories = false;
  bool has_increments = false;
  std::vector<double> trajectories;  // n_paths * (n_steps+1) * d
  std::vector<double> increments;    // n_paths * n_steps * m

  double h() const { return T / static_cast<double>(n_steps); }

  const double* state(std::size_t path, std::size_t k) const {
    return trajectories.data() + (path * (n_steps + 1) + k) * d;
  }
  const double* increment(std::size_t path, std::size_t k) const {
    return increments.data() + (path * n_steps + k) * m;
  }
  const double* terminal(std::size_t path) const {
    return terminal_states.data() + path * d;
  }
  // Index of the last live node: n_steps when the path never exited.
  std::size_t last_node(std::size_t path) const {
    return std::min<std::size_t>(exit_steps[path] - 1, n_steps);
  }
};

struct CoupledBatch {
  PathBatch a;
  PathBatch b;
  std::vector<double> sup_diffs;       // per path, over shared live nodes
  std::vector<double> terminal_diffs;  // per path
};

// Per-step L^{p/2} norms of the squared coefficient mismatch between the
// scheme path and its own coefficients frozen at the step's left node,
// sampled at the right node. Frozen (exited) paths contribute zero.
struct MismatchSeries {
  double p = 2.0;
  double h = 0.0;
  std::vector<double> drift_lp;  // size n_steps, (E[m_k^{p/2}])^{2/p}
  std::vector<double> diff_lp;   // same for the diffusion mismatch
};

struct PerturbedBatch {
  std::size_t d = 1;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  double T = 0.0;
  std::vector<double> exact_terminals;   // n_paths * d (oracle path)
  std::vector<double> scheme_terminals;  // n_paths * d
  std::vector<double> terminal_diffs;    // n_paths
  std::vector<double> sup_diffs;         // n_paths
  std::vector<std::uint32_t> exit_steps; // first frozen node, n_steps+1 if none
  MismatchSeries mismatch;
};

namespace detail {

inline double norm2(const double* x, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

inline double diff_norm2(const double* x, const double* y, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

inline bool all_finite(const double* x, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

// Runs body(chunk_index, path_lo, path_hi) over fixed-size path chunks.
// The chunk grid never depends on the worker count, so chunk-local
// accumulators merged in index order reduce deterministically.
constexpr std::size_t kChunk = 4096;

template <class F>
void for_chunks(std::size_t n_paths, std::size_t jobs, const F& body) {
  const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
  auto run = [&](std::size_t c) {
    body(c, c * kChunk, std::min(n_paths, (c + 1) * kChunk));
  };
  if (jobs <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const std::size_t n_workers = std::min(jobs, n_chunks);
  workers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w)
    workers.emplace_back([&] {
      try {
        for (std::size_t c = next.fetch_add(1);
             c < n_chunks && !failed.load(std::memory_order_relaxed);
             c = next.fetch_add(1))
          run(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    });
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Scratch buffers for one worker; sized once per chunk.
struct StepScratch {
  std::vector<double> mu;     // d
  std::vector<double> sig;    // d * m
  std::vector<double> z;      // m
  std::vector<double> next;   // d
  StepScratch(std::size_t d, std::size_t m)
      : mu(d), sig(d * m), z(m), next(d) {}
};

}  // namespace detail

// One explicit scheme step: x <- x + drift_increment + sigma * dW with the
// tamed variant dividing the drift increment by (1 + h * ||mu||).
inline void scheme_step(const ItoModel& model, Scheme scheme, double t,
                        double h, std::vector<double>& x, const double* dW,
                        detail::StepScratch& s) {
  model.mu(t, x.data(), s.mu.data());
  model.sigma(t, x.data(), s.sig.data());
  double factor = h;
  if (scheme == Scheme::tamed)
    factor = h / (1.0 + h * detail::norm2(s.mu.data(), model.d));
  for (std::size_t i = 0; i < model.d; ++i) {
    double v = x[i] + factor * s.mu[i];
    for (std::size_t j = 0; j < model.m; ++j)
      v += s.sig[i * model.m + j] * dW[j];
    s.next[i] = v;
  }
  x.assign(s.next.begin(), s.next.end());
}

inline void scheme_step(const ItoModel& model, Scheme scheme, double t,
                        double h, std::vector<double>& x, const double* dW) {
  detail::StepScratch s(model.d, model.m);
  scheme_step(model, scheme, t, h, x, dW, s);
}

inline PathBatch simulate_batch(const ItoModel& model, const SimConfig& cfg) {
  cfg.validate();
  const std::size_t d = model.d, m = model.m;
  const std::size_t n = cfg.n_paths, K = cfg.n_steps;
  const double h = cfg.h();
  const double sqh = std::sqrt(h);
  if (model.x0.size() != d)
    throw std::invalid_argument("simulate: model x0 has wrong dimension");
  if (!model.domain(model.x0.data()))
    throw std::invalid_argument("simulate: x0 outside model domain");

  PathBatch out;
  out.d = d;
  out.m = m;
  out.n_paths = n;
  out.n_steps = K;
  out.T = cfg.T;
  out.terminal_states.resize(n * d);
  out.sup_norms.resize(n);
  out.exit_steps.assign(n, static_cast<std::uint32_t>(K + 1));
  out.has_trajectories = cfg.record_trajectories;
  out.has_increments = cfg.record_increments;
  if (out.has_trajectories) out.trajectories.resize(n * (K + 1) * d);
  if (out.has_increments) out.increments.assign(n * K * m, 0.0);

  detail::for_chunks(n, cfg.jobs, [&](std::size_t, std::size_t lo,
                                      std::size_t hi) {
    detail::StepScratch s(d, m);
    std::vector<double> x(d), prev(d);
    for (std::size_t p = lo; p < hi; ++p) {
      x.assign(model.x0.begin(), model.x0.end());
      double sup = detail::norm2(x.data(), d);
      bool alive = true;
      if (out.has_trajectories)
        std::copy(x.begin(), x.end(),
                  out.trajectories.begin() + p * (K + 1) * d);
      for (std::size_t k = 0; k < K; ++k) {
        if (alive) {
          rng::step_gaussians(cfg.master_seed, p,
                              static_cast<std::uint32_t>(k),
                              static_cast<std::uint32_t>(m), s.z.data());
          for (std::size_t j = 0; j < m; ++j) s.z[j] *= sqh;
          const double t = h * static_cast<double>(k);
          prev.assign(x.begin(), x.end());
          scheme_step(model, cfg.scheme, t, h, x, s.z.data(), s);
          if (!detail::all_finite(x.data(), d))
            throw std::runtime_error(
                "simulate: non-finite state at path " + std::to_string(p) +
                ", step " + std::to_string(k + 1) +
                " (try the tamed scheme or a finer grid)");
          if (!model.domain(x.data())) {
            out.exit_steps[p] = static_cast<std::uint32_t>(k + 1);
            x.assign(prev.begin(), prev.end());  // freeze at last in-domain node
            alive = false;
          } else {
            sup = std::max(sup, detail::norm2(x.data(), d));
            if (out.has_increments)
              std::copy(s.z.begin(), s.z.end(),
                        out.increments.begin() + (p * K + k) * m);
          }
        }
        if (out.has_trajectories)
          std::copy(x.begin(), x.end(),
                    out.trajectories.begin() + (p * (K + 1) + k + 1) * d);
      }
      std::copy(x.begin(), x.end(), out.terminal_states.begin() + p * d);
      out.sup_norms[p] = sup;
    }
  });
  return out;
}

// Two initial points driven by bit-identical Brownian increments; both paths
// freeze as soon as either leaves the domain, so the difference process is
// only tracked over nodes where both are live.
inline CoupledBatch simulate_coupled(const ItoModel& model,
                                     const SimConfig& cfg,
                                     const std::vector<double>& x0,
                                     const std::vector<double>& y0) {
  cfg.validate();
  const std::size_t d = model.d, m = model.m;
  const std::size_t n = cfg.n_paths, K = cfg.n_steps;
  const double h = cfg.h();
  const double sqh = std::sqrt(h);
  if (x0.size() != d || y0.size() != d)
    throw std::invalid_argument("simulate: initial point has wrong dimension");
  if (!model.domain(x0.data()) || !model.domain(y0.data()))
    throw std::invalid_argument("simulate: initial point outside domain");

  CoupledBatch out;
  for (PathBatch* b : {&out.a, &out.b}) {
    b->d = d;
    b->m = m;
    b->n_paths = n;
    b->n_steps = K;
    b->T = cfg.T;
    b->terminal_states.resize(n * d);
    b->sup_norms.resize(n);
    b->exit_steps.assign(n, static_cast<std::uint32_t>(K + 1));
    b->has_trajectories = cfg.record_trajectories;
    if (cfg.record_trajectories) b->trajectories.resize(n * (K + 1) * d);
  }
  out.sup_diffs.resize(n);
  out.terminal_diffs.resize(n);

  detail::for_chunks(n, cfg.jobs, [&](std::size_t, std::size_t lo,
                                      std::size_t hi) {
    detail::StepScratch s(d, m);
    std::vector<double> xa(d), xb(d), za(m), preva(d), prevb(d);
    for (std::size_t p = lo; p < hi; ++p) {
      xa.assign(x0.begin(), x0.end());
      xb.assign(y0.begin(), y0.end());
      double supa = detail::norm2(xa.data(), d);
      double supb = detail::norm2(xb.data(), d);
      double supd = detail::diff_norm2(xa.data(), xb.data(), d);
      bool alive = true;
      if (cfg.record_trajectories) {
        std::copy(xa.begin(), xa.end(),
                  out.a.trajectories.begin() + p * (K + 1) * d);
        std::copy(xb.begin(), xb.end(),
                  out.b.trajectories.begin() + p * (K + 1) * d);
      }
      for (std::size_t k = 0; k < K; ++k) {
        if (alive) {
          rng::step_gaussians(cfg.master_seed, p,
                              static_cast<std::uint32_t>(k),
                              static_cast<std::uint32_t>(m), za.data());
          for (std::size_t j = 0; j < m; ++j) za[j] *= sqh;
          const double t = h * static_cast<double>(k);
          preva.assign(xa.begin(), xa.end());
          prevb.assign(xb.begin(), xb.end());
          scheme_step(model, cfg.scheme, t, h, xa, za.data(), s);
          scheme_step(model, cfg.scheme, t, h, xb, za.data(), s);
          if (!detail::all_finite(xa.data(), d) ||
              !detail::all_finite(xb.data(), d))
            throw std::runtime_error(
                "simulate: non-finite state at coupled path " +
                std::to_string(p) + ", step " + std::to_string(k + 1));
          if (!model.domain(xa.data()) || !model.domain(xb.data())) {
            out.a.exit_steps[p] = static_cast<std::uint32_t>(k + 1);
            out.b.exit_steps[p] = static_cast<std::uint32_t>(k + 1);
            xa.assign(preva.begin(), preva.end());
            xb.assign(prevb.begin(), prevb.end());
            alive = false;
          } else {
            supa = std::max(supa, detail::norm2(xa.data(), d));
            supb = std::max(supb, detail::norm2(xb.data(), d));
            supd = std::max(supd, detail::diff_norm2(xa.data(), xb.data(), d));
          }
        }
        if (cfg.record_trajectories) {
          std::copy(xa.begin(), xa.end(),
                    out.a.trajectories.begin() + (p * (K + 1) + k + 1) * d);
          std::copy(xb.begin(), xb.end(),
                    out.b.trajectories.begin() + (p * (K + 1) + k + 1) * d);
        }
      }
      std::copy(xa.begin(), xa.end(), out.a.terminal_states.begin() + p * d);
      std::copy(xb.begin(), xb.end(), out.b.terminal_states.begin() + p * d);
      out.a.sup_norms[p] = supa;
      out.b.sup_norms[p] = supb;
      out.sup_diffs[p] = supd;
      out.terminal_diffs[p] = detail::diff_norm2(xa.data(), xb.data(), d);
    }
  });
  return out;
}

// Oracle exact-transition path and scheme path on shared Gaussians. The
// scheme path plays the role of a process with coefficients frozen at the
// left node of each step; the squared drift/diffusion mismatch is sampled at
// the right node against those frozen values (the left-node sample is
// identically zero) and reduced to per-step L^{p/2} norms.
inline PerturbedBatch simulate_perturbed(const ItoModel& model,
                                         const SimConfig& cfg, double p_order) {
  cfg.validate();
  if (!model.oracles.exact_transition)
    throw std::invalid_argument(
        "simulate: model '" + model.name + "' has no exact transition oracle");
  if (!(p_order >= 2.0))
    throw std::invalid_argument("simulate: mismatch order p must be >= 2");
  const std::size_t d = model.d, m = model.m;
  const std::size_t n = cfg.n_paths, K = cfg.n_steps;
  const double h = cfg.h();
  const double sqh = std::sqrt(h);
  const double half_p = p_order / 2.0;

  PerturbedBatch out;
  out.d = d;
  out.n_paths = n;
  out.n_steps = K;
  out.T = cfg.T;
  out.exact_terminals.resize(n * d);
  out.scheme_terminals.resize(n * d);
  out.terminal_diffs.resize(n);
  out.sup_diffs.resize(n);
  out.exit_steps.assign(n, static_cast<std::uint32_t>(K + 1));
  out.mismatch.p = p_order;
  out.mismatch.h = h;
  out.mismatch.drift_lp.assign(K, 0.0);
  out.mismatch.diff_lp.assign(K, 0.0);

  const std::size_t n_chunks = (n + detail::kChunk - 1) / detail::kChunk;
  std::vector<double> drift_sums(n_chunks * K, 0.0);
  std::vector<double> diff_sums(n_chunks * K, 0.0);

  detail::for_chunks(n, cfg.jobs, [&](std::size_t c, std::size_t lo,
                                      std::size_t hi) {
    detail::StepScratch s(d, m);
    std::vector<double> y(d), xx(d), z(m), dw(m), xnext(d);
    std::vector<double> prevy(d), prevx(d);
    std::vector<double> mu_frozen(d), sig_frozen(d * m);
    std::vector<double> mu_right(d), sig_right(d * m);
    double* dsum = drift_sums.data() + c * K;
    double* qsum = diff_sums.data() + c * K;
    for (std::size_t p = lo; p < hi; ++p) {
      y.assign(model.x0.begin(), model.x0.end());
      xx.assign(model.x0.begin(), model.x0.end());
      double supd = 0.0;
      bool alive = true;
      for (std::size_t k = 0; k < K && alive; ++k) {
        rng::step_gaussians(cfg.master_seed, p, static_cast<std::uint32_t>(k),
                            static_cast<std::uint32_t>(m), z.data());
        for (std::size_t j = 0; j < m; ++j) dw[j] = sqh * z[j];
        const double t = h * static_cast<double>(k);
        model.mu(t, y.data(), mu_frozen.data());
        model.sigma(t, y.data(), sig_frozen.data());
        prevy.assign(y.begin(), y.end());
        prevx.assign(xx.begin(), xx.end());
        scheme_step(model, cfg.scheme, t, h, y, dw.data(), s);
        model.oracles.exact_transition(t, h, xx.data(), z.data(),
                                       xnext.data());
        xx.assign(xnext.begin(), xnext.end());
        if (!detail::all_finite(y.data(), d) ||
            !detail::all_finite(xx.data(), d))
          throw std::runtime_error(
              "simulate: non-finite state at perturbed path " +
              std::to_string(p) + ", step " + std::to_string(k + 1));
        if (!model.domain(y.data()) || !model.domain(xx.data())) {
          out.exit_steps[p] = static_cast<std::uint32_t>(k + 1);
          y.assign(prevy.begin(), prevy.end());
          xx.assign(prevx.begin(), prevx.end());
          alive = false;
        } else {
          const double tr = t + h;
          model.mu(tr, y.data(), mu_right.data());
          model.sigma(tr, y.data(), sig_right.data());
          double md = 0.0, mq = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            const double e = mu_right[i] - mu_frozen[i];
            md += e * e;
          }
          for (std::size_t i = 0; i < d * m; ++i) {
            const double e = sig_right[i] - sig_frozen[i];
            mq += e * e;
          }
          dsum[k] += std::pow(md, half_p);
          qsum[k] += std::pow(mq, half_p);
          supd = std::max(supd, detail::diff_norm2(xx.data(), y.data(), d));
        }
      }
      std::copy(xx.begin(), xx.end(), out.exact_terminals.begin() + p * d);
      std::copy(y.begin(), y.end(), out.scheme_terminals.begin() + p * d);
      out.terminal_diffs[p] = detail::diff_norm2(xx.data(), y.data(), d);
      out.sup_diffs[p] = supd;
    }
  });

  for (std::size_t k = 0; k < K; ++k) {
    double ds = 0.0, qs = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {  // fixed chunk order
      ds += drift_sums[c * K + k];
      qs += diff_sums[c * K + k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.mismatch.drift_lp[k] = std::pow(ds * inv, 1.0 / half_p);
    out.mismatch.diff_lp[k] = std::pow(qs * inv, 1.0 / half_p);
  }
  return out;
}

}  // namespace sgv
