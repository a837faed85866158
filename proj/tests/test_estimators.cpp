#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sgv/estimators.hpp"
#include "sgv/models.hpp"
#include "sgv/rng.hpp"
#include "sgv/simulate.hpp"

namespace {

std::vector<double> lognormal_samples(std::uint64_t rep, std::size_t n,
                                      double scale = 1.0) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = sgv::rng::indexed_unit(123, sgv::rng::Stream::cloud, rep,
                                             static_cast<std::uint32_t>(2 * i));
    const double u2 = sgv::rng::indexed_unit(
        123, sgv::rng::Stream::cloud, rep, static_cast<std::uint32_t>(2 * i + 1));
    out[i] = std::exp(scale * sgv::rng::box_muller(u1, u2).first);
  }
  return out;
}

// Minimal hand-built batch: one step, scalar, chosen terminal values.
sgv::PathBatch tiny_batch(const std::vector<double>& terminals) {
  sgv::PathBatch b;
  b.d = 1;
  b.m = 1;
  b.n_paths = terminals.size();
  b.n_steps = 1;
  b.T = 1.0;
  b.has_trajectories = true;
  b.trajectories.resize(2 * terminals.size(), 0.0);
  b.terminal_states = terminals;
  b.sup_norms.assign(terminals.size(), 0.0);
  b.exit_steps.assign(terminals.size(), 2);
  for (std::size_t p = 0; p < terminals.size(); ++p) {
    b.trajectories[2 * p + 1] = terminals[p];
    b.sup_norms[p] = std::abs(terminals[p]);
  }
  return b;
}

}  // namespace

TEST_CASE("norm estimates match hand arithmetic", "[estimators]") {
  const auto a = sgv::lp_norm_estimate({1.0, 2.0, 3.0}, 2.0);
  CHECK(a.point == Catch::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-14));

  const auto b = sgv::lp_norm_estimate({0.0, 2.0}, 1.0);
  CHECK(b.point == Catch::Approx(1.0).margin(1e-15));

  const auto c = sgv::lp_norm_estimate({3.0, 3.0, 3.0, 3.0}, 2.0);
  CHECK(c.point == Catch::Approx(3.0).epsilon(1e-14));
  CHECK(c.ci_lo == c.point);
  CHECK(c.ci_hi == c.point);
  CHECK(c.n == 4);
  CHECK(c.level == 0.99);
}

TEST_CASE("norm estimates are monotone in the order", "[estimators]") {
  const auto samples = lognormal_samples(0, 500);
  double prev = 0.0;
  for (double q : {0.5, 1.0, 2.0, 3.0, 4.0}) {
    const double point = sgv::lp_norm_estimate(samples, q).point;
    CHECK(point >= prev - 1e-12);
    prev = point;
  }
}

TEST_CASE("norm estimates are scale equivariant", "[estimators]") {
  const auto samples = lognormal_samples(1, 300);
  std::vector<double> scaled(samples);
  const double c = 3.7;
  for (double& s : scaled) s *= c;
  const auto base = sgv::lp_norm_estimate(samples, 2.0);
  const auto big = sgv::lp_norm_estimate(scaled, 2.0);
  CHECK(big.point == Catch::Approx(c * base.point).epsilon(1e-12));
  CHECK(big.ci_lo == Catch::Approx(c * base.ci_lo).epsilon(1e-12));
  CHECK(big.ci_hi == Catch::Approx(c * base.ci_hi).epsilon(1e-12));
}

TEST_CASE("bootstrap intervals cover a known norm", "[estimators]") {
  // L2 norm of exp(s Z), Z standard normal, is e^(s^2); s = 0.5 keeps the
  // squared samples light enough for percentile intervals at this n
  const double truth = std::exp(0.25);
  std::size_t covered = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const auto est = sgv::lp_norm_estimate(lognormal_samples(rep, 1000, 0.5),
                                           2.0, 0.99, 1000);
    if (est.ci_lo <= truth && truth <= est.ci_hi) ++covered;
  }
  CHECK(covered >= 95);
}

TEST_CASE("estimator inputs are validated", "[estimators]") {
  CHECK_THROWS_AS(sgv::lp_norm_estimate({}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(sgv::lp_norm_estimate({1.0, std::nan("")}, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sgv::lp_norm_estimate({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sgv::lp_norm_estimate({1.0}, 2.0, 1.5),
                  std::invalid_argument);

  const auto single = sgv::lp_norm_estimate({2.5}, 2.0);
  CHECK(single.point == Catch::Approx(2.5).epsilon(1e-14));
  CHECK(single.ci_lo == single.point);
  CHECK(single.ci_hi == single.point);
  CHECK(single.has_flag(sgv::kFlagDegenerate));
}

TEST_CASE("interval endpoints bracket the point", "[estimators]") {
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const auto est = sgv::lp_norm_estimate(lognormal_samples(rep, 64), 3.0);
    CHECK(est.ci_lo <= est.point);
    CHECK(est.point <= est.ci_hi);
    CHECK(est.ci_lo < est.ci_hi);  // noisy samples give a real interval
  }
}

TEST_CASE("sup norm estimate dominates the terminal estimate", "[estimators]") {
  const auto ou = sgv::catalog_get("ou", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 64;
  cfg.n_paths = 4000;
  cfg.master_seed = 99;
  const auto batch = sgv::simulate_batch(ou, cfg);

  std::vector<double> terminal_norms(batch.n_paths);
  for (std::size_t p = 0; p < batch.n_paths; ++p)
    terminal_norms[p] = std::abs(batch.terminal_states[p]);

  for (double q : {1.0, 2.0}) {
    const auto sup = sgv::sup_lp_estimate(batch, q);
    const auto term = sgv::lp_norm_estimate(terminal_norms, q);
    CHECK(sup.point >= term.point);
    CHECK(sup.has_flag(sgv::kFlagGridSup));
  }
}

TEST_CASE("constant paths give exact sup estimates", "[estimators]") {
  const auto still =
      sgv::catalog_get("ou", {{"theta", 0.0}, {"sigma", 0.0}, {"x0", 2.0}});
  sgv::SimConfig cfg;
  cfg.n_steps = 8;
  cfg.n_paths = 32;
  const auto batch = sgv::simulate_batch(still, cfg);
  for (double q : {0.5, 1.0, 3.0}) {
    const auto est = sgv::sup_lp_estimate(batch, q);
    CHECK(est.point == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(est.ci_hi == Catch::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("zero Lyapunov data gives the unit exponential functional",
          "[estimators]") {
  const auto ou = sgv::catalog_get("ou", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 16;
  cfg.n_paths = 200;
  cfg.record_trajectories = true;
  const auto batch = sgv::simulate_batch(ou, cfg);

  sgv::LyapunovCertificate cert;  // U, Ubar default to zero
  const auto marg =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::marginal);
  CHECK(marg.point == 1.0);
  CHECK(marg.ci_lo == 1.0);
  CHECK(marg.ci_hi == 1.0);

  const auto unif =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::uniform, 0.5);
  CHECK(unif.point == 1.0);
}

TEST_CASE("deterministic paths give zero-width exponential estimates",
          "[estimators]") {
  const auto ou =
      sgv::catalog_get("ou", {{"theta", 1.0}, {"sigma", 0.0}, {"x0", 1.0}});
  sgv::SimConfig cfg;
  cfg.n_steps = 32;
  cfg.n_paths = 40;
  cfg.record_trajectories = true;
  const auto batch = sgv::simulate_batch(ou, cfg);

  sgv::LyapunovCertificate cert;
  cert.U = sgv::quadratic_field(0.5);
  const auto est =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::marginal);
  CHECK(est.point > 0.0);
  CHECK(est.ci_lo == est.point);
  CHECK(est.ci_hi == est.point);
}

TEST_CASE("mean-reverting exponential moments respect the certificate ordering",
          "[estimators]") {
  const auto ou = sgv::catalog_get("ou", {});
  const auto cert = sgv::lyapunov_certificate(ou, 0.5,
                                              sgv::LyapunovForm::exponential);
  sgv::SimConfig cfg;
  cfg.n_steps = 256;
  cfg.n_paths = 20000;
  cfg.master_seed = 2024;
  cfg.record_trajectories = true;
  const auto batch = sgv::simulate_batch(ou, cfg);

  // marginal: E[exp(U(X_T) - 0.5 T)] <= exp(U(0, x0)) = 1
  const auto marg =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::marginal);
  CHECK(marg.ci_hi <= 1.02);
  CHECK(marg.point > 0.5);
  CHECK_FALSE(marg.has_flag(sgv::kFlagClamped));

  // uniform at q = 0.5: bounded by (pi/2 + 2) times the unit RHS
  const auto unif =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::uniform, 0.5);
  CHECK(unif.ci_hi <= 1.05 * (std::numbers::pi / 2.0 + 2.0));
  CHECK(unif.point >= marg.point - 1.0);  // sanity: same scale
}

TEST_CASE("overflowing exponents are clamped and flagged", "[estimators]") {
  auto batch = tiny_batch({60.0, 0.0, 0.1, -0.2});
  sgv::LyapunovCertificate cert;
  cert.U = sgv::quadratic_field(0.5);  // exponent 1800 on the first path
  const auto est =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::marginal);
  CHECK(est.has_flag(sgv::kFlagClamped));
  CHECK(std::isfinite(est.point));
  CHECK(est.point >= std::exp(699.0) / 4.0);
}

TEST_CASE("outlier exponents raise the heavy-tail flag", "[estimators]") {
  std::vector<double> terminals(100, 0.0);
  terminals[0] = 30.0;  // exponent 450 among zeros
  auto batch = tiny_batch(terminals);
  sgv::LyapunovCertificate cert;
  cert.U = sgv::quadratic_field(0.5);
  const auto est =
      sgv::exp_functional_estimate(batch, cert, sgv::ExpMode::marginal);
  CHECK(est.has_flag(sgv::kFlagHeavyTail));

  auto tame = sgv::exp_functional_estimate(tiny_batch({0.1, 0.2, 0.3, 0.15}),
                                           cert, sgv::ExpMode::marginal);
  CHECK_FALSE(tame.has_flag(sgv::kFlagHeavyTail));
}

TEST_CASE("exponential functional validates its inputs", "[estimators]") {
  const auto ou = sgv::catalog_get("ou", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 4;
  cfg.n_paths = 8;
  const auto bare = sgv::simulate_batch(ou, cfg);
  sgv::LyapunovCertificate cert;
  CHECK_THROWS_AS(
      sgv::exp_functional_estimate(bare, cert, sgv::ExpMode::marginal),
      std::invalid_argument);

  cfg.record_trajectories = true;
  const auto full = sgv::simulate_batch(ou, cfg);
  CHECK_THROWS_AS(
      sgv::exp_functional_estimate(full, cert, sgv::ExpMode::uniform, 1.5),
      std::invalid_argument);
  CHECK_THROWS_AS(
      sgv::exp_functional_estimate(full, cert, sgv::ExpMode::uniform, 0.0),
      std::invalid_argument);
}
