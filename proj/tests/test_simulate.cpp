#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sgv/models.hpp"
#include "sgv/simulate.hpp"

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("one explicit step matches the hand-computed update", "[simulate]") {
  const auto gbm = sgv::catalog_get(
      "gbm", {{"mu", 0.1}, {"sigma", 0.2}, {"x0", 1.0}});
  const double dW = 0.3;

  std::vector<double> x{1.0};
  sgv::scheme_step(gbm, sgv::Scheme::euler, 0.0, 0.25, x, &dW);
  CHECK(x[0] == Catch::Approx(1.085).margin(1e-15));

  x = {1.0};
  sgv::scheme_step(gbm, sgv::Scheme::tamed, 0.0, 0.25, x, &dW);
  CHECK(x[0] == Catch::Approx(1.0 + 0.025 / 1.025 + 0.06).margin(1e-15));
}

TEST_CASE("deterministic drift converges at first order", "[simulate]") {
  const auto ou =
      sgv::catalog_get("ou", {{"theta", 1.0}, {"sigma", 0.0}, {"x0", 1.0}});
  auto terminal = [&](std::size_t n_steps) {
    sgv::SimConfig cfg;
    cfg.T = 1.0;
    cfg.n_steps = n_steps;
    cfg.n_paths = 1;
    const auto batch = sgv::simulate_batch(ou, cfg);
    return batch.terminal_states[0];
  };

  const double x64 = terminal(64);
  const double h = 1.0 / 64.0;
  CHECK(x64 == Catch::Approx(std::pow(1.0 - h, 64)).margin(1e-12));

  const double err64 = std::abs(x64 - std::exp(-1.0));
  const double err256 = std::abs(terminal(256) - std::exp(-1.0));
  CHECK(err64 < 5e-3);
  CHECK(err256 < 0.3 * err64);  // one order in h across a 4x refinement
}

TEST_CASE("zero coefficients freeze the path", "[simulate]") {
  const auto still =
      sgv::catalog_get("ou", {{"theta", 0.0}, {"sigma", 0.0}, {"x0", 2.0}});
  sgv::SimConfig cfg;
  cfg.n_steps = 16;
  cfg.n_paths = 5;
  cfg.record_trajectories = true;
  const auto batch = sgv::simulate_batch(still, cfg);
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    CHECK(batch.terminal_states[p] == 2.0);
    CHECK(batch.sup_norms[p] == 2.0);
    CHECK(batch.exit_steps[p] == cfg.n_steps + 1);
    for (std::size_t k = 0; k <= cfg.n_steps; ++k)
      CHECK(batch.state(p, k)[0] == 2.0);
  }
}

TEST_CASE("batches are identical for any worker count", "[simulate]") {
  const auto gbm = sgv::catalog_get("gbm", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 32;
  cfg.n_paths = 9000;  // three fixed-size chunks
  cfg.master_seed = 77;
  cfg.record_trajectories = true;
  cfg.record_increments = true;

  const auto serial = sgv::simulate_batch(gbm, cfg);
  cfg.jobs = 4;
  const auto threaded = sgv::simulate_batch(gbm, cfg);

  CHECK(serial.terminal_states == threaded.terminal_states);
  CHECK(serial.sup_norms == threaded.sup_norms);
  CHECK(serial.exit_steps == threaded.exit_steps);
  CHECK(serial.trajectories == threaded.trajectories);
  CHECK(serial.increments == threaded.increments);

  cfg.jobs = 1;
  cfg.master_seed = 78;
  const auto reseeded = sgv::simulate_batch(gbm, cfg);
  CHECK(reseeded.terminal_states != serial.terminal_states);
}

TEST_CASE("tamed scheme tracks the plain scheme within O(h)", "[simulate]") {
  const auto gbm = sgv::catalog_get("gbm", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 256;
  cfg.n_paths = 2000;
  cfg.master_seed = 5;
  const auto euler = sgv::simulate_batch(gbm, cfg);
  cfg.scheme = sgv::Scheme::tamed;
  const auto tamed = sgv::simulate_batch(gbm, cfg);

  double worst = 0.0;
  for (std::size_t p = 0; p < cfg.n_paths; ++p)
    worst = std::max(worst, std::abs(euler.terminal_states[p] -
                                     tamed.terminal_states[p]));
  CHECK(worst < 10.0 * cfg.h());
}

TEST_CASE("domain exit freezes the path at the last interior node",
          "[simulate]") {
  const auto wild = sgv::catalog_get(
      "gbm", {{"mu", 0.0}, {"sigma", 3.0}, {"x0", 1.0}});
  sgv::SimConfig cfg;
  cfg.n_steps = 2;
  cfg.n_paths = 4000;
  cfg.master_seed = 11;
  cfg.record_trajectories = true;
  cfg.record_increments = true;
  const auto batch = sgv::simulate_batch(wild, cfg);

  std::size_t exits = 0;
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    CHECK(batch.sup_norms[p] >= 1.0);
    CHECK(batch.terminal_states[p] > 0.0);
    const auto e = batch.exit_steps[p];
    if (e <= cfg.n_steps) {
      ++exits;
      CHECK(batch.last_node(p) == e - 1);
      // frozen from the exit node onward, and the exiting step's increment
      // is not stored
      for (std::size_t k = e; k <= cfg.n_steps; ++k)
        CHECK(batch.state(p, k)[0] == batch.state(p, e - 1)[0]);
      CHECK(batch.increment(p, e - 1)[0] == 0.0);
      CHECK(batch.terminal_states[p] == batch.state(p, e - 1)[0]);
    } else {
      CHECK(e == cfg.n_steps + 1);
    }
  }
  CHECK(exits > 500);
  CHECK(exits < cfg.n_paths);
}

TEST_CASE("recorded increments have Brownian scaling", "[simulate]") {
  const auto ou = sgv::catalog_get("ou", {});
  sgv::SimConfig cfg;
  cfg.T = 2.0;
  cfg.n_steps = 64;
  cfg.n_paths = 20000;
  cfg.master_seed = 3;
  cfg.record_increments = true;
  const auto batch = sgv::simulate_batch(ou, cfg);

  std::vector<double> w_T(cfg.n_paths, 0.0);
  for (std::size_t p = 0; p < cfg.n_paths; ++p)
    for (std::size_t k = 0; k < cfg.n_steps; ++k)
      w_T[p] += batch.increment(p, k)[0];
  CHECK(std::abs(mean_of(w_T)) < 0.05);
  CHECK(var_of(w_T) == Catch::Approx(cfg.T).epsilon(0.05));
}

TEST_CASE("exact transitions reproduce oracle moments", "[simulate]") {
  sgv::SimConfig cfg;
  cfg.n_steps = 4;
  cfg.n_paths = 100000;
  cfg.master_seed = 19;

  SECTION("mean-reverting second moment") {
    const auto ou = sgv::catalog_get("ou", {});
    const auto batch = sgv::simulate_perturbed(ou, cfg, 2.0);
    std::vector<double> sq(cfg.n_paths);
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
      sq[p] = batch.exact_terminals[p] * batch.exact_terminals[p];
    const double target = ou.oracles.second_moment(1.0);
    const double se = std::sqrt(var_of(sq) / cfg.n_paths);
    CHECK(std::abs(mean_of(sq) - target) < 4.0 * se);
  }

  SECTION("multiplicative fourth moment") {
    const auto gbm = sgv::catalog_get("gbm", {});
    const auto batch = sgv::simulate_perturbed(gbm, cfg, 2.0);
    std::vector<double> q(cfg.n_paths);
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
      q[p] = std::pow(batch.exact_terminals[p], 4.0);
    const double target = gbm.oracles.pth_moment(1.0, 4.0);
    const double se = std::sqrt(var_of(q) / cfg.n_paths);
    CHECK(std::abs(mean_of(q) - target) < 4.0 * se);
  }
}

TEST_CASE("coupled paths contract deterministically for additive noise",
          "[simulate]") {
  const auto ou = sgv::catalog_get("ou", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 64;
  cfg.n_paths = 300;
  cfg.master_seed = 23;
  const auto coupled = sgv::simulate_coupled(ou, cfg, {1.0}, {0.5});

  // shared increments cancel: the gap is 0.5 (1 - h)^k for every path
  const double h = cfg.h();
  const double final_gap = 0.5 * std::pow(1.0 - h, cfg.n_steps);
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    CHECK(coupled.terminal_diffs[p] == Catch::Approx(final_gap).margin(1e-12));
    CHECK(coupled.sup_diffs[p] == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("coupled multiplicative paths scale linearly in the start point",
          "[simulate]") {
  const auto gbm = sgv::catalog_get("gbm", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 64;
  cfg.n_paths = 500;
  cfg.master_seed = 29;
  const auto coupled = sgv::simulate_coupled(gbm, cfg, {2.0}, {1.0});

  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    REQUIRE(coupled.a.exit_steps[p] == cfg.n_steps + 1);
    const double unit = coupled.b.terminal_states[p];
    CHECK(coupled.terminal_diffs[p] ==
          Catch::Approx(unit).epsilon(1e-12));
    CHECK(coupled.a.terminal_states[p] ==
          Catch::Approx(2.0 * unit).epsilon(1e-12));
  }
}

TEST_CASE("perturbed pair is exact when the scheme is exact", "[simulate]") {
  // zero reversion keeps additive-noise updates identical to the transition
  const auto flat =
      sgv::catalog_get("ou", {{"theta", 0.0}, {"sigma", 1.0}, {"x0", 0.0}});
  sgv::SimConfig cfg;
  cfg.n_steps = 32;
  cfg.n_paths = 400;
  const auto batch = sgv::simulate_perturbed(flat, cfg, 2.0);
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    CHECK(batch.terminal_diffs[p] == 0.0);
    CHECK(batch.sup_diffs[p] == 0.0);
  }
  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    CHECK(batch.mismatch.drift_lp[k] == 0.0);
    CHECK(batch.mismatch.diff_lp[k] == 0.0);
  }
}

TEST_CASE("mismatch series matches its small-h profile", "[simulate]") {
  const auto ou = sgv::catalog_get("ou", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 128;
  cfg.n_paths = 20000;
  cfg.master_seed = 31;
  const auto batch = sgv::simulate_perturbed(ou, cfg, 2.0);
  const double h = cfg.h();

  // drift mismatch theta^2 (Y_{k+1} - Y_k)^2 has mean ~ theta^2 sigma^2 h;
  // constant diffusion never mismatches
  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    CHECK(batch.mismatch.drift_lp[k] > 0.75 * h);
    CHECK(batch.mismatch.drift_lp[k] < 1.30 * h);
    CHECK(batch.mismatch.diff_lp[k] == 0.0);
  }

  double rms = 0.0;
  for (double dgap : batch.terminal_diffs) rms += dgap * dgap;
  rms = std::sqrt(rms / cfg.n_paths);
  CHECK(rms < 10.0 * h);
  CHECK(rms > 0.0);
}

TEST_CASE("mismatch reductions are identical for any worker count",
          "[simulate]") {
  const auto gbm = sgv::catalog_get("gbm", {});
  sgv::SimConfig cfg;
  cfg.n_steps = 16;
  cfg.n_paths = 9000;
  cfg.master_seed = 37;
  const auto serial = sgv::simulate_perturbed(gbm, cfg, 4.0);
  cfg.jobs = 3;
  const auto threaded = sgv::simulate_perturbed(gbm, cfg, 4.0);
  CHECK(serial.mismatch.drift_lp == threaded.mismatch.drift_lp);
  CHECK(serial.mismatch.diff_lp == threaded.mismatch.diff_lp);
  CHECK(serial.terminal_diffs == threaded.terminal_diffs);
  CHECK(serial.sup_diffs == threaded.sup_diffs);
}

TEST_CASE("grid sup grows under refinement in distribution", "[simulate]") {
  const auto gbm = sgv::catalog_get("gbm", {});
  sgv::SimConfig cfg;
  cfg.n_paths = 30000;
  cfg.master_seed = 41;

  cfg.n_steps = 32;
  const auto coarse = sgv::simulate_batch(gbm, cfg);
  cfg.n_steps = 256;
  const auto fine = sgv::simulate_batch(gbm, cfg);

  const double mc = mean_of(coarse.sup_norms);
  const double mf = mean_of(fine.sup_norms);
  const double se = std::sqrt(var_of(coarse.sup_norms) / cfg.n_paths +
                              var_of(fine.sup_norms) / cfg.n_paths);
  CHECK(mf > mc - 3.0 * se);
}

TEST_CASE("unstable drift aborts untamed but survives taming", "[simulate]") {
  const auto gl = sgv::catalog_get("ginzburg_landau", {{"x0", 1e8}});
  sgv::SimConfig cfg;
  cfg.n_steps = 10;
  cfg.n_paths = 2;

  CHECK_THROWS_WITH(sgv::simulate_batch(gl, cfg),
                    Catch::Matchers::ContainsSubstring("non-finite"));

  cfg.scheme = sgv::Scheme::tamed;
  const auto batch = sgv::simulate_batch(gl, cfg);
  for (double v : batch.terminal_states) CHECK(std::isfinite(v));
}

TEST_CASE("perturbed simulation validates its inputs", "[simulate]") {
  sgv::SimConfig cfg;
  cfg.n_paths = 4;
  cfg.n_steps = 4;
  const auto gl = sgv::catalog_get("ginzburg_landau", {});
  CHECK_THROWS_AS(sgv::simulate_perturbed(gl, cfg, 2.0),
                  std::invalid_argument);
  const auto ou = sgv::catalog_get("ou", {});
  CHECK_THROWS_AS(sgv::simulate_perturbed(ou, cfg, 1.5),
                  std::invalid_argument);
}

TEST_CASE("configs and names are validated", "[simulate]") {
  CHECK(sgv::scheme_from_name("euler") == sgv::Scheme::euler);
  CHECK(sgv::scheme_from_name("tamed") == sgv::Scheme::tamed);
  CHECK_THROWS_AS(sgv::scheme_from_name("milstein"), std::invalid_argument);

  sgv::SimConfig cfg;
  cfg.T = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.T = 1.0;
  cfg.n_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.n_steps = 4;
  cfg.n_paths = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
