#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgv/models.hpp"

namespace {

const sgv::CloudSpec kCloud;  // 10^4 states, radii in [1e-6, 1e3]

}  // namespace

TEST_CASE("catalog returns configured models with oracles", "[models]") {
  const auto ou = sgv::catalog_get("ou", {{"theta", 1.0}, {"x0", 0.5}});
  const double t = 1.0;
  const double expected =
      0.25 * std::exp(-2.0) + 0.5 * (1.0 - std::exp(-2.0));
  CHECK(ou.oracles.second_moment(t) == Catch::Approx(expected).epsilon(1e-14));
  CHECK_FALSE(static_cast<bool>(ou.oracles.pth_moment));  // needs x0 = 0

  const auto ou0 = sgv::catalog_get("ou");
  REQUIRE(static_cast<bool>(ou0.oracles.pth_moment));
  const double v = 0.5 * (1.0 - std::exp(-2.0));
  CHECK(ou0.oracles.pth_moment(1.0, 2.0) == Catch::Approx(v).epsilon(1e-13));
  CHECK(ou0.oracles.pth_moment(1.0, 4.0) ==
        Catch::Approx(3.0 * v * v).epsilon(1e-13));

  const auto gbm = sgv::catalog_get("gbm");
  CHECK(gbm.oracles.pth_moment(1.0, 4.0) ==
        Catch::Approx(std::exp(0.2 + 6.0 * 0.04)).epsilon(1e-14));
  CHECK(gbm.oracles.second_moment(1.0) ==
        Catch::Approx(std::exp(0.1 + 0.04)).epsilon(1e-14));

  const auto gl = sgv::catalog_get("ginzburg_landau", {{"lambda", 2.0}});
  CHECK(gl.params.at("lambda") == 2.0);
  CHECK_FALSE(static_cast<bool>(gl.oracles.exact_transition));
}

TEST_CASE("catalog rejects unknown names and parameters", "[models]") {
  CHECK_THROWS_AS(sgv::catalog_get("heston"), sgv::UnknownModelError);
  CHECK_THROWS_AS(sgv::catalog_get("ou", {{"kappa", 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(sgv::catalog_get("gbm", {{"x0", -1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(sgv::catalog_get("ginzburg_landau", {{"lambda", 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("cloud sampling respects the domain", "[models]") {
  const auto gbm = sgv::catalog_get("gbm");
  sgv::CloudSpec spec;
  spec.n = 2000;
  const auto cloud = sgv::sample_cloud(gbm, spec);
  CHECK(cloud.size() == 2000);  // origin excluded: domain is x > 0
  for (const auto& x : cloud) REQUIRE(x[0] > 0.0);

  const auto ou = sgv::catalog_get("ou");
  const auto ou_cloud = sgv::sample_cloud(ou, spec);
  CHECK(ou_cloud.size() == 2001);  // origin included
  CHECK(ou_cloud.front()[0] == 0.0);
  bool has_negative = false;
  double largest = 0.0;
  for (const auto& x : ou_cloud) {
    has_negative = has_negative || x[0] < 0.0;
    largest = std::max(largest, std::abs(x[0]));
  }
  CHECK(has_negative);
  CHECK(largest > 100.0);
  const auto again = sgv::sample_cloud(ou, spec);
  CHECK(again == ou_cloud);
}

TEST_CASE("growth certificates hold on the catalog", "[models]") {
  const auto gbm = sgv::catalog_get("gbm");
  const auto gc = sgv::growth_certificate(gbm, 4.0);
  CHECK(gc.alpha == Catch::Approx(0.11).epsilon(1e-14));
  CHECK(gc.beta == 0.0);
  const auto res = sgv::check_growth_certificate(gbm, gc, kCloud);
  CHECK(res.ok);

  const auto ou = sgv::catalog_get("ou");
  for (double p : {2.0, 4.0, 7.0}) {
    const auto r =
        sgv::check_growth_certificate(ou, sgv::growth_certificate(ou, p),
                                      kCloud);
    INFO("p = " << p);
    CHECK(r.ok);
  }

  const auto gl = sgv::catalog_get("ginzburg_landau");
  CHECK(sgv::check_growth_certificate(gl, sgv::growth_certificate(gl, 4.0),
                                      kCloud)
            .ok);
}

TEST_CASE("understated growth rate is caught", "[models]") {
  const auto gbm = sgv::catalog_get("gbm");
  sgv::GrowthCertificate bad{4.0, gbm.params.at("mu"), 0.0};
  const auto res = sgv::check_growth_certificate(gbm, bad, kCloud);
  CHECK_FALSE(res.ok);
  CHECK(res.worst_violation > 0.0);
  CHECK(!res.worst_state.empty());
}

TEST_CASE("growth certificate factory validates p", "[models]") {
  const auto ou = sgv::catalog_get("ou");
  CHECK_THROWS_AS(sgv::growth_certificate(ou, 1.5), std::invalid_argument);
}

TEST_CASE("Lyapunov certificates hold in both forms", "[models]") {
  const auto ou = sgv::catalog_get("ou");
  for (auto form : {sgv::LyapunovForm::moment, sgv::LyapunovForm::exponential}) {
    const auto cert = sgv::lyapunov_certificate(ou, 0.5, form);
    const auto res = sgv::check_lyapunov_certificate(ou, cert, form, kCloud);
    INFO("form " << (form == sgv::LyapunovForm::moment ? "moment" : "exp"));
    CHECK(res.ok);
  }
  const auto gl = sgv::catalog_get("ginzburg_landau");
  for (auto form : {sgv::LyapunovForm::moment, sgv::LyapunovForm::exponential}) {
    const auto cert = sgv::lyapunov_certificate(gl, 0.5, form);
    CHECK(sgv::check_lyapunov_certificate(gl, cert, form, kCloud).ok);
  }
  if (auto cert = sgv::lyapunov_certificate(ou, 0.5, sgv::LyapunovForm::moment);
      true) {
    CHECK(cert.beta == Catch::Approx(0.5));
  }
  const auto glc = sgv::lyapunov_certificate(gl, 0.5, sgv::LyapunovForm::moment);
  CHECK(glc.beta == Catch::Approx(1.0625).epsilon(1e-14));
}

TEST_CASE("oversized Lyapunov coefficient is caught", "[models]") {
  const auto ou = sgv::catalog_get("ou");
  const auto cert =
      sgv::lyapunov_certificate(ou, 2.0, sgv::LyapunovForm::moment);
  const auto res = sgv::check_lyapunov_certificate(
      ou, cert, sgv::LyapunovForm::moment, kCloud);
  CHECK_FALSE(res.ok);
  CHECK(res.worst_violation > 1.0);
}

TEST_CASE("trivial zero Lyapunov function passes", "[models]") {
  const auto ou = sgv::catalog_get("ou");
  sgv::LyapunovCertificate zero;
  zero.U = sgv::zero_field();
  const auto res = sgv::check_lyapunov_certificate(
      ou, zero, sgv::LyapunovForm::moment, kCloud);
  CHECK(res.ok);
  CHECK(res.worst_violation <= 0.0);
}

TEST_CASE("multiplicative noise has no quadratic Lyapunov function",
          "[models]") {
  const auto gbm = sgv::catalog_get("gbm");
  CHECK_THROWS_AS(
      sgv::lyapunov_certificate(gbm, 0.5, sgv::LyapunovForm::moment),
      sgv::CertificateUnavailable);
  CHECK_THROWS_AS(sgv::coupling_certificate(gbm, 2.0, 2.0, 2.0, 1.0,
                                            sgv::CouplingKind::envelope),
                  sgv::CertificateUnavailable);
}

TEST_CASE("broken analytic derivatives are a distinct error", "[models]") {
  const auto ou = sgv::catalog_get("ou");
  sgv::LyapunovCertificate bad;
  bad.U.value = [](double, const double* x) { return 0.5 * x[0] * x[0]; };
  bad.U.grad = [](double, const double* x, double* g) { g[0] = 3.0 * x[0]; };
  bad.U.hess = [](double, const double*, double* h) { h[0] = 1.0; };
  CHECK_THROWS_AS(sgv::check_lyapunov_certificate(
                      ou, bad, sgv::LyapunovForm::moment, kCloud),
                  sgv::DerivativeMismatch);
}

TEST_CASE("coupling certificates hold on the catalog", "[models]") {
  const auto gl = sgv::catalog_get("ginzburg_landau");
  const auto plain = sgv::coupling_certificate(gl, 2.0, 2.0, 2.0, 1.0,
                                               sgv::CouplingKind::plain);
  CHECK(plain.q == Catch::Approx(1.0));
  CHECK(sgv::check_coupling_certificate(gl, plain, kCloud).ok);
  CHECK(!std::isfinite(plain.c));

  const auto env = sgv::coupling_certificate(gl, 2.0, 2.0, 2.0, 1.0,
                                             sgv::CouplingKind::envelope);
  CHECK(env.beta0 == Catch::Approx(1.0625).epsilon(1e-14));
  CHECK(env.c == Catch::Approx(1.0 + 1.0 / std::sqrt(0.5) +
                               std::pow(0.5, -1.5))
                     .epsilon(1e-14));
  CHECK(sgv::check_coupling_certificate(gl, env, kCloud).ok);

  const auto ou = sgv::catalog_get("ou");
  const auto ou_env = sgv::coupling_certificate(ou, 2.0, 2.0, 2.0, 1.0,
                                                sgv::CouplingKind::envelope);
  CHECK(ou_env.c == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(ou_env.gamma == 0.5);
  CHECK(sgv::check_coupling_certificate(ou, ou_env, kCloud).ok);

  const auto gbm = sgv::catalog_get("gbm");
  const auto gbm_plain = sgv::coupling_certificate(gbm, 4.0, 4.0, 4.0, 1.0,
                                                   sgv::CouplingKind::plain);
  CHECK(sgv::check_coupling_certificate(gbm, gbm_plain, kCloud).ok);
}

TEST_CASE("missing pair rate is caught near small states", "[models]") {
  const auto gl = sgv::catalog_get("ginzburg_landau");
  auto cert = sgv::coupling_certificate(gl, 2.0, 2.0, 2.0, 1.0,
                                        sgv::CouplingKind::plain);
  cert.ell = [](double) { return 0.0; };
  const auto res = sgv::check_coupling_certificate(gl, cert, kCloud);
  CHECK_FALSE(res.ok);
  CHECK(res.worst_violation > 0.0);
  CHECK(!res.worst_partner.empty());
}

TEST_CASE("understated growth envelope is caught", "[models]") {
  const auto ou = sgv::catalog_get("ou");
  auto cert = sgv::coupling_certificate(ou, 2.0, 2.0, 2.0, 1.0,
                                        sgv::CouplingKind::envelope);
  cert.c *= 0.5;
  const auto res = sgv::check_coupling_certificate(ou, cert, kCloud);
  CHECK_FALSE(res.ok);
}
