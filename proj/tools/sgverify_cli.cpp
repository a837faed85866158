#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgv/harness.hpp"

namespace {

int cmd_verify(const std::string& config_path, const std::string& out_path,
               const std::string& format, std::size_t jobs) {
  sgv::SuiteConfig cfg;
  try {
    cfg = sgv::load_suite_config(config_path);
  } catch (const sgv::ConfigError& e) {
    std::cerr << "sgverify: " << e.what() << "\n";
    return 2;
  }
  if (jobs > 0) cfg.jobs = jobs;

  const auto result = sgv::run_suite(cfg);
  for (const auto& r : result.reports)
    std::fprintf(stderr, "%-14s %-28s %s\n", r.verdict.c_str(),
                 r.experiment_id.c_str(),
                 r.flags.empty() ? "" : r.flags.front().c_str());

  const std::string body = format == "csv"
                               ? sgv::suite_csv(result.reports)
                               : sgv::suite_json(result, cfg);
  if (out_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "sgverify: cannot write '" << out_path << "'\n";
      return 2;
    }
    out << body;
  }
  return result.all_pass ? 0 : 1;
}

int cmd_constants(double p, double q3, const std::string& variant) {
  if (!(q3 > 0.0 && q3 < p)) {
    std::cerr << "sgverify: constants needs 0 < q3 < p\n";
    return 2;
  }
  const auto v = variant == "half" ? sgv::SupVariant::half
                                   : sgv::SupVariant::full;
  const auto c = sgv::sup_constant(p, q3, v);
  std::printf("sup_constant(p=%g, q3=%g, %s) = %.15g  (abs error <= %.3g)\n",
              p, q3, variant.c_str(), c.value, c.abs_error_bound);
  return 0;
}

int cmd_list_models() {
  for (const std::string name : {"ou", "gbm", "ginzburg_landau"}) {
    const auto model = sgv::catalog_get(name);
    std::printf("%-16s d=%zu m=%zu ", name.c_str(), model.d, model.m);
    for (const auto& [key, value] : model.params)
      std::printf(" %s=%g", key.c_str(), value);
    std::vector<std::string> caps;
    try {
      (void)sgv::growth_certificate(model, 2.0);
      caps.push_back("growth");
    } catch (const sgv::CertificateUnavailable&) {
    }
    try {
      (void)sgv::lyapunov_certificate(model, 0.5,
                                      sgv::LyapunovForm::exponential);
      caps.push_back("lyapunov");
    } catch (const sgv::CertificateUnavailable&) {
    }
    try {
      (void)sgv::coupling_certificate(model, 2.0, 2.0, 2.0, 1.0,
                                      sgv::CouplingKind::envelope);
      caps.push_back("envelope");
    } catch (const sgv::CertificateUnavailable&) {
    }
    if (model.oracles.exact_transition) caps.push_back("exact-transition");
    std::printf("  [");
    for (std::size_t i = 0; i < caps.size(); ++i)
      std::printf("%s%s", i ? ", " : "", caps[i].c_str());
    std::printf("]\n");
  }
  return 0;
}

int report_check(const char* model, const char* label,
                 const sgv::CertCheckResult& chk) {
  std::printf("%-16s %-22s %s (worst violation %.3e)\n", model, label,
              chk.ok ? "ok" : "FAIL", chk.worst_violation);
  return chk.ok ? 0 : 1;
}

int cmd_self_test() {
  int failures = 0;
  const sgv::CloudSpec cloud;
  for (const std::string name : {"ou", "gbm", "ginzburg_landau"}) {
    const auto model = sgv::catalog_get(name);
    for (double p : {2.0, 4.0}) {
      const auto cert = sgv::growth_certificate(model, p);
      failures += report_check(name.c_str(),
                               p == 2.0 ? "growth p=2" : "growth p=4",
                               sgv::check_growth_certificate(model, cert,
                                                             cloud));
    }
    for (auto form : {sgv::LyapunovForm::exponential,
                      sgv::LyapunovForm::moment}) {
      const char* label = form == sgv::LyapunovForm::exponential
                              ? "lyapunov exponential"
                              : "lyapunov moment";
      try {
        const auto cert = sgv::lyapunov_certificate(model, 0.5, form);
        failures += report_check(
            name.c_str(), label,
            sgv::check_lyapunov_certificate(model, cert, form, cloud));
      } catch (const sgv::CertificateUnavailable&) {
        std::printf("%-16s %-22s unavailable\n", name.c_str(), label);
      }
    }
    for (auto kind : {sgv::CouplingKind::plain, sgv::CouplingKind::envelope}) {
      const char* label =
          kind == sgv::CouplingKind::plain ? "coupling" : "coupling envelope";
      try {
        const auto cert =
            sgv::coupling_certificate(model, 4.0, 8.0, 8.0, 1.0, kind);
        failures += report_check(
            name.c_str(), label,
            sgv::check_coupling_certificate(model, cert, cloud));
      } catch (const sgv::CertificateUnavailable&) {
        std::printf("%-16s %-22s unavailable\n", name.c_str(), label);
      }
    }
  }
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical verification of stochastic comparison inequalities"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand(
      "verify", "run a config-driven suite and report verdicts");
  std::string config_path, out_path, format = "json";
  std::size_t jobs = 0;
  verify->add_option("--config", config_path, "suite configuration file")
      ->required();
  verify->add_option("--out", out_path, "report destination (default stdout)");
  verify->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"csv", "json"}));
  verify->add_option("--jobs", jobs, "worker threads (overrides the config)");

  auto* constants = app.add_subcommand(
      "constants", "print the running-supremum moment constant");
  double p = 2.0, q3 = 1.0;
  std::string variant = "half";
  constants->add_option("--p", p, "moment index")->required();
  constants->add_option("--q3", q3, "supremum norm index")->required();
  constants->add_option("--variant", variant, "exponent variant")
      ->check(CLI::IsMember({"half", "full"}));

  auto* list = app.add_subcommand("list-models", "print the model catalog");
  auto* selftest = app.add_subcommand(
      "self-test", "run the certificate checks for every catalog model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? 0 : 2;
  }

  try {
    if (verify->parsed()) return cmd_verify(config_path, out_path, format, jobs);
    if (constants->parsed()) return cmd_constants(p, q3, variant);
    if (list->parsed()) return cmd_list_models();
    if (selftest->parsed()) return cmd_self_test();
  } catch (const std::exception& e) {
    std::cerr << "sgverify: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
