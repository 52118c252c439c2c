// agcnet command-line front end. Talks to the engine exclusively through the
// public C API of the shared library.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agcnet.h"

namespace {

struct ConfigHandle {
  agc_config* ptr = nullptr;
  ~ConfigHandle() { agc_config_free(ptr); }
};

int report_failure(const char* what, agc_status status) {
  std::fprintf(stderr, "agcnet: %s failed (%s): %s\n", what, agc_status_name(status),
               agc_last_error());
  return 1;
}

/// Builds the effective config: file first, then explicit --set overrides,
/// then --seed (which is shorthand for --set seed N).
int build_config(ConfigHandle& handle, const std::string& config_path,
                 const std::vector<std::string>& overrides, long long seed, bool seed_given) {
  agc_status st = config_path.empty() ? agc_config_create(&handle.ptr)
                                      : agc_config_load(config_path.c_str(), &handle.ptr);
  if (st != AGC_OK) return report_failure("loading config", st);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "agcnet: --set expects key=value, got '%s'\n", kv.c_str());
      return 1;
    }
    st = agc_config_set(handle.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != AGC_OK) return report_failure("applying --set", st);
  }
  if (seed_given) {
    st = agc_config_set(handle.ptr, "seed", std::to_string(seed).c_str());
    if (st != AGC_OK) return report_failure("applying --seed", st);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("agcnet ") + agc_version() +
               ": graph-wavelet traffic forecasting engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  long long seed = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file (key: value lines)")->expected(1);
  app.add_option("--data", data_dir, "data directory")->expected(1);
  app.add_option("--out", out_dir, "output directory")->expected(1);
  auto* seed_opt = app.add_option("--seed", seed, "random seed override");
  app.add_option("--set", overrides, "config override key=value (repeatable)");

  // parent-level flags (--config/--data/--out/--seed/--set) may follow the
  // subcommand name
  app.fallthrough();

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset into --out");
  auto* train = app.add_subcommand("train", "train on --data, write run artifacts into --out");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on --data, report into --out");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gradcheck_report;
  std::string corrupt_param;
  gradcheck->add_option("--report", gradcheck_report, "write the report to this file");
  gradcheck->add_option("--corrupt", corrupt_param,
                        "fault-injection hook: double this parameter's analytic gradient");
  auto* ablate = app.add_subcommand("ablate", "run ablation settings on --data into --out");
  auto* ttest = app.add_subcommand("ttest", "Welch t-test between two groups of run dirs");
  std::vector<std::string> group_a, group_b;
  std::string ttest_report;
  ttest->add_option("--group-a", group_a, "run dirs of group A")->expected(-1);
  ttest->add_option("--group-b", group_b, "run dirs of group B")->expected(-1);
  ttest->add_option("--report", ttest_report, "write the report to this file");

  CLI11_PARSE(app, argc, argv);

  ConfigHandle config;
  const int cfg_rc = build_config(config, config_path, overrides, seed, seed_opt->count() > 0);
  if (cfg_rc != 0) return cfg_rc;

  const auto need = [](const std::string& value, const char* flag) {
    if (value.empty()) {
      std::fprintf(stderr, "agcnet: missing required %s\n", flag);
      return false;
    }
    return true;
  };

  if (synth->parsed()) {
    if (!need(out_dir, "--out")) return 1;
    const agc_status st = agc_run_synth(config.ptr, out_dir.c_str());
    if (st != AGC_OK) return report_failure("synth", st);
    std::printf("synth: wrote dataset to %s\n", out_dir.c_str());
    return 0;
  }
  if (train->parsed()) {
    if (!need(data_dir, "--data") || !need(out_dir, "--out")) return 1;
    const agc_status st = agc_run_train(config.ptr, data_dir.c_str(), out_dir.c_str());
    if (st != AGC_OK) return report_failure("train", st);
    std::printf("train: run artifacts in %s\n", out_dir.c_str());
    return 0;
  }
  if (eval->parsed()) {
    if (!need(data_dir, "--data") || !need(out_dir, "--out")) return 1;
    const agc_status st = agc_run_eval(checkpoint.c_str(), data_dir.c_str(), out_dir.c_str());
    if (st != AGC_OK) return report_failure("eval", st);
    std::printf("eval: report in %s\n", out_dir.c_str());
    return 0;
  }
  if (gradcheck->parsed()) {
    int passed = 0;
    const agc_status st = agc_run_gradcheck(
        config.ptr, gradcheck_report.empty() ? nullptr : gradcheck_report.c_str(),
        corrupt_param.empty() ? nullptr : corrupt_param.c_str(), &passed);
    if (st != AGC_OK) return report_failure("gradcheck", st);
    std::printf("gradcheck: %s\n", passed ? "PASS" : "FAIL");
    return passed ? 0 : 2;
  }
  if (ablate->parsed()) {
    if (!need(data_dir, "--data") || !need(out_dir, "--out")) return 1;
    const agc_status st = agc_run_ablate(config.ptr, data_dir.c_str(), out_dir.c_str());
    if (st != AGC_OK) return report_failure("ablate", st);
    std::printf("ablate: report in %s\n", out_dir.c_str());
    return 0;
  }
  if (ttest->parsed()) {
    std::vector<const char*> a, b;
    for (const auto& s : group_a) a.push_back(s.c_str());
    for (const auto& s : group_b) b.push_back(s.c_str());
    double t = 0.0, p = 1.0;
    const agc_status st =
        agc_run_ttest(a.data(), a.size(), b.data(), b.size(),
                      ttest_report.empty() ? nullptr : ttest_report.c_str(), &t, &p);
    if (st != AGC_OK) return report_failure("ttest", st);
    std::printf("ttest: t=%.6g p=%.6g\n", t, p);
    return 0;
  }
  return 1;
}
