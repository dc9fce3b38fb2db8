// Command-line front end. Talks to the library only through esnode.h.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esnode/esnode.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

int report_failure(const char* what, esn_status s) {
  std::fprintf(stderr, "esnode: %s failed (%s): %s\n", what, esn_status_name(s), esn_last_error());
  return esn_status_is_numerical(s) ? kExitNumerical : kExitUsage;
}

struct ConfigHandle {
  esn_config* ptr = nullptr;
  ~ConfigHandle() { esn_config_free(ptr); }
};

struct ModelHandle {
  esn_model* ptr = nullptr;
  ~ModelHandle() { esn_model_free(ptr); }
};

// Loads the config, applies --set overrides, then ESNODE_SEED.
int load(const std::string& path, const std::vector<std::string>& sets, ConfigHandle& cfg) {
  if (esn_status s = esn_config_from_file(path.c_str(), &cfg.ptr); s != ESN_OK) return report_failure("config", s);
  for (const auto& kv : sets) {
    if (esn_status s = esn_config_set(cfg.ptr, kv.c_str()); s != ESN_OK) return report_failure("--set", s);
  }
  if (const char* env = std::getenv("ESNODE_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') {
      std::fprintf(stderr, "esnode: ESNODE_SEED='%s' is not an unsigned integer\n", env);
      return kExitUsage;
    }
    if (esn_status s = esn_config_set_seed(cfg.ptr, seed); s != ESN_OK) return report_failure("ESNODE_SEED", s);
  }
  return kExitOk;
}

int cmd_run(const std::string& config, const std::string& out, const std::vector<std::string>& sets) {
  ConfigHandle cfg;
  if (int rc = load(config, sets, cfg); rc != kExitOk) return rc;
  ModelHandle model;
  if (esn_status s = esn_train(cfg.ptr, &model.ptr); s != ESN_OK) return report_failure("training", s);
  if (esn_status s = esn_model_write_artifacts(model.ptr, out.c_str()); s != ESN_OK) {
    return report_failure("writing artifacts", s);
  }
  esn_summary sum{};
  esn_model_summary(model.ptr, &sum);
  std::printf("stage1 loss %.6e (%d it)  stage2 loss %.6e (%d it)  max_abs %.6e  rmse %.6e\n", sum.stage1_final_loss,
              sum.stage1_iterations, sum.stage2_final_loss, sum.stage2_iterations, sum.max_abs, sum.rmse);
  return kExitOk;
}

int cmd_trial(const std::string& config, const std::string& out, const std::vector<std::string>& sets) {
  ConfigHandle cfg;
  if (int rc = load(config, sets, cfg); rc != kExitOk) return rc;
  if (esn_status s = esn_write_trial(cfg.ptr, out.c_str()); s != ESN_OK) return report_failure("trial", s);
  std::printf("wrote %s/trial.csv\n", out.c_str());
  return kExitOk;
}

int cmd_gradcheck(const std::string& config, const std::vector<std::string>& sets) {
  ConfigHandle cfg;
  if (int rc = load(config, sets, cfg); rc != kExitOk) return rc;
  double e1 = 0.0, e2 = 0.0;
  if (esn_status s = esn_gradcheck(cfg.ptr, &e1, &e2); s != ESN_OK) return report_failure("gradcheck", s);
  const double tol = 1e-5;
  const bool ok = e1 < tol && e2 < tol;
  std::printf("stage1 max rel error %.3e\nstage2 max rel error %.3e\n%s\n", e1, e2, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitNumerical;
}

int cmd_report(const std::string& dir) {
  size_t needed = 0;
  if (esn_status s = esn_report_format(dir.c_str(), nullptr, 0, &needed); s != ESN_OK) {
    return report_failure("report", s);
  }
  std::string buf(needed, '\0');
  if (esn_status s = esn_report_format(dir.c_str(), buf.data(), buf.size(), &needed); s != ESN_OK) {
    return report_failure("report", s);
  }
  std::fputs(buf.c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed echo state network ODE solver"};
  app.require_subcommand(1);

  std::string config, out = "out";
  std::vector<std::string> sets;
  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", config, "JSON run config")->required();
    if (with_out) sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--set", sets, "override, e.g. stage1.max_iters=1 (repeatable)");
  };

  CLI::App* run = app.add_subcommand("run", "train both stages and write all artifacts");
  add_common(run, true);
  CLI::App* trial = app.add_subcommand("trial", "write the Euler trial solution only");
  add_common(trial, true);
  CLI::App* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference Jacobians");
  add_common(grad, false);
  CLI::App* report = app.add_subcommand("report", "print a table from the artifacts of a run");
  std::string report_dir;
  report->add_option("dir", report_dir, "output directory of a run");
  report->add_option("--out", report_dir, "output directory of a run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (*run) return cmd_run(config, out, sets);
  if (*trial) return cmd_trial(config, out, sets);
  if (*grad) return cmd_gradcheck(config, sets);
  if (report_dir.empty()) {
    std::fprintf(stderr, "esnode: report needs an output directory\n");
    return kExitUsage;
  }
  return cmd_report(report_dir);
}
