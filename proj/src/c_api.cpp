#include "esnode/esnode.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "esnode/error.hpp"
#include "esnode/pipeline.hpp"

using namespace esnode;

struct esn_config {
  std::string json_text;
  std::vector<std::string> overrides;
  RunConfig parsed;
};

struct esn_model {
  TrainOutput run;
};

namespace {

thread_local std::string g_last_error;

esn_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return ESN_ERR_NONFINITE;
    case ErrorCode::DimensionMismatch: return ESN_ERR_DIMENSION;
    case ErrorCode::LengthMismatch: return ESN_ERR_LENGTH;
    case ErrorCode::DegenerateMatrix: return ESN_ERR_DEGENERATE;
    case ErrorCode::SingularSystem: return ESN_ERR_SINGULAR;
    case ErrorCode::TrialDiverged: return ESN_ERR_TRIAL_DIVERGED;
    case ErrorCode::Config: return ESN_ERR_CONFIG;
    case ErrorCode::Io: return ESN_ERR_IO;
  }
  return ESN_ERR_INTERNAL;
}

esn_status fail(esn_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
esn_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return ESN_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ESN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ESN_ERR_INTERNAL, e.what());
  }
}

esn_status copy_out(const std::string& s, char* buf, size_t size, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || size == 0) return ESN_OK;
  if (size < s.size() + 1) {
    std::memcpy(buf, s.data(), size - 1);
    buf[size - 1] = '\0';
    return fail(ESN_ERR_INVALID_ARGUMENT, "buffer too small");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return ESN_OK;
}

void reparse(esn_config& c) { c.parsed = parse_config(c.json_text, c.overrides); }

}  // namespace

extern "C" {

const char* esn_last_error(void) { return g_last_error.c_str(); }

const char* esn_status_name(esn_status s) {
  switch (s) {
    case ESN_OK: return "ok";
    case ESN_ERR_CONFIG: return "config";
    case ESN_ERR_IO: return "io";
    case ESN_ERR_DIMENSION: return "dimension_mismatch";
    case ESN_ERR_LENGTH: return "length_mismatch";
    case ESN_ERR_DEGENERATE: return "degenerate_matrix";
    case ESN_ERR_NONFINITE: return "non_finite";
    case ESN_ERR_SINGULAR: return "singular_system";
    case ESN_ERR_TRIAL_DIVERGED: return "trial_diverged";
    case ESN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case ESN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int esn_status_is_numerical(esn_status s) {
  return s == ESN_ERR_NONFINITE || s == ESN_ERR_SINGULAR || s == ESN_ERR_TRIAL_DIVERGED;
}

esn_status esn_config_from_file(const char* path, esn_config** out) {
  if (!path || !out) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, std::string("cannot open config file '") + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto c = std::make_unique<esn_config>();
    c->json_text = std::move(text);
    try {
      reparse(*c);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(path) + ": " + e.what());
    }
    *out = c.release();
  });
}

esn_status esn_config_from_json(const char* json_text, esn_config** out) {
  if (!json_text || !out) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<esn_config>();
    c->json_text = json_text;
    reparse(*c);
    *out = c.release();
  });
}

esn_status esn_config_set(esn_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    cfg->overrides.emplace_back(assignment);
    try {
      reparse(*cfg);
    } catch (...) {
      cfg->overrides.pop_back();
      throw;
    }
  });
}

esn_status esn_config_set_seed(esn_config* cfg, uint64_t seed) {
  if (!cfg) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  return esn_config_set(cfg, ("reservoir.seed=" + std::to_string(seed)).c_str());
}

esn_status esn_config_to_json(const esn_config* cfg, char* buf, size_t size, size_t* needed) {
  if (!cfg) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  std::string text;
  const esn_status g = guarded([&] { text = config_to_json(cfg->parsed); });
  return g != ESN_OK ? g : copy_out(text, buf, size, needed);
}

void esn_config_free(esn_config* cfg) { delete cfg; }

esn_status esn_train(const esn_config* cfg, esn_model** out) {
  if (!cfg || !out) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<esn_model>();
    m->run = train(cfg->parsed);
    *out = m.release();
  });
}

esn_status esn_model_summary(const esn_model* model, esn_summary* out) {
  if (!model || !out) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  const RunReport& r = model->run.report;
  esn_summary s{};
  s.stage1_initial_loss = r.stage1.initial_loss;
  s.stage1_final_loss = r.residuals1.loss_total;
  s.stage2_initial_loss = r.stage2.initial_loss;
  s.stage2_final_loss = r.residuals2.loss_total;
  s.stage1_iterations = static_cast<int>(r.stage1.history.size());
  s.stage2_iterations = static_cast<int>(r.stage2.history.size());
  s.stage1_converged = r.stage1.converged;
  s.stage2_converged = r.stage2.converged;
  s.dim = model->run.model.y_final.dim();
  s.n_points = model->run.model.y_final.size();
  s.max_abs = r.metrics.max_abs_all;
  s.rmse = r.metrics.rmse_all;
  s.trial_max_abs = r.trial_metrics.max_abs_all;
  s.trial_rmse = r.trial_metrics.rmse_all;
  *out = s;
  return ESN_OK;
}

esn_status esn_model_write_artifacts(const esn_model* model, const char* dir) {
  if (!model || !dir) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { write_artifacts(dir, model->run); });
}

esn_status esn_model_generate(const esn_model* model, int n_steps, double* out, size_t out_len) {
  if (!model || !out || n_steps < 0) return fail(ESN_ERR_INVALID_ARGUMENT, "invalid argument");
  const TrainedModel& m = model->run.model;
  const size_t need = static_cast<size_t>(n_steps + 1) * static_cast<size_t>(m.kept.dim());
  if (out_len < need) return fail(ESN_ERR_INVALID_ARGUMENT, "output buffer too small");
  return guarded([&] {
    const Trajectory t = generate(m, m.kept.state(0), n_steps, m.kept.t0);
    std::memcpy(out, t.states.data(), need * sizeof(double));
  });
}

void esn_model_free(esn_model* model) { delete model; }

esn_status esn_write_trial(const esn_config* cfg, const char* dir) {
  if (!cfg || !dir) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const RunConfig& c = cfg->parsed;
    const OdeSystem sys = system_by_name(c.problem);
    Trajectory t;
    try {
      t = refine_downsample(sys, c.initial_state(), c.tau, c.n_washout + c.n_points, c.refine_factor);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw Error(ErrorCode::TrialDiverged, std::string("[trial] ") + e.what());
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, std::string("cannot create output directory '") + dir + "'");
    std::ostringstream ss;
    write_csv(ss, t);
    write_file_atomic((std::filesystem::path(dir) / "trial.csv").string(), ss.str());
  });
}

esn_status esn_gradcheck(const esn_config* cfg, double* stage1_rel_error, double* stage2_rel_error) {
  if (!cfg || !stage1_rel_error || !stage2_rel_error) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const GradcheckResult r = gradcheck(cfg->parsed);
    *stage1_rel_error = r.stage1_rel_error;
    *stage2_rel_error = r.stage2_rel_error;
  });
}

esn_status esn_report_format(const char* dir, char* buf, size_t size, size_t* needed) {
  if (!dir) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  std::string text;
  const esn_status g = guarded([&] { text = format_report(dir); });
  return g != ESN_OK ? g : copy_out(text, buf, size, needed);
}

esn_status esn_dump_reservoir(const esn_config* cfg, const char* path) {
  if (!cfg || !path) return fail(ESN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const RunConfig& c = cfg->parsed;
    const Reservoir res = build(c.reservoir, system_by_name(c.problem).dim);
    std::ostringstream ss;
    write_dump(ss, res);
    write_file_atomic(path, ss.str());
  });
}

}  // extern "C"
