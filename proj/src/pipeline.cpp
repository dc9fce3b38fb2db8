#include "esnode/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "esnode/error.hpp"
#include "esnode/rng.hpp"

namespace esnode {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

json gn_to_json(const GnConfig& g) {
  return json{{"lambda", g.lambda},
              {"max_iters", g.max_iters},
              {"rel_loss_tol", g.rel_loss_tol},
              {"backtracking", g.backtracking},
              {"backtrack_max_halvings", g.backtrack_max_halvings}};
}

json config_json(const RunConfig& c) {
  const auto& r = c.reservoir;
  return json{{"problem", c.problem},
              {"y0", c.y0},
              {"tau", c.tau},
              {"n_points", c.n_points},
              {"n_washout", c.n_washout},
              {"refine_factor", c.refine_factor},
              {"reservoir",
               {{"n_neurons", r.n_neurons},
                {"connectivity", r.connectivity},
                {"spectral_norm", r.spectral_norm},
                {"input_scale", r.input_scale},
                {"seed", r.seed},
                {"activation", to_string(r.activation)}}},
              {"stage1", gn_to_json(c.stage1)},
              {"stage2", gn_to_json(c.stage2)},
              {"e3_substitution", c.e3_substitution},
              {"family_weights", c.family_weights},
              {"reference_refine", c.reference_refine},
              {"autonomous_steps", c.autonomous_steps}};
}

// Every key of `user` must exist in `schema`; objects are checked recursively.
void check_keys(const json& user, const json& schema, const std::string& prefix) {
  if (!user.is_object()) throw Error(ErrorCode::Config, "config" + (prefix.empty() ? "" : " key '" + prefix + "'") +
                                                             " must be a JSON object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) throw Error(ErrorCode::Config, "unknown config key '" + path + "'");
    if (schema[key].is_object()) check_keys(value, schema[key], path);
  }
}

void apply_override(json& doc, const json& schema, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::Config, "override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  const json* sch = &schema;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!sch->is_object() || !sch->contains(path[i])) {
      throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
    }
    sch = &(*sch)[path[i]];
    if (i + 1 == path.size()) {
      (*node)[path[i]] = value;
    } else {
      node = &(*node)[path[i]];
    }
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Config, std::string("config key '") + key + "' has the wrong type");
  }
}

GnConfig gn_from_json(const json& j) {
  GnConfig g;
  g.lambda = get<double>(j, "lambda");
  g.max_iters = get<int>(j, "max_iters");
  g.rel_loss_tol = get<double>(j, "rel_loss_tol");
  g.backtracking = get<bool>(j, "backtracking");
  g.backtrack_max_halvings = get<int>(j, "backtrack_max_halvings");
  return g;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.problem = get<std::string>(j, "problem");
  c.y0 = get<std::vector<double>>(j, "y0");
  c.tau = get<double>(j, "tau");
  c.n_points = get<int>(j, "n_points");
  c.n_washout = get<int>(j, "n_washout");
  c.refine_factor = get<int>(j, "refine_factor");
  const json& r = j.at("reservoir");
  c.reservoir.n_neurons = get<int>(r, "n_neurons");
  c.reservoir.connectivity = get<double>(r, "connectivity");
  c.reservoir.spectral_norm = get<double>(r, "spectral_norm");
  c.reservoir.input_scale = get<double>(r, "input_scale");
  c.reservoir.seed = get<std::uint64_t>(r, "seed");
  c.reservoir.activation = activation_from_string(get<std::string>(r, "activation"));
  c.stage1 = gn_from_json(j.at("stage1"));
  c.stage2 = gn_from_json(j.at("stage2"));
  c.e3_substitution = get<bool>(j, "e3_substitution");
  c.family_weights = get<std::array<double, 3>>(j, "family_weights");
  c.reference_refine = get<int>(j, "reference_refine");
  c.autonomous_steps = get<int>(j, "autonomous_steps");
  return c;
}

}  // namespace

std::vector<double> default_initial_state(std::string_view problem) {
  if (problem == "harmonic") return {1.0, 0.0};
  if (problem == "vdp") return {2.0, 0.0};
  if (problem == "lorenz") return {1.0, 1.0, 1.0};
  throw Error(ErrorCode::Config, "unknown problem '" + std::string(problem) + "'");
}

void RunConfig::validate() const {
  const OdeSystem sys = system_by_name(problem);
  if (!y0.empty() && static_cast<int>(y0.size()) != sys.dim) {
    throw Error(ErrorCode::Config, "y0 has " + std::to_string(y0.size()) + " entries, problem '" + problem +
                                       "' needs " + std::to_string(sys.dim));
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::Config, "tau must be positive");
  if (n_points < 1) throw Error(ErrorCode::Config, "n_points must be >= 1");
  if (n_washout < 0) throw Error(ErrorCode::Config, "n_washout must be >= 0");
  if (refine_factor < 1) throw Error(ErrorCode::Config, "refine_factor must be >= 1");
  if (reference_refine < 1) throw Error(ErrorCode::Config, "reference_refine must be >= 1");
  if (autonomous_steps < 0) throw Error(ErrorCode::Config, "autonomous_steps must be >= 0");
  for (double w : family_weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::Config, "family_weights must be >= 0");
  }
  reservoir.validate();
  stage1.validate();
  stage2.validate();
}

Vector RunConfig::initial_state() const {
  const std::vector<double> v = y0.empty() ? default_initial_state(problem) : y0;
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ConstraintOptions RunConfig::constraint_options() const {
  ConstraintOptions o;
  o.family_weights = family_weights;
  o.e3_substitution = e3_substitution;
  return o;
}

RunConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides) {
  json user = json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (user.is_discarded()) throw Error(ErrorCode::Config, "config is not valid JSON");
  const json schema = config_json(RunConfig{});
  check_keys(user, schema, "");
  json doc = schema;
  doc.merge_patch(user);
  for (const auto& o : overrides) apply_override(doc, schema, o);
  RunConfig c = from_json(doc);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

// ---------------------------------------------------------------- evaluation

Metrics evaluate(const Trajectory& candidate, const Trajectory& reference) {
  if (candidate.size() != reference.size() || candidate.dim() != reference.dim()) {
    throw Error(ErrorCode::LengthMismatch, "cannot compare a " + std::to_string(candidate.size()) + "x" +
                                               std::to_string(candidate.dim()) + " trajectory with a " +
                                               std::to_string(reference.size()) + "x" +
                                               std::to_string(reference.dim()) + " reference");
  }
  if (std::abs(candidate.tau - reference.tau) > 1e-12 * std::abs(reference.tau)) {
    throw Error(ErrorCode::LengthMismatch, "trajectories use different intervals");
  }
  Metrics m;
  const int d = candidate.dim();
  const int n = candidate.size();
  m.max_abs.assign(d, 0.0);
  m.rmse.assign(d, 0.0);
  if (n == 0) return m;
  const Matrix diff = candidate.states - reference.states;
  for (int i = 0; i < d; ++i) {
    m.max_abs[i] = diff.col(i).cwiseAbs().maxCoeff();
    m.rmse[i] = std::sqrt(diff.col(i).squaredNorm() / n);
  }
  m.max_abs_all = diff.cwiseAbs().maxCoeff();
  m.rmse_all = std::sqrt(diff.squaredNorm() / (double(n) * d));
  return m;
}

Trajectory reference_for(const OdeSystem& system, const Vector& y_init, double t0, double tau, int n_steps,
                         int refine, std::string* kind) {
  Trajectory ref;
  if (system.has_reference()) {
    ref.tau = tau;
    ref.states.resize(n_steps + 1, system.dim);
    for (int k = 0; k <= n_steps; ++k) ref.states.row(k) = system.reference(y_init, k * tau).transpose();
    if (kind) *kind = "analytic";
  } else {
    ref = rk4_refined(system, y_init, tau, n_steps, refine);
    if (kind) *kind = "rk4";
  }
  ref.t0 = t0;
  return ref;
}

// ---------------------------------------------------------------- training

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// First `count` rows of `head` followed by the first `tail_rows` of `tail`.
Trajectory concat(const Trajectory& head, const Trajectory& tail, int tail_rows) {
  Trajectory out;
  out.t0 = head.t0;
  out.tau = head.tau;
  out.states.resize(head.size() + tail_rows, head.dim());
  out.states.topRows(head.size()) = head.states;
  out.states.bottomRows(tail_rows) = tail.states.topRows(tail_rows);
  return out;
}

template <typename F>
auto phase(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_tagged(e, name);
  }
}

}  // namespace

TrainOutput train(const RunConfig& cfg) {
  cfg.validate();
  const OdeSystem sys = system_by_name(cfg.problem);
  const Vector y0 = cfg.initial_state();
  const ConstraintOptions opts = cfg.constraint_options();
  const int nw = cfg.n_washout;
  const int np = cfg.n_points;
  TrainOutput out;
  TrainedModel& m = out.model;
  RunReport& rep = out.report;
  rep.config = cfg;

  auto t = Clock::now();
  m.trial = phase("trial", [&] {
    try {
      return refine_downsample(sys, y0, cfg.tau, nw + np, cfg.refine_factor);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw Error(ErrorCode::TrialDiverged, std::string("trial solution diverged: ") + e.what());
    }
  });
  {
    CropResult crop = washout_crop(m.trial, nw, np + 1);
    m.washout_inputs = std::move(crop.washout);
    m.kept = std::move(crop.kept);
  }
  rep.timing.emplace_back("trial", seconds_since(t));

  t = Clock::now();
  m.reservoir = phase("reservoir", [&] { return build(cfg.reservoir, sys.dim); });
  rep.timing.emplace_back("reservoir", seconds_since(t));

  const Vector h0 = Vector::Zero(cfg.reservoir.n_neurons);
  const Vector y_start = m.kept.state(0);

  t = Clock::now();
  phase("stage1", [&] {
    const Trajectory inputs = concat(m.washout_inputs, m.kept, np);
    const HiddenSequence hs = drive(m.reservoir, inputs, h0).drop_front(nw);
    const ReadoutMatrix w0 = ridge_initial_guess(hs, m.kept, cfg.stage1.lambda);
    rep.stage1 = solve_stage(
        [&](const ReadoutMatrix& w) { return stage1_residuals(sys, m.reservoir, w, hs, y_start, opts); },
        [&](const ReadoutMatrix& w) { return stage1_jacobian(sys, m.reservoir, w, hs, y_start, opts); }, w0,
        cfg.stage1);
    m.w_stage1 = rep.stage1.w;
    m.ybar = stage1_readout(m.w_stage1, hs, y_start, m.kept.t0);
    rep.residuals1 = stage1_residuals(sys, m.reservoir, m.w_stage1, hs, y_start, opts);
    return 0;
  });
  rep.timing.emplace_back("stage1", seconds_since(t));

  t = Clock::now();
  phase("stage2", [&] {
    const Trajectory inputs = concat(m.washout_inputs, m.ybar, np);
    const HiddenSequence hs = drive(m.reservoir, inputs, h0).drop_front(nw);
    rep.stage2 = solve_stage(
        [&](const ReadoutMatrix& w) { return stage2_residuals(sys, m.reservoir, w, hs, m.ybar, opts); },
        [&](const ReadoutMatrix& w) { return stage2_jacobian(sys, m.reservoir, w, hs, m.ybar, opts); },
        m.w_stage1, cfg.stage2);
    m.w_stage2 = rep.stage2.w;
    m.y_final = stage2_readout(m.w_stage2, hs, m.ybar);
    rep.residuals2 = stage2_residuals(sys, m.reservoir, m.w_stage2, hs, m.ybar, opts);
    return 0;
  });
  rep.timing.emplace_back("stage2", seconds_since(t));

  t = Clock::now();
  phase("evaluate", [&] {
    rep.reference = reference_for(sys, y_start, m.kept.t0, cfg.tau, np, cfg.reference_refine, &rep.reference_kind);
    rep.metrics = evaluate(m.y_final, rep.reference);
    rep.stage1_metrics = evaluate(m.ybar, rep.reference);
    rep.trial_metrics = evaluate(m.kept, rep.reference);
    return 0;
  });
  rep.timing.emplace_back("evaluate", seconds_since(t));

  if (cfg.autonomous_steps > 0) {
    t = Clock::now();
    try {
      rep.autonomous = generate(m, y_start, cfg.autonomous_steps, m.kept.t0);
      const Trajectory ref = reference_for(sys, y_start, m.kept.t0, cfg.tau, cfg.autonomous_steps,
                                           cfg.reference_refine);
      rep.autonomous_metrics = evaluate(*rep.autonomous, ref);
    } catch (const Error& e) {
      // A closed loop leaving the attractor is a result, not a failed run.
      if (!e.numerical()) throw;
      rep.autonomous.reset();
      rep.autonomous_failure = e.what();
    }
    rep.timing.emplace_back("autonomous", seconds_since(t));
  }
  return out;
}

Trajectory generate(const TrainedModel& model, const Vector& y_start, int n_steps, double t0) {
  const Reservoir& res = model.reservoir;
  if (y_start.size() != res.input_dim()) throw Error(ErrorCode::DimensionMismatch, "start state has wrong size");
  if (n_steps < 0) throw Error(ErrorCode::Config, "n_steps must be >= 0");
  const double tau = model.kept.tau;
  Vector h = Vector::Zero(res.size());
  if (model.washout_inputs.size() > 0) {
    Trajectory washout = model.washout_inputs;
    washout.tau = tau;
    h = drive(res, washout, h).h.bottomRows(1).transpose();
  }
  Trajectory out;
  out.t0 = t0;
  out.tau = tau;
  out.states.resize(n_steps + 1, y_start.size());
  out.states.row(0) = y_start.transpose();
  Vector y = y_start;
  for (int k = 0; k < n_steps; ++k) {
    h = step(res, h, y, tau);
    y = y + tau * (model.w_stage2 * h);
    if (!y.allFinite()) {
      throw Error(ErrorCode::NonFinite, "autonomous generation diverged at step " + std::to_string(k + 1));
    }
    out.states.row(k + 1) = y.transpose();
  }
  return out;
}

// ---------------------------------------------------------------- gradcheck

namespace {

double rel_error(const Matrix& analytic, const Matrix& fd) {
  const double scale = fd.cwiseAbs().maxCoeff();
  const double err = (analytic - fd).cwiseAbs().maxCoeff();
  return scale > 0.0 ? err / scale : err;
}

}  // namespace

GradcheckResult gradcheck(const RunConfig& cfg_in, double fd_step) {
  RunConfig cfg = cfg_in;
  cfg.reservoir.n_neurons = std::min(cfg.reservoir.n_neurons, 20);
  cfg.n_points = std::min(cfg.n_points, 10);
  cfg.validate();
  const OdeSystem sys = system_by_name(cfg.problem);
  const ConstraintOptions opts = cfg.constraint_options();
  const int nw = cfg.n_washout;
  const int np = cfg.n_points;

  const Trajectory trial = refine_downsample(sys, cfg.initial_state(), cfg.tau, nw + np, cfg.refine_factor);
  const CropResult crop = washout_crop(trial, nw, np + 1);
  const Reservoir res = build(cfg.reservoir, sys.dim);
  const Vector h0 = Vector::Zero(res.size());
  const Vector y_start = crop.kept.state(0);

  const HiddenSequence hs1 = drive(res, concat(crop.washout, crop.kept, np), h0).drop_front(nw);
  const ReadoutMatrix wbar = ridge_initial_guess(hs1, crop.kept, cfg.stage1.lambda);
  const Matrix j1 = stage1_jacobian(sys, res, wbar, hs1, y_start, opts);
  const Matrix f1 = fd_jacobian(
      [&](const ReadoutMatrix& w) { return stage1_residuals(sys, res, w, hs1, y_start, opts).stacked(); }, wbar,
      fd_step);

  const Trajectory ybar = stage1_readout(wbar, hs1, y_start, crop.kept.t0);
  const HiddenSequence hs2 = drive(res, concat(crop.washout, ybar, np), h0).drop_front(nw);
  const Matrix j2 = stage2_jacobian(sys, res, wbar, hs2, ybar, opts);
  const Matrix f2 = fd_jacobian(
      [&](const ReadoutMatrix& w) { return stage2_residuals(sys, res, w, hs2, ybar, opts).stacked(); }, wbar,
      fd_step);

  GradcheckResult r;
  r.stage1_rel_error = rel_error(j1, f1);
  r.stage2_rel_error = rel_error(j2, f2);
  r.neurons = res.size();
  r.steps = np;
  return r;
}

// ---------------------------------------------------------------- artifacts

namespace {

json metrics_json(const Metrics& m) {
  return json{{"max_abs", m.max_abs}, {"rmse", m.rmse}, {"max_abs_all", m.max_abs_all}, {"rmse_all", m.rmse_all}};
}

void flatten(const json& j, const std::string& prefix, json& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out[prefix] = j;
  }
}

void stage_json(json& out, const char* name, const StageResult& s, const StageResiduals& r) {
  const std::string p = name;
  out[p + ".initial_loss"] = s.initial_loss;
  out[p + ".final_loss"] = r.loss_total;
  out[p + ".loss_by_family"] = r.loss_by_family;
  out[p + ".iterations"] = s.history.size();
  out[p + ".converged"] = s.converged;
  out[p + ".final_rel_loss_change"] = s.history.empty() ? 0.0 : s.history.back().rel_loss_change;
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream ss;
  write_csv(ss, t);
  return ss.str();
}

}  // namespace

std::string report_json(const RunReport& rep) {
  json out;
  flatten(json{{"config", config_json(rep.config)}}, "", out);
  out["config.y0"] = [&] {
    const Vector y = rep.config.initial_state();
    return std::vector<double>(y.data(), y.data() + y.size());
  }();
  out["prng.name"] = Rng::kName;
  out["seed"] = rep.config.reservoir.seed;
  stage_json(out, "stage1", rep.stage1, rep.residuals1);
  stage_json(out, "stage2", rep.stage2, rep.residuals2);
  out["reference.kind"] = rep.reference_kind;
  flatten(json{{"metrics", metrics_json(rep.metrics)}}, "", out);
  flatten(json{{"metrics.stage1", metrics_json(rep.stage1_metrics)}}, "", out);
  flatten(json{{"metrics.trial", metrics_json(rep.trial_metrics)}}, "", out);
  if (rep.autonomous_metrics) flatten(json{{"metrics.autonomous", metrics_json(*rep.autonomous_metrics)}}, "", out);
  if (!rep.autonomous_failure.empty()) out["autonomous.failure"] = rep.autonomous_failure;
  return out.dump(2) + "\n";
}

std::string timing_json(const RunReport& rep) {
  json out;
  double total = 0.0;
  for (const auto& [name, sec] : rep.timing) {
    out["timing." + name] = sec;
    total += sec;
  }
  out["timing.total"] = total;
  return out.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
    f << contents;
    f.flush();
    if (!f) throw Error(ErrorCode::Io, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move '" + tmp.string() + "' into place");
  }
}

void write_artifacts(const std::string& dir, const TrainOutput& run) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
  const fs::path d(dir);
  const RunReport& rep = run.report;

  // Render everything first so a formatting failure leaves no partial set.
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("trial.csv", trajectory_csv(run.model.trial));
  files.emplace_back("ybar_stage1.csv", trajectory_csv(run.model.ybar));
  files.emplace_back("y_stage2.csv", trajectory_csv(run.model.y_final));
  files.emplace_back("reference.csv", trajectory_csv(rep.reference));
  for (int s = 1; s <= 2; ++s) {
    std::ostringstream res, log;
    write_residuals_csv(res, s == 1 ? rep.residuals1 : rep.residuals2);
    write_convergence_log(log, s == 1 ? rep.stage1.history : rep.stage2.history);
    files.emplace_back("residuals_stage" + std::to_string(s) + ".csv", res.str());
    files.emplace_back("convergence_stage" + std::to_string(s) + ".log", log.str());
  }
  if (rep.autonomous) files.emplace_back("y_autonomous.csv", trajectory_csv(*rep.autonomous));
  files.emplace_back("report.json", report_json(rep));
  files.emplace_back("timing.json", timing_json(rep));
  for (const auto& [name, body] : files) write_file_atomic((d / name).string(), body);
}

// ---------------------------------------------------------------- report table

namespace {

std::optional<json> read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

std::string cell(const std::optional<json>& j, const std::string& key) {
  if (!j || !j->contains(key)) return "missing";
  const json& v = (*j)[key];
  std::ostringstream ss;
  ss << std::setprecision(6);
  if (v.is_array()) {
    ss << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) ss << ", ";
      if (v[i].is_number()) ss << v[i].get<double>(); else ss << v[i].dump();
    }
    ss << ']';
  } else if (v.is_number_float()) {
    ss << v.get<double>();
  } else if (v.is_string()) {
    ss << v.get<std::string>();
  } else {
    ss << v.dump();
  }
  return ss.str();
}

}  // namespace

std::string format_report(const std::string& dir) {
  const fs::path d(dir);
  static const char* kArtifacts[] = {"report.json",          "timing.json",           "trial.csv",
                                     "ybar_stage1.csv",      "y_stage2.csv",          "reference.csv",
                                     "residuals_stage1.csv", "residuals_stage2.csv",  "convergence_stage1.log",
                                     "convergence_stage2.log"};
  bool any = false;
  for (const char* a : kArtifacts) any = any || fs::exists(d / a);
  if (!fs::is_directory(d) || !any) throw Error(ErrorCode::Io, "no run artifacts found in '" + dir + "'");

  const auto report = read_json(d / "report.json");
  const auto timing = read_json(d / "timing.json");
  std::ostringstream out;
  auto row = [&](const std::string& label, const std::string& value) {
    out << std::left << std::setw(28) << label << value << '\n';
  };
  row("problem", cell(report, "config.problem"));
  row("seed", cell(report, "seed"));
  row("prng", cell(report, "prng.name"));
  row("reference", cell(report, "reference.kind"));
  for (const char* s : {"stage1", "stage2"}) {
    const std::string p = s;
    row(p + " initial loss", cell(report, p + ".initial_loss"));
    row(p + " final loss", cell(report, p + ".final_loss"));
    row(p + " iterations", cell(report, p + ".iterations"));
    row(p + " converged", cell(report, p + ".converged"));
    const fs::path log = d / ("convergence_" + p + ".log");
    row(p + " log lines", fs::exists(log) ? std::to_string(count_lines(log)) : "missing");
  }
  row("stage2 max_abs", cell(report, "metrics.max_abs"));
  row("stage2 rmse", cell(report, "metrics.rmse"));
  row("stage1 max_abs", cell(report, "metrics.stage1.max_abs"));
  row("trial max_abs", cell(report, "metrics.trial.max_abs"));
  row("trial rmse", cell(report, "metrics.trial.rmse"));
  if (report && report->contains("metrics.autonomous.max_abs")) {
    row("autonomous max_abs", cell(report, "metrics.autonomous.max_abs"));
  }
  if (timing) {
    for (const auto& [k, v] : timing->items()) row(k, cell(timing, k) + " s");
  } else {
    row("timing", "missing");
  }
  for (const char* a : kArtifacts) {
    if (!fs::exists(d / a)) row(a, "missing");
  }
  return out.str();
}

}  // namespace esnode
