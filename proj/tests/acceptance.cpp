// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "esnode/error.hpp"
#include "esnode/pipeline.hpp"

using namespace esnode;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = ESNODE_CONFIG_DIR;

int failures = 0;

void report(int id, bool ok, const std::string& details) {
  std::printf("criterion %d: %s (%s)\n", id, ok ? "PASS" : "FAIL", details.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig config(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_config(kConfigs + "/" + name, overrides);
}

bool stage_converged(const StageResult& s, int max_iters) {
  for (const auto& rec : s.history) {
    if (rec.iter <= max_iters && rec.rel_loss_change < 1e-5) return true;
  }
  return false;
}

double max_dev(const Trajectory& a, const Trajectory& b, int rows) {
  return (a.states.topRows(rows) - b.states.topRows(rows)).cwiseAbs().maxCoeff();
}

Trajectory traj(const Matrix& states, double tau) {
  Trajectory t;
  t.tau = tau;
  t.states = states;
  return t;
}

// Seeded instance with N neurons and `steps` readout steps for both stages.
struct Instance {
  OdeSystem sys;
  Reservoir res;
  HiddenSequence hs1, hs2;
  Vector y_start;
  Trajectory ybar;
  ReadoutMatrix w;
};

Instance make_instance(const RunConfig& cfg, int n, int steps) {
  Instance in;
  in.sys = system_by_name(cfg.problem);
  const int d = in.sys.dim;
  ReservoirParams p = cfg.reservoir;
  p.n_neurons = n;
  p.connectivity = 0.2;
  in.res = build(p, d);
  const int washout = 5;
  const Trajectory trial = refine_downsample(in.sys, cfg.initial_state(), cfg.tau, washout + steps, cfg.refine_factor);
  const CropResult crop = washout_crop(trial, washout, steps + 1);
  in.hs1 = drive(in.res, traj(trial.states.topRows(washout + steps), cfg.tau), Vector::Zero(n)).drop_front(washout);
  in.y_start = crop.kept.state(0);
  in.w = ridge_initial_guess(in.hs1, crop.kept, 1e-6);
  in.ybar = stage1_readout(in.w, in.hs1, in.y_start);
  Matrix in2(washout + steps, d);
  in2 << crop.washout.states, in.ybar.states.topRows(steps);
  in.hs2 = drive(in.res, traj(in2, cfg.tau), Vector::Zero(n)).drop_front(washout);
  return in;
}

Vector activate_all(Activation act, Vector z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activate(act, z(i));
  return z;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs kept from criteria 1, 3 and 4; criterion 8 reruns them and compares bytes.
std::vector<std::pair<std::string, TrainOutput>> first_runs;

void criteria_1_2() {
  std::vector<double> errors;
  int converged = 0;
  double slowest = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig cfg = config("harmonic.json");
    cfg.reservoir.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    TrainOutput out = train(cfg);
    slowest = std::max(slowest, seconds_since(t0));
    errors.push_back(out.report.metrics.max_abs_all);
    if (stage_converged(out.report.stage1, 10) && stage_converged(out.report.stage2, 10)) ++converged;
    if (seed == 1) first_runs.emplace_back("harmonic.json", std::move(out));
  }
  const int within = static_cast<int>(std::count_if(errors.begin(), errors.end(), [](double e) { return e <= 2e-2; }));
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[4] + sorted[5]);
  std::string list;
  for (double e : errors) list += (list.empty() ? "" : " ") + fmt("%.2e", e);
  report(1, within >= 8 && median <= 1e-2 && slowest <= 60.0,
         std::to_string(within) + "/10 seeds <= 2e-2, median " + fmt("%.3e", median) + ", slowest run " +
             fmt("%.1f s", slowest) + "; max errors " + list);
  report(2, converged >= 8, std::to_string(converged) + "/10 seeds with both stages at |dL/L| < 1e-5 within 10 iterations");
}

void criterion_3() {
  const RunConfig cfg = config("vdp.json");
  TrainOutput out = train(cfg);
  const RunReport& r = out.report;
  const double final_loss = r.stage1.history.empty() ? r.stage1.initial_loss : r.stage1.history.back().loss;
  double best = r.stage1.initial_loss;
  for (const auto& rec : r.stage1.history) best = std::min(best, rec.loss);
  const double drop = r.stage1.initial_loss / best;
  const double y1 = std::max(out.model.y_final.states.col(0).cwiseAbs().maxCoeff(),
                             out.model.ybar.states.col(0).cwiseAbs().maxCoeff());
  const bool ok = drop >= 1e2 && r.metrics.rmse_all < r.trial_metrics.rmse_all && y1 <= 3.0 &&
                  r.reference_kind == "rk4" && cfg.reference_refine == 100;
  report(3, ok,
         "stage-1 loss " + fmt("%.3e", r.stage1.initial_loss) + " -> " + fmt("%.3e", final_loss) + " (ratio " +
             fmt("%.2e", drop) + "), stage-2 RMSE " + fmt("%.6f", r.metrics.rmse_all) + " vs trial RMSE " +
             fmt("%.6f", r.trial_metrics.rmse_all) + ", max |y1| " + fmt("%.3f", y1));
  first_runs.emplace_back("vdp.json", std::move(out));
}

bool in_box(const Matrix& s) {
  return s.col(0).cwiseAbs().maxCoeff() <= 25.0 && s.col(1).cwiseAbs().maxCoeff() <= 30.0 &&
         s.col(2).minCoeff() >= -1.0 && s.col(2).maxCoeff() <= 55.0;
}

void criterion_4() {
  const RunConfig cfg = config("lorenz.json");
  TrainOutput out;
  std::string failure;
  try {
    out = train(cfg);
  } catch (const Error& e) {
    failure = e.what();
  }
  if (!failure.empty()) {
    report(4, false, "training failed: " + failure);
    return;
  }
  const RunReport& r = out.report;
  // Box sanity on the fine oracle over a long horizon before trusting it on the model.
  const Trajectory oracle_long = rk4_refined(system_by_name("lorenz"), cfg.initial_state(), cfg.tau, 5000, 100);
  const bool box_oracle = in_box(oracle_long.states);
  const int rows = 31;
  const double dev_model = max_dev(out.model.y_final, r.reference, rows);
  const double dev_trial = max_dev(out.model.kept, r.reference, rows);
  const double ratio = dev_model / dev_trial;
  const bool finite = out.model.y_final.states.allFinite() && out.model.ybar.states.allFinite();
  const bool box = in_box(out.model.y_final.states);
  const Matrix& s = out.model.y_final.states;
  report(4, finite && box_oracle && box && ratio <= 5.0,
         "30-step deviation " + fmt("%.3e", dev_model) + " vs trial " + fmt("%.3e", dev_trial) + " (ratio " +
             fmt("%.3f", ratio) + "), max|y1| " + fmt("%.2f", s.col(0).cwiseAbs().maxCoeff()) + ", max|y2| " +
             fmt("%.2f", s.col(1).cwiseAbs().maxCoeff()) + ", y3 in [" + fmt("%.2f", s.col(2).minCoeff()) + ", " +
             fmt("%.2f", s.col(2).maxCoeff()) + "], oracle box " + (box_oracle ? "ok" : "violated"));
  first_runs.emplace_back("lorenz.json", std::move(out));
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string details;
  for (const char* name : {"harmonic.json", "vdp.json", "lorenz.json"}) {
    const GradcheckResult g = gradcheck(config(name));
    worst = std::max({worst, g.stage1_rel_error, g.stage2_rel_error});
    details += std::string(details.empty() ? "" : ", ") + name + " " + fmt("%.1e", g.stage1_rel_error) + "/" +
               fmt("%.1e", g.stage2_rel_error) + " (N=" + std::to_string(g.neurons) + ", " + std::to_string(g.steps) +
               " steps)";
  }
  const double elapsed = seconds_since(t0);
  report(5, worst < 1e-5 && elapsed < 5.0, "max rel error " + fmt("%.2e", worst) + " in " + fmt("%.2f s", elapsed) + "; " + details);
}

// Central difference with one Richardson step, so the eps^2 term cancels.
// The step is set by the displacement length rather than eps itself: the
// stage-2 direction w*sig0 reaches a few hundred on Lorenz while the stage-1
// direction sig0 is O(1), and the readout there is large enough (1e4) that a
// fixed eps is either truncation- or round-off-bound for one of them.
template <typename F>
Vector directional(F&& g, const Vector& x, const Vector& dir, double displacement) {
  const double eps = displacement / dir.norm();
  auto central = [&](double e) { return Vector((g(x + e * dir) - g(x - e * dir)) / (2 * e)); };
  return (4.0 * central(0.5 * eps) - central(eps)) / 3.0;
}

void criterion_6() {
  const double eps = 4e-3;
  double worst1 = 0.0, worst2 = 0.0, w_max = 0.0;
  for (const char* name : {"harmonic.json", "vdp.json", "lorenz.json"}) {
    const RunConfig cfg = config(name);
    const Instance in = make_instance(cfg, 20, 10);
    const Activation act = in.res.params.activation;
    w_max = std::max(w_max, in.w.cwiseAbs().maxCoeff());

    // Stage 2: perturb the anchor ybar^n along the readout's estimate of f there.
    const StageResiduals r2 = stage2_residuals(in.sys, in.res, in.w, in.hs2, in.ybar);
    const double tau = in.hs2.tau;
    for (int q = 0; q < in.hs2.steps(); ++q) {
      const Vector h = in.hs2.h.row(q).transpose();
      auto next = [&](const Vector& x) {
        return Vector(x + tau * in.w * activate_all(act, in.res.b * tau + in.res.omega * h + in.res.v * x + in.res.c));
      };
      const Vector x = in.ybar.state(q);
      const Vector dir = in.w * in.hs2.sig0.row(q).transpose();
      const Vector sig = in.hs2.sig.row(q).transpose();
      const Vector a = sig + tau * in.hs2.sig_dot.row(q).transpose().cwiseProduct(in.res.b);
      const Vector oracle = directional(next, x, dir, eps) - in.w * a;
      worst2 = std::max(worst2, (oracle - r2.e3.row(q).transpose()).cwiseAbs().maxCoeff());
    }

    // Stage 1: the input is the fixed trial, so the shift acts on the hidden state along sig0.
    const StageResiduals r1 = stage1_residuals(in.sys, in.res, in.w, in.hs1, in.y_start);
    for (int q = 0; q < in.hs1.steps(); ++q) {
      const Vector h = in.hs1.h.row(q).transpose();
      const Vector rest = in.hs1.z.row(q).transpose() - in.res.omega * h;
      auto readout = [&](const Vector& hh) { return Vector(in.w * activate_all(act, rest + in.res.omega * hh)); };
      const Vector dir = in.hs1.sig0.row(q).transpose();
      const Vector sig = in.hs1.sig.row(q).transpose();
      const Vector a = sig + tau * in.hs1.sig_dot.row(q).transpose().cwiseProduct(in.res.b);
      const Vector push = directional(readout, h, dir, eps);
      const Vector oracle = push - in.w * (a - dir);
      worst1 = std::max(worst1, (oracle - r1.e3.row(q).transpose()).cwiseAbs().maxCoeff());
    }
  }
  report(6, worst1 < 1e-6 && worst2 < 1e-6,
         "max |e3 - oracle| stage 1 " + fmt("%.2e", worst1) + ", stage 2 " + fmt("%.2e", worst2) + " (N=20, 10 steps, all systems, max |w| " + fmt("%.1e", w_max) + ")");
}

void criterion_7() {
  // The harmonic field is linear and stage 1 keeps the reservoir input fixed,
  // so every stage-1 residual family is affine in the readout.
  RunConfig cfg = config("harmonic.json");
  const Instance in = make_instance(cfg, 12, 20);
  const ConstraintOptions opts = cfg.constraint_options();
  GnConfig gn;
  gn.lambda = 1e-4;
  gn.max_iters = 5;
  const StageResult r = solve_stage(
      [&](const ReadoutMatrix& w) { return stage1_residuals(in.sys, in.res, w, in.hs1, in.y_start, opts); },
      [&](const ReadoutMatrix& w) { return stage1_jacobian(in.sys, in.res, w, in.hs1, in.y_start, opts); },
      Matrix::Zero(2, 12), gn);
  const bool one_step = !r.history.empty() && r.history[0].halvings == 0 && !r.history[0].flagged;
  const double step2 = r.history.size() >= 2 ? r.history[1].rel_step : 1.0;
  report(7, one_step && r.history.size() == 2 && step2 < 1e-8 && r.converged,
         "harmonic stage 1 (N=12, 20 steps, lambda 1e-4): " + std::to_string(r.history.size()) +
             " iterations, first step halvings " + std::to_string(r.history.empty() ? -1 : r.history[0].halvings) +
             ", iteration-2 rel_step " + fmt("%.2e", step2));
}

void criterion_8() {
  const fs::path root = fs::temp_directory_path() / "esnode_acceptance";
  fs::remove_all(root);
  bool ok = true;
  std::string details;
  for (const auto& [name, first] : first_runs) {
    const fs::path a = root / (name + ".a"), b = root / (name + ".b");
    write_artifacts(a.string(), first);
    write_artifacts(b.string(), train(config(name)));
    int compared = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const std::string file = entry.path().filename().string();
      if (file == "timing.json") continue;
      ++compared;
      if (slurp(entry.path()) != slurp(b / file)) {
        ++differing;
        details += " " + name + "/" + file + " differs;";
      }
    }
    ok = ok && differing == 0 && compared > 0;
    details += " " + name + ": " + std::to_string(compared) + " files identical;";
  }
  ok = ok && first_runs.size() == 3;
  fs::remove_all(root);
  report(8, ok, "second run per shipped config," + details.substr(0, details.size() - 1));
}

template <typename F>
void guarded(int id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  try {
    criteria_1_2();
  } catch (const std::exception& e) {
    report(1, false, std::string("exception: ") + e.what());
    report(2, false, "not evaluated");
  }
  guarded(3, criterion_3);
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  guarded(6, criterion_6);
  guarded(7, criterion_7);
  guarded(8, criterion_8);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures == 0 ? 0 : 1;
}
