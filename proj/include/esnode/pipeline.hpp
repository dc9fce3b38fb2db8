#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esnode/constraints.hpp"
#include "esnode/problems.hpp"
#include "esnode/regression.hpp"
#include "esnode/reservoir.hpp"
#include "esnode/trial.hpp"

namespace esnode {

struct RunConfig {
  std::string problem = "harmonic";
  /// Empty means the problem's default initial state.
  std::vector<double> y0;
  double tau = 0.05;
  int n_points = 500;
  int n_washout = 150;
  int refine_factor = 1;
  ReservoirParams reservoir;
  GnConfig stage1;
  GnConfig stage2;
  bool e3_substitution = true;
  std::array<double, 3> family_weights{1.0, 1.0, 1.0};
  /// Refinement of the RK4 oracle used when no analytic solution exists.
  int reference_refine = 100;
  /// Closed-loop steps generated after training; 0 disables.
  int autonomous_steps = 0;

  void validate() const;
  Vector initial_state() const;
  ConstraintOptions constraint_options() const;
};

/// Default initial states: harmonic (1,0), vdp (2,0), lorenz (1,1,1).
std::vector<double> default_initial_state(std::string_view problem);

/// Parses a JSON run config; each override is `dotted.key=value` where value
/// is read as JSON when possible and as a bare string otherwise. Unknown keys
/// are rejected.
RunConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
std::string config_to_json(const RunConfig& cfg);

struct Metrics {
  std::vector<double> max_abs;
  std::vector<double> rmse;
  double max_abs_all = 0.0;
  double rmse_all = 0.0;
};

/// Per-component and overall errors; requires equal length, dimension and tau.
Metrics evaluate(const Trajectory& candidate, const Trajectory& reference);

struct TrainedModel {
  Reservoir reservoir;
  ReadoutMatrix w_stage1;
  ReadoutMatrix w_stage2;
  Trajectory trial;           // full Euler trial, washout included
  Trajectory washout_inputs;  // first n_washout trial points
  Trajectory kept;            // trial points the readout is trained on
  Trajectory ybar;            // stage-1 output
  Trajectory y_final;         // stage-2 output
};

struct RunReport {
  RunConfig config;
  StageResult stage1;
  StageResult stage2;
  StageResiduals residuals1;
  StageResiduals residuals2;
  Trajectory reference;
  std::string reference_kind;  // "analytic" or "rk4"
  Metrics metrics;             // stage-2 output vs reference
  Metrics stage1_metrics;
  Metrics trial_metrics;
  std::optional<Trajectory> autonomous;
  std::optional<Metrics> autonomous_metrics;
  std::string autonomous_failure;
  std::vector<std::pair<std::string, double>> timing;  // seconds per phase
};

struct TrainOutput {
  TrainedModel model;
  RunReport report;
};

TrainOutput train(const RunConfig& cfg);

/// Closed loop with the stage-2 readout. The hidden state is conditioned by
/// re-driving the stored washout inputs from zero.
Trajectory generate(const TrainedModel& model, const Vector& y_start, int n_steps, double t0 = 0.0);

/// Reference through y_init at time t0 on a grid of n_steps + 1 points: the
/// analytic solution when the system has one, otherwise RK4 at tau / refine.
Trajectory reference_for(const OdeSystem& system, const Vector& y_init, double t0, double tau, int n_steps,
                         int refine, std::string* kind = nullptr);

struct GradcheckResult {
  double stage1_rel_error = 0.0;
  double stage2_rel_error = 0.0;
  int neurons = 0;
  int steps = 0;
  bool passed(double tol = 1e-5) const { return stage1_rel_error < tol && stage2_rel_error < tol; }
};

/// Analytic vs central-difference Jacobians on a shrunken copy of cfg
/// (N <= 20, steps <= 10). Error metric: max|Ja - Jfd| / max|Jfd|.
GradcheckResult gradcheck(const RunConfig& cfg, double fd_step = 1e-6);

/// Writes every artifact into dir (created if needed); each file goes to a
/// temporary name first and is renamed into place.
void write_artifacts(const std::string& dir, const TrainOutput& run);

/// report.json contents (deterministic; no timings).
std::string report_json(const RunReport& report);
/// timing.json contents.
std::string timing_json(const RunReport& report);

/// Human-readable table built from the artifacts in dir. Throws Io when the
/// directory holds none of them.
std::string format_report(const std::string& dir);

/// Atomic file write via rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace esnode
