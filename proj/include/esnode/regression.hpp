#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "esnode/constraints.hpp"
#include "esnode/reservoir.hpp"
#include "esnode/trial.hpp"
#include "esnode/types.hpp"

namespace esnode {

struct GnConfig {
  double lambda = 1e-7;
  int max_iters = 10;
  double rel_loss_tol = 1e-5;
  bool backtracking = true;
  int backtrack_max_halvings = 20;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double loss = 0.0;       // e^T e at the accepted readout
  double objective = 0.0;  // loss + lambda ||w||^2, the quantity actually minimized
  std::array<double, 3> loss_by_family{};
  double rel_step = 0.0;
  double rel_loss_change = 0.0;
  int halvings = 0;
  /// Backtracking ran out of halvings and the step was rejected.
  bool flagged = false;
};

struct StageResult {
  ReadoutMatrix w;
  std::vector<IterationRecord> history;
  double initial_loss = 0.0;
  double initial_objective = 0.0;
  bool converged = false;
};

/// Ridge fit making y^n + tau wbar sig^n replicate the trial increments:
/// wbar = D^T S (S^T S + lambda I)^{-1} with D = (y^{n+1} - y^n) / tau.
/// trial must have at least hs.steps() + 1 points.
ReadoutMatrix ridge_initial_guess(const HiddenSequence& hs, const Trajectory& trial, double lambda);

/// Solves (J^T J + lambda I) dw = -(J^T e + lambda vec(w)). Without w this is
/// the plain damped step; with w the penalty lambda ||w||^2 is part of the
/// objective. Uses the smaller of the primal and dual normal systems.
ReadoutMatrix gn_step(const Matrix& j, const Vector& e, double lambda, const ReadoutMatrix* w,
                      Eigen::Index rows, Eigen::Index cols);

using StageResidualFn = std::function<StageResiduals(const ReadoutMatrix&)>;
using StageJacobianFn = std::function<Matrix(const ReadoutMatrix&)>;

/// Damped Gauss-Newton on loss(w) + lambda ||w||^2 with step halving.
/// Returns the readout with the lowest objective seen.
StageResult solve_stage(const StageResidualFn& residual, const StageJacobianFn& jacobian, const ReadoutMatrix& w0,
                        const GnConfig& cfg);

/// One line per iteration: iter loss e1 e2 e3 rel_step rel_loss_change halvings.
void write_convergence_log(std::ostream& out, const std::vector<IterationRecord>& history);

}  // namespace esnode
