#pragma once

#include <array>
#include <functional>
#include <iosfwd>

#include "esnode/problems.hpp"
#include "esnode/reservoir.hpp"
#include "esnode/trial.hpp"
#include "esnode/types.hpp"

namespace esnode {

/// d x N readout; row i maps the hidden state onto output component i.
using ReadoutMatrix = Matrix;

struct ConstraintOptions {
  /// Multipliers of the three residual families inside the loss.
  std::array<double, 3> family_weights{1.0, 1.0, 1.0};
  /// When true, f inside e3 is replaced by the readout expressions that the
  /// e1/e2 constraints equate it with, which makes e3 polynomial in w.
  bool e3_substitution = true;
  /// Ratio of consecutive intervals in the stage-1 e3; 1 for uniform grids.
  double tau_ratio = 1.0;
};

struct StageResiduals {
  Matrix e1, e2, e3;  // steps x d
  std::array<double, 3> loss_by_family{};
  std::array<double, 3> weights{1.0, 1.0, 1.0};
  double loss_total = 0.0;  // sum of weighted family losses

  int steps() const { return static_cast<int>(e1.rows()); }
  /// [e1; e2; e3] flattened row-major, each family scaled by sqrt(weight),
  /// so that stacked().squaredNorm() == loss_total.
  Vector stacked() const;
};

/// Readout of the first pass: ybar^0 = y_start, ybar^{n+1} = ybar^n + tau wbar sig^n.
Trajectory stage1_readout(const ReadoutMatrix& wbar, const HiddenSequence& hs, const Vector& y_start,
                          double t0 = 0.0);

/// Readout of the second pass: y^{n+1} = ybar^n + tau w sig^n. Row 0 of the
/// result repeats ybar^0 so both passes share the same grid.
Trajectory stage2_readout(const ReadoutMatrix& w, const HiddenSequence& hs, const Trajectory& ybar);

StageResiduals stage1_residuals(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& wbar,
                                const HiddenSequence& hs, const Vector& y_start,
                                const ConstraintOptions& opts = {});

StageResiduals stage2_residuals(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& w,
                                const HiddenSequence& hs, const Trajectory& ybar,
                                const ConstraintOptions& opts = {});

/// d(stacked residual)/d vec(w); columns ordered (component, neuron) row-major.
Matrix stage1_jacobian(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& wbar,
                       const HiddenSequence& hs, const Vector& y_start, const ConstraintOptions& opts = {});

Matrix stage2_jacobian(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& w,
                       const HiddenSequence& hs, const Trajectory& ybar, const ConstraintOptions& opts = {});

using ResidualVectorFn = std::function<Vector(const ReadoutMatrix&)>;

/// Central differences, one column per readout entry.
Matrix fd_jacobian(const ResidualVectorFn& residual, const ReadoutMatrix& w, double step);

/// `step,e1_1..e1_d,e2_1..e2_d,e3_1..e3_d`, one row per step.
void write_residuals_csv(std::ostream& out, const StageResiduals& r);

}  // namespace esnode
