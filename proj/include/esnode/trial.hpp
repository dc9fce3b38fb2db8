#pragma once

#include <iosfwd>
#include <utility>

#include "esnode/problems.hpp"
#include "esnode/types.hpp"

namespace esnode {

/// Uniformly spaced states; row k is the state at t0 + k * tau.
struct Trajectory {
  double t0 = 0.0;
  double tau = 1.0;
  Matrix states;

  int dim() const { return static_cast<int>(states.cols()); }
  int size() const { return static_cast<int>(states.rows()); }
  double time(int k) const { return t0 + k * tau; }
  Vector state(int k) const { return states.row(k).transpose(); }
};

/// Explicit Euler, n_steps + 1 points. Throws NonFinite on blow-up.
Trajectory euler(const OdeSystem& system, const Vector& y0, double tau, int n_steps);

/// Classical fourth-order Runge-Kutta with the same shape contract as euler.
Trajectory rk4(const OdeSystem& system, const Vector& y0, double tau, int n_steps);

/// Euler at tau / factor, keeping every factor-th point (spacing tau).
Trajectory refine_downsample(const OdeSystem& system, const Vector& y0, double tau,
                             int n_steps, int factor);

/// RK4 at tau / factor sampled every factor-th point; the evaluation oracle.
Trajectory rk4_refined(const OdeSystem& system, const Vector& y0, double tau, int n_steps,
                       int factor);

struct CropResult {
  Trajectory washout;
  Trajectory kept;
};

/// Splits off the first n_drop points; kept holds the next n_keep points.
CropResult washout_crop(const Trajectory& traj, int n_drop, int n_keep);

/// `t,y1,...,yd` header, 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);
/// Inverse of write_csv; tau and t0 are recovered from the time column.
Trajectory read_csv(std::istream& in);

}  // namespace esnode
