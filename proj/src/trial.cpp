#include "esnode/trial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "esnode/error.hpp"

namespace esnode {
namespace {

void check_args(const OdeSystem& system, const Vector& y0, double tau, int n_steps) {
  if (!(tau > 0.0)) throw Error(ErrorCode::Config, "tau must be positive");
  if (n_steps < 1) throw Error(ErrorCode::Config, "n_steps must be at least 1");
  if (y0.size() != system.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial state has dimension " + std::to_string(y0.size()) + ", system '" +
                    system.name + "' expects " + std::to_string(system.dim));
  }
}

void check_finite(const Vector& y, int step, const char* method) {
  if (!y.allFinite()) {
    throw Error(ErrorCode::NonFinite, std::string(method) + " trajectory became non-finite at step " +
                                          std::to_string(step));
  }
}

template <typename Step>
Trajectory integrate(const OdeSystem& system, const Vector& y0, double tau, int n_steps,
                     int factor, const char* method, Step step) {
  check_args(system, y0, tau, n_steps);
  if (factor < 1) throw Error(ErrorCode::Config, "refine factor must be at least 1");
  const double h = tau / factor;
  Trajectory out;
  out.tau = tau;
  out.states.resize(n_steps + 1, system.dim);
  out.states.row(0) = y0.transpose();
  Vector y = y0;
  for (int k = 1; k <= n_steps; ++k) {
    for (int sub = 0; sub < factor; ++sub) {
      y = step(y, h);
      check_finite(y, (k - 1) * factor + sub + 1, method);
    }
    out.states.row(k) = y.transpose();
  }
  return out;
}

}  // namespace

Trajectory euler(const OdeSystem& system, const Vector& y0, double tau, int n_steps) {
  return refine_downsample(system, y0, tau, n_steps, 1);
}

Trajectory refine_downsample(const OdeSystem& system, const Vector& y0, double tau,
                             int n_steps, int factor) {
  return integrate(system, y0, tau, n_steps, factor, "euler",
                   [&](const Vector& y, double h) -> Vector { return y + h * system.rhs(y); });
}

Trajectory rk4(const OdeSystem& system, const Vector& y0, double tau, int n_steps) {
  return rk4_refined(system, y0, tau, n_steps, 1);
}

Trajectory rk4_refined(const OdeSystem& system, const Vector& y0, double tau, int n_steps,
                       int factor) {
  return integrate(system, y0, tau, n_steps, factor, "rk4", [&](const Vector& y, double h) -> Vector {
    const Vector k1 = system.rhs(y);
    const Vector k2 = system.rhs(y + 0.5 * h * k1);
    const Vector k3 = system.rhs(y + 0.5 * h * k2);
    const Vector k4 = system.rhs(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  });
}

CropResult washout_crop(const Trajectory& traj, int n_drop, int n_keep) {
  if (n_drop < 0 || n_keep < 0 || n_drop + n_keep > traj.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "cannot crop " + std::to_string(n_drop) + "+" + std::to_string(n_keep) +
                    " points from a trajectory of " + std::to_string(traj.size()));
  }
  CropResult r;
  r.washout.t0 = traj.t0;
  r.washout.tau = traj.tau;
  r.washout.states = traj.states.topRows(n_drop);
  r.kept.t0 = traj.time(n_drop);
  r.kept.tau = traj.tau;
  r.kept.states = traj.states.middleRows(n_drop, n_keep);
  return r;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  out << 't';
  for (int j = 0; j < traj.dim(); ++j) out << ",y" << (j + 1);
  out << '\n';
  char buf[32];
  for (int k = 0; k < traj.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.time(k));
    out << buf;
    for (int j = 0; j < traj.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.states(k, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

Trajectory read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,", 0) != 0) {
    throw Error(ErrorCode::Io, "trajectory CSV must start with a 't,y1,...' header");
  }
  const int dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
  std::vector<double> times, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    int col = 0;
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      (col == 0 ? times : values).push_back(v);
      ++col;
    }
    if (col != dim + 1) throw Error(ErrorCode::Io, "ragged trajectory CSV row: " + line);
  }
  Trajectory t;
  t.states = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(times.size()), dim);
  if (!times.empty()) t.t0 = times.front();
  if (times.size() > 1) t.tau = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  return t;
}

}  // namespace esnode
