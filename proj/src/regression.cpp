#include "esnode/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "esnode/error.hpp"

namespace esnode {

namespace {

constexpr double kLambdaFloor = 1e-12;

double objective_of(const StageResiduals& r, const ReadoutMatrix& w, double lambda) {
  return r.loss_total + lambda * w.squaredNorm();
}

Vector solve_spd(Matrix& a, const Vector& rhs, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, std::string(what) + " is not positive definite");
  }
  Vector x = llt.solve(rhs);
  if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, std::string(what) + " solve produced non-finite values");
  return x;
}

}  // namespace

void GnConfig::validate() const {
  if (!(lambda > 0.0)) throw Error(ErrorCode::Config, "lambda must be > 0");
  if (max_iters < 1) throw Error(ErrorCode::Config, "max_iters must be >= 1");
  if (!(rel_loss_tol >= 0.0)) throw Error(ErrorCode::Config, "rel_loss_tol must be >= 0");
  if (backtrack_max_halvings < 0) throw Error(ErrorCode::Config, "backtrack_max_halvings must be >= 0");
}

ReadoutMatrix ridge_initial_guess(const HiddenSequence& hs, const Trajectory& trial, double lambda) {
  const int n = hs.steps();
  if (trial.size() < n + 1) {
    throw Error(ErrorCode::LengthMismatch, "trial has " + std::to_string(trial.size()) + " points, need " +
                                               std::to_string(n + 1));
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::Config, "ridge lambda must be >= 0");
  const Matrix d = (trial.states.middleRows(1, n) - trial.states.topRows(n)) / hs.tau;
  const Eigen::Index nn = hs.neurons();
  Matrix a = Matrix::Zero(nn, nn);
  a.selfadjointView<Eigen::Lower>().rankUpdate(hs.sig.transpose());
  a = a.selfadjointView<Eigen::Lower>();
  a.diagonal().array() += lambda;
  const Matrix rhs = hs.sig.transpose() * d;  // N x d
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "ridge normal matrix is numerically singular; raise lambda");
  }
  Matrix x = llt.solve(rhs);
  if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, "ridge solve produced non-finite values");
  return x.transpose();
}

ReadoutMatrix gn_step(const Matrix& j, const Vector& e, double lambda, const ReadoutMatrix* w, Eigen::Index rows,
                      Eigen::Index cols) {
  if (j.rows() != e.size() || j.cols() != rows * cols || (w && (w->rows() != rows || w->cols() != cols))) {
    throw Error(ErrorCode::DimensionMismatch, "Jacobian, residual and readout shapes disagree");
  }
  const double lam = std::max(lambda, kLambdaFloor);
  Vector wv = Vector::Zero(j.cols());
  if (w) wv = w->reshaped<Eigen::RowMajor>();

  Vector delta;
  if (j.rows() >= j.cols()) {
    Matrix a = Matrix::Zero(j.cols(), j.cols());
    a.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
    a = a.selfadjointView<Eigen::Lower>();
    a.diagonal().array() += lam;
    delta = solve_spd(a, -(j.transpose() * e + lam * wv), "Gauss-Newton normal matrix");
  } else {
    // Fewer residuals than unknowns: delta = -w + J^T (J J^T + lam I)^{-1} (J w - e).
    Matrix a = Matrix::Zero(j.rows(), j.rows());
    a.selfadjointView<Eigen::Lower>().rankUpdate(j);
    a = a.selfadjointView<Eigen::Lower>();
    a.diagonal().array() += lam;
    const Vector alpha = solve_spd(a, j * wv - e, "Gauss-Newton dual matrix");
    delta = j.transpose() * alpha - wv;
  }
  ReadoutMatrix out(rows, cols);
  out.reshaped<Eigen::RowMajor>() = delta;
  return out;
}

StageResult solve_stage(const StageResidualFn& residual, const StageJacobianFn& jacobian, const ReadoutMatrix& w0,
                        const GnConfig& cfg) {
  cfg.validate();
  const double lam = std::max(cfg.lambda, kLambdaFloor);
  StageResult out;
  ReadoutMatrix w = w0;
  StageResiduals r = residual(w);
  double obj = objective_of(r, w, lam);
  if (!std::isfinite(obj)) throw Error(ErrorCode::NonFinite, "initial loss is not finite");
  out.initial_loss = r.loss_total;
  out.initial_objective = obj;
  out.w = w;
  double best = obj;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Matrix j = jacobian(w);
    const ReadoutMatrix dw = gn_step(j, r.stacked(), lam, &w, w.rows(), w.cols());

    IterationRecord rec;
    rec.iter = it;
    double scale = 1.0;
    ReadoutMatrix trial_w;
    StageResiduals trial_r;
    double trial_obj = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int h = 0;; ++h) {
      trial_w = w + scale * dw;
      try {
        trial_r = residual(trial_w);
        trial_obj = objective_of(trial_r, trial_w, lam);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFinite) throw;
        trial_obj = std::numeric_limits<double>::infinity();
      }
      rec.halvings = h;
      if (!cfg.backtracking) {
        accepted = std::isfinite(trial_obj);
        break;
      }
      if (trial_obj <= obj) {
        accepted = true;
        break;
      }
      if (h == cfg.backtrack_max_halvings) break;
      scale *= 0.5;
    }

    if (!accepted) {
      // Keep the current readout; further iterations would retrace the same step.
      rec.flagged = true;
      rec.loss = r.loss_total;
      rec.objective = obj;
      rec.loss_by_family = r.loss_by_family;
      out.history.push_back(rec);
      break;
    }

    const double wnorm = w.norm();
    rec.rel_step = (scale * dw).norm() / (wnorm > 0.0 ? wnorm : 1.0);
    rec.rel_loss_change = std::abs(trial_obj - obj) / (obj > 0.0 ? obj : 1.0);
    rec.loss = trial_r.loss_total;
    rec.objective = trial_obj;
    rec.loss_by_family = trial_r.loss_by_family;
    out.history.push_back(rec);

    w = std::move(trial_w);
    r = std::move(trial_r);
    obj = trial_obj;
    if (obj < best) {
      best = obj;
      out.w = w;
    }
    if (rec.rel_loss_change < cfg.rel_loss_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void write_convergence_log(std::ostream& out, const std::vector<IterationRecord>& history) {
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d %.9e %.9e %.9e %.9e %.9e %.9e %d%s\n", r.iter, r.loss, r.loss_by_family[0],
                  r.loss_by_family[1], r.loss_by_family[2], r.rel_step, r.rel_loss_change, r.halvings,
                  r.flagged ? " flagged" : "");
    out << buf;
  }
}

}  // namespace esnode
