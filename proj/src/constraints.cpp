#include "esnode/constraints.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "esnode/error.hpp"

namespace esnode {

namespace {

void check_readout(const ReadoutMatrix& w, const HiddenSequence& hs, int dim) {
  if (w.rows() != dim || w.cols() != hs.neurons()) {
    throw Error(ErrorCode::DimensionMismatch,
                "readout is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + ", expected " +
                    std::to_string(dim) + "x" + std::to_string(hs.neurons()));
  }
  if (hs.steps() < 1) throw Error(ErrorCode::LengthMismatch, "hidden sequence has no steps");
}

void check_system(const OdeSystem& system, const Reservoir& res, const HiddenSequence& hs, int dim) {
  if (system.dim != dim || res.input_dim() != dim || res.size() != hs.neurons()) {
    throw Error(ErrorCode::DimensionMismatch, "system, reservoir and readout dimensions disagree");
  }
}

// a = sig + tau * b (.) sig_dot, the tau-derivative of tau * sig(z(tau)).
Matrix slope_features(const Reservoir& res, const HiddenSequence& hs) {
  Matrix a = hs.sig;
  for (int q = 0; q < hs.steps(); ++q) a.row(q).array() += hs.tau * res.b.transpose().array() * hs.sig_dot.row(q).array();
  return a;
}

// sig_dot (.) (omega sig0), row per step.
Matrix recurrent_features(const Reservoir& res, const HiddenSequence& hs) {
  Matrix out(hs.steps(), hs.neurons());
  for (int q = 0; q < hs.steps(); ++q) {
    const Vector os = res.omega * hs.sig0.row(q).transpose();
    out.row(q) = hs.sig_dot.row(q).cwiseProduct(os.transpose());
  }
  return out;
}

// Running sums C_p = tau * sum_{q<p} sig^q, p = 0..steps.
Matrix cumulative_features(const HiddenSequence& hs) {
  Matrix c = Matrix::Zero(hs.steps() + 1, hs.neurons());
  for (int q = 0; q < hs.steps(); ++q) c.row(q + 1) = c.row(q) + hs.tau * hs.sig.row(q);
  return c;
}

void finish(StageResiduals& r, const ConstraintOptions& opts, const char* stage) {
  r.weights = opts.family_weights;
  const Matrix* fam[3] = {&r.e1, &r.e2, &r.e3};
  r.loss_total = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (!fam[k]->allFinite()) {
      throw Error(ErrorCode::NonFinite, std::string(stage) + " residual e" + std::to_string(k + 1) +
                                            " is not finite");
    }
    r.loss_by_family[k] = fam[k]->squaredNorm();
    r.loss_total += r.weights[k] * r.loss_by_family[k];
  }
}

Vector row_vec(const Matrix& m, int q) { return m.row(q).transpose(); }

// Writes coef * feature into the (row, component j) block of J.
inline void put(Matrix& j, Eigen::Index row, int comp, int n, double coef, const Matrix& feat, int q) {
  if (coef != 0.0) j.block(row, Eigen::Index(comp) * n, 1, n) += coef * feat.row(q);
}

}  // namespace

Vector StageResiduals::stacked() const {
  const Eigen::Index block = e1.size();
  Vector out(3 * block);
  const Matrix* fam[3] = {&e1, &e2, &e3};
  for (int k = 0; k < 3; ++k) {
    out.segment(k * block, block) = std::sqrt(weights[k]) * fam[k]->reshaped<Eigen::RowMajor>();
  }
  return out;
}

Trajectory stage1_readout(const ReadoutMatrix& wbar, const HiddenSequence& hs, const Vector& y_start,
                          double t0) {
  check_readout(wbar, hs, static_cast<int>(y_start.size()));
  Trajectory out;
  out.t0 = t0;
  out.tau = hs.tau;
  out.states.resize(hs.steps() + 1, y_start.size());
  out.states.row(0) = y_start.transpose();
  for (int q = 0; q < hs.steps(); ++q) {
    out.states.row(q + 1) = out.states.row(q) + hs.tau * (wbar * row_vec(hs.sig, q)).transpose();
  }
  return out;
}

Trajectory stage2_readout(const ReadoutMatrix& w, const HiddenSequence& hs, const Trajectory& ybar) {
  check_readout(w, hs, ybar.dim());
  if (ybar.size() < hs.steps()) {
    throw Error(ErrorCode::LengthMismatch, "stage-1 trajectory shorter than the stage-2 hidden sequence");
  }
  Trajectory out;
  out.t0 = ybar.t0;
  out.tau = hs.tau;
  out.states.resize(hs.steps() + 1, ybar.dim());
  out.states.row(0) = ybar.states.row(0);
  for (int q = 0; q < hs.steps(); ++q) {
    out.states.row(q + 1) = ybar.states.row(q) + hs.tau * (w * row_vec(hs.sig, q)).transpose();
  }
  return out;
}

StageResiduals stage1_residuals(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& wbar,
                                const HiddenSequence& hs, const Vector& y_start, const ConstraintOptions& opts) {
  const int d = system.dim;
  check_readout(wbar, hs, d);
  check_system(system, res, hs, d);
  const int n = hs.steps();
  const Trajectory yb = stage1_readout(wbar, hs, y_start);
  const Matrix a = slope_features(res, hs);
  const Matrix rec = recurrent_features(res, hs);

  StageResiduals r;
  r.e1.resize(n, d);
  r.e2.resize(n, d);
  r.e3.resize(n, d);
  Vector f_prev = system.rhs(yb.state(0));
  for (int q = 0; q < n; ++q) {
    const Vector f_next = system.rhs(yb.state(q + 1));
    const Vector wa = wbar * row_vec(a, q);
    const Vector ws0 = wbar * row_vec(hs.sig0, q);
    const Vector wrec = opts.tau_ratio * (wbar * row_vec(rec, q));
    r.e1.row(q) = (f_next - wa).transpose();
    r.e2.row(q) = (f_prev - ws0).transpose();
    if (opts.e3_substitution) {
      r.e3.row(q) = (wrec - (wa - ws0)).transpose();
    } else {
      r.e3.row(q) = (f_prev + wrec - f_next).transpose();
    }
    f_prev = f_next;
  }
  finish(r, opts, "stage-1");
  return r;
}

StageResiduals stage2_residuals(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& w,
                                const HiddenSequence& hs, const Trajectory& ybar, const ConstraintOptions& opts) {
  const int d = system.dim;
  check_readout(w, hs, d);
  check_system(system, res, hs, d);
  const int n = hs.steps();
  const double tau = hs.tau;
  const Trajectory y = stage2_readout(w, hs, ybar);
  const Matrix a = slope_features(res, hs);

  StageResiduals r;
  r.e1.resize(n, d);
  r.e2.resize(n, d);
  r.e3.resize(n, d);
  for (int q = 0; q < n; ++q) {
    const Vector fb = system.rhs(ybar.state(q));
    const Vector fy = system.rhs(y.state(q + 1));
    const Vector wa = w * row_vec(a, q);
    const Vector ws0 = w * row_vec(hs.sig0, q);
    r.e1.row(q) = (fy - wa).transpose();
    r.e2.row(q) = (fb - ws0).transpose();
    // Directional derivative of y^{n+1} w.r.t. ybar^n along the flow.
    const Vector dir = opts.e3_substitution ? ws0 : fb;
    const Vector pushed = tau * (w * hs.sig_dot.row(q).transpose().cwiseProduct(res.v * dir));
    if (opts.e3_substitution) {
      r.e3.row(q) = (pushed - (wa - ws0)).transpose();
    } else {
      r.e3.row(q) = (fb + pushed - fy).transpose();
    }
  }
  finish(r, opts, "stage-2");
  return r;
}

Matrix stage1_jacobian(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& wbar,
                       const HiddenSequence& hs, const Vector& y_start, const ConstraintOptions& opts) {
  const int d = system.dim;
  check_readout(wbar, hs, d);
  check_system(system, res, hs, d);
  const int n = hs.steps();
  const int nn = hs.neurons();
  const Trajectory yb = stage1_readout(wbar, hs, y_start);
  const Matrix a = slope_features(res, hs);
  const Matrix c = cumulative_features(hs);
  Matrix rec = recurrent_features(res, hs) * opts.tau_ratio;
  Matrix g = rec - (a - hs.sig0);

  const double s1 = std::sqrt(opts.family_weights[0]);
  const double s2 = std::sqrt(opts.family_weights[1]);
  const double s3 = std::sqrt(opts.family_weights[2]);
  const Eigen::Index block = Eigen::Index(n) * d;
  Matrix j = Matrix::Zero(3 * block, Eigen::Index(d) * nn);
  Matrix jf_prev = system.jac(yb.state(0));
  for (int q = 0; q < n; ++q) {
    const Matrix jf_next = system.jac(yb.state(q + 1));
    for (int i = 0; i < d; ++i) {
      const Eigen::Index r1 = Eigen::Index(q) * d + i;
      const Eigen::Index r2 = block + r1;
      const Eigen::Index r3 = 2 * block + r1;
      for (int k = 0; k < d; ++k) {
        put(j, r1, k, nn, s1 * jf_next(i, k), c, q + 1);
        put(j, r2, k, nn, s2 * jf_prev(i, k), c, q);
        if (!opts.e3_substitution) {
          put(j, r3, k, nn, s3 * jf_prev(i, k), c, q);
          put(j, r3, k, nn, -s3 * jf_next(i, k), c, q + 1);
        }
      }
      put(j, r1, i, nn, -s1, a, q);
      put(j, r2, i, nn, -s2, hs.sig0, q);
      put(j, r3, i, nn, s3, opts.e3_substitution ? g : rec, q);
    }
    jf_prev = jf_next;
  }
  return j;
}

Matrix stage2_jacobian(const OdeSystem& system, const Reservoir& res, const ReadoutMatrix& w,
                       const HiddenSequence& hs, const Trajectory& ybar, const ConstraintOptions& opts) {
  const int d = system.dim;
  check_readout(w, hs, d);
  check_system(system, res, hs, d);
  const int n = hs.steps();
  const int nn = hs.neurons();
  const double tau = hs.tau;
  const Trajectory y = stage2_readout(w, hs, ybar);
  const Matrix a = slope_features(res, hs);
  const Matrix tsig = tau * hs.sig;

  const double s1 = std::sqrt(opts.family_weights[0]);
  const double s2 = std::sqrt(opts.family_weights[1]);
  const double s3 = std::sqrt(opts.family_weights[2]);
  const Eigen::Index block = Eigen::Index(n) * d;
  Matrix j = Matrix::Zero(3 * block, Eigen::Index(d) * nn);
  Matrix lin(1, nn);  // per-step coefficient row of the delta_ij part of e3
  for (int q = 0; q < n; ++q) {
    const Matrix jf = system.jac(y.state(q + 1));
    const Vector sd = hs.sig_dot.row(q).transpose();
    Matrix quad;  // tau * w diag(sig_dot) v, only for the substituted form
    if (opts.e3_substitution) {
      const Vector ws0 = w * row_vec(hs.sig0, q);
      const Vector s = sd.cwiseProduct(res.v * ws0);
      lin.row(0) = (tau * s - (row_vec(a, q) - row_vec(hs.sig0, q))).transpose();
      quad = tau * (w * sd.asDiagonal() * res.v);
    } else {
      const Vector fb = system.rhs(ybar.state(q));
      lin.row(0) = (tau * sd.cwiseProduct(res.v * fb)).transpose();
    }
    for (int i = 0; i < d; ++i) {
      const Eigen::Index r1 = Eigen::Index(q) * d + i;
      const Eigen::Index r2 = block + r1;
      const Eigen::Index r3 = 2 * block + r1;
      for (int k = 0; k < d; ++k) {
        put(j, r1, k, nn, s1 * jf(i, k), tsig, q);
        if (opts.e3_substitution) {
          put(j, r3, k, nn, s3 * quad(i, k), hs.sig0, q);
        } else {
          put(j, r3, k, nn, -s3 * jf(i, k), tsig, q);
        }
      }
      put(j, r1, i, nn, -s1, a, q);
      put(j, r2, i, nn, -s2, hs.sig0, q);
      put(j, r3, i, nn, s3, lin, 0);
    }
  }
  return j;
}

Matrix fd_jacobian(const ResidualVectorFn& residual, const ReadoutMatrix& w, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::Config, "finite-difference step must be positive");
  const Eigen::Index cols = w.size();
  Matrix j;
  ReadoutMatrix probe = w;
  for (Eigen::Index col = 0; col < cols; ++col) {
    double& entry = probe.data()[col];  // row-major storage matches vec(w)
    const double saved = entry;
    entry = saved + step;
    const Vector plus = residual(probe);
    entry = saved - step;
    const Vector minus = residual(probe);
    entry = saved;
    if (col == 0) j.resize(plus.size(), cols);
    j.col(col) = (plus - minus) / (2.0 * step);
  }
  return j;
}

void write_residuals_csv(std::ostream& out, const StageResiduals& r) {
  const Eigen::Index d = r.e1.cols();
  out << "step";
  for (int k = 1; k <= 3; ++k)
    for (Eigen::Index i = 1; i <= d; ++i) out << ",e" << k << '_' << i;
  out << '\n';
  char buf[40];
  const Matrix* fam[3] = {&r.e1, &r.e2, &r.e3};
  for (int q = 0; q < r.steps(); ++q) {
    out << q + 1;
    for (const Matrix* m : fam) {
      for (Eigen::Index i = 0; i < d; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", (*m)(q, i));
        out << ',' << buf;
      }
    }
    out << '\n';
  }
}

}  // namespace esnode
