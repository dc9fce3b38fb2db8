#include "esnode/reservoir.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "esnode/error.hpp"
#include "esnode/rng.hpp"

namespace esnode {

const char* to_string(Activation a) noexcept {
  return a == Activation::Tanh ? "tanh" : "logistic";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "logistic" || name == "sigmoid") return Activation::Logistic;
  throw Error(ErrorCode::Config, "unknown activation '" + std::string(name) + "'");
}

void ReservoirParams::validate() const {
  if (n_neurons < 1) throw Error(ErrorCode::Config, "reservoir.n_neurons must be >= 1");
  if (!(connectivity > 0.0 && connectivity <= 1.0)) {
    throw Error(ErrorCode::Config, "reservoir.connectivity must be in (0, 1]");
  }
  if (!(spectral_norm > 0.0)) throw Error(ErrorCode::Config, "reservoir.spectral_norm must be > 0");
  if (!std::isfinite(input_scale)) throw Error(ErrorCode::Config, "reservoir.input_scale must be finite");
}

double activate(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

double activation_slope(Activation a, double sigma) {
  return a == Activation::Tanh ? 1.0 - sigma * sigma : sigma * (1.0 - sigma);
}

namespace {

template <typename Mat>
double power_iteration(const Mat& m) {
  const Eigen::Index n = m.cols();
  if (n == 0 || m.rows() == 0) throw Error(ErrorCode::DegenerateMatrix, "empty matrix has no 2-norm");

  // Start from the normalized all-ones vector; fall back to the heaviest
  // column if that happens to be annihilated by m.
  Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  Vector mx = m * x;
  if (mx.squaredNorm() == 0.0) {
    Vector col_norms(n);
    for (Eigen::Index j = 0; j < n; ++j) col_norms(j) = Vector(m * Vector::Unit(n, j)).squaredNorm();
    Eigen::Index best = 0;
    if (col_norms.maxCoeff(&best) == 0.0) {
      throw Error(ErrorCode::DegenerateMatrix, "matrix is identically zero; cannot take its 2-norm");
    }
    x = Vector::Unit(n, best);
    mx = m * x;
  }

  double estimate = mx.squaredNorm();
  for (int it = 0; it < 10000; ++it) {
    Vector y = m.transpose() * mx;
    x = y / y.norm();
    mx = m * x;
    const double next = mx.squaredNorm();  // Rayleigh quotient of m^T m
    const bool done = std::abs(next - estimate) < 1e-10 * next;
    estimate = next;
    if (done) break;
  }
  return std::sqrt(estimate);
}

}  // namespace

double spectral_norm(const SparseMatrix& m) { return power_iteration(m); }
double spectral_norm(const Matrix& m) { return power_iteration(m); }

Reservoir assemble(SparseMatrix omega, Matrix v, Vector b, Vector c, const ReservoirParams& params) {
  params.validate();
  const Eigen::Index n = b.size();
  if (omega.rows() != n || omega.cols() != n || v.rows() != n || c.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "reservoir weight shapes disagree");
  }
  const double norm = spectral_norm(omega);
  omega *= params.spectral_norm / norm;
  Reservoir r;
  r.omega = std::move(omega);
  r.v = std::move(v);
  r.b = std::move(b);
  r.c = std::move(c);
  r.params = params;
  return r;
}

Reservoir build(const ReservoirParams& params, int dim) {
  params.validate();
  if (dim < 1) throw Error(ErrorCode::Config, "state dimension must be >= 1");
  const int n = params.n_neurons;
  Rng rng(params.seed);

  // Selection sampling: visits positions in row-major order and keeps exactly
  // round(connectivity * N^2) of them.
  const std::uint64_t total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  std::uint64_t needed = static_cast<std::uint64_t>(std::llround(params.connectivity * static_cast<double>(total)));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(needed);
  for (std::uint64_t pos = 0; pos < total && needed > 0; ++pos) {
    if (rng.below(total - pos) < needed) {
      triplets.emplace_back(static_cast<int>(pos / n), static_cast<int>(pos % n), rng.uniform(-1.0, 1.0));
      --needed;
    }
  }
  SparseMatrix omega(n, n);
  omega.setFromTriplets(triplets.begin(), triplets.end());

  const double s = params.input_scale;
  Matrix v(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) v(i, j) = s * rng.uniform(-1.0, 1.0);
  Vector b(n), c(n);
  for (int i = 0; i < n; ++i) b(i) = s * rng.uniform(-1.0, 1.0);
  for (int i = 0; i < n; ++i) c(i) = s * rng.uniform(-1.0, 1.0);

  return assemble(std::move(omega), std::move(v), std::move(b), std::move(c), params);
}

Vector step(const Reservoir& res, const Vector& h, const Vector& input, double tau) {
  if (h.size() != res.size() || input.size() != res.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "step: hidden state or input has the wrong size");
  }
  // Same association order as drive() so both paths agree bit for bit.
  const Vector btau = res.b * tau;
  Vector z = btau + res.omega * h + res.v * input + res.c;
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activate(res.params.activation, z(i));
  return z;
}

HiddenSequence drive(const Reservoir& res, const Trajectory& inputs, const Vector& h0) {
  const int n = res.size();
  if (inputs.dim() != res.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "reservoir expects " + std::to_string(res.input_dim()) + "-dimensional inputs, got " +
                    std::to_string(inputs.dim()));
  }
  if (h0.size() != n) throw Error(ErrorCode::DimensionMismatch, "initial hidden state has wrong size");
  if (inputs.size() < 1) throw Error(ErrorCode::LengthMismatch, "drive needs at least one input point");

  const int steps = inputs.size();
  const double tau = inputs.tau;
  const Activation act = res.params.activation;
  HiddenSequence hs;
  hs.tau = tau;
  hs.activation = act;
  hs.h.resize(steps + 1, n);
  hs.z.resize(steps, n);
  hs.z0.resize(steps, n);
  hs.sig.resize(steps, n);
  hs.sig_dot.resize(steps, n);
  hs.sig0.resize(steps, n);
  hs.h.row(0) = h0.transpose();

  const Vector btau = res.b * tau;
  Vector h = h0;
  for (int k = 0; k < steps; ++k) {
    const Vector z = btau + res.omega * h + res.v * inputs.state(k) + res.c;
    const Vector z0 = z - btau;
    for (int i = 0; i < n; ++i) {
      const double s = activate(act, z(i));
      hs.z(k, i) = z(i);
      hs.z0(k, i) = z0(i);
      hs.sig(k, i) = s;
      hs.sig_dot(k, i) = activation_slope(act, s);
      hs.sig0(k, i) = activate(act, z0(i));
      h(i) = s;
    }
    hs.h.row(k + 1) = h.transpose();
  }
  return hs;
}

HiddenSequence HiddenSequence::drop_front(int n) const {
  if (n < 0 || n > steps()) throw Error(ErrorCode::LengthMismatch, "cannot drop more steps than driven");
  HiddenSequence out;
  out.tau = tau;
  out.activation = activation;
  const int rest = steps() - n;
  out.h = h.bottomRows(rest + 1);
  out.z = z.bottomRows(rest);
  out.z0 = z0.bottomRows(rest);
  out.sig = sig.bottomRows(rest);
  out.sig_dot = sig_dot.bottomRows(rest);
  out.sig0 = sig0.bottomRows(rest);
  return out;
}

void write_dump(std::ostream& out, const Reservoir& res) {
  const auto& p = res.params;
  char buf[64];
  out << "%%esnode reservoir " << res.size() << ' ' << res.input_dim() << '\n';
  out << "% connectivity " << p.connectivity << " spectral_norm " << p.spectral_norm << " input_scale "
      << p.input_scale << " seed " << p.seed << " activation " << to_string(p.activation) << '\n';
  out << "omega " << res.omega.rows() << ' ' << res.omega.cols() << ' ' << res.omega.nonZeros() << '\n';
  for (int i = 0; i < res.omega.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(res.omega, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << buf << '\n';
    }
  }
  auto dense = [&](const char* name, const Matrix& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << (j ? " " : "") << buf;
      }
      out << '\n';
    }
  };
  dense("v", res.v);
  dense("b", Matrix(res.b.transpose()));
  dense("c", Matrix(res.c.transpose()));
}

}  // namespace esnode
