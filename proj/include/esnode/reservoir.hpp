#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

#include <Eigen/SparseCore>

#include "esnode/trial.hpp"
#include "esnode/types.hpp"

namespace esnode {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Activation { Tanh, Logistic };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

struct ReservoirParams {
  int n_neurons = 200;
  double connectivity = 0.1;
  /// Target 2-norm (largest singular value) of omega.
  double spectral_norm = 10.0;
  /// Scale of the uniform[-1, 1] entries of v, b and c.
  double input_scale = 1.0;
  std::uint64_t seed = 1;
  Activation activation = Activation::Tanh;

  void validate() const;
};

/// Fixed random recurrent layer: z = b*tau + omega*h + v*y + c, h' = act(z).
struct Reservoir {
  SparseMatrix omega;  // N x N
  Matrix v;            // N x d
  Vector b;            // N
  Vector c;            // N
  ReservoirParams params;

  int size() const { return static_cast<int>(b.size()); }
  int input_dim() const { return static_cast<int>(v.cols()); }
};

/// Samples round(connectivity * N^2) positions of omega without replacement,
/// fills them with uniform[-1, 1] and rescales to params.spectral_norm.
/// Deterministic in (params, dim). Throws DegenerateMatrix if omega is zero.
Reservoir build(const ReservoirParams& params, int dim);

/// Assembles a reservoir from given weights; omega is rescaled to
/// params.spectral_norm exactly like build() does.
Reservoir assemble(SparseMatrix omega, Matrix v, Vector b, Vector c, const ReservoirParams& params);

/// Largest singular value by power iteration on m^T m. Stops when successive
/// estimates agree to 1e-10 relative or after 1e4 iterations.
double spectral_norm(const SparseMatrix& m);
double spectral_norm(const Matrix& m);

/// Activation values and derivative expressed through the activation value.
double activate(Activation a, double z);
double activation_slope(Activation a, double sigma);

/// Everything the residuals need from one pass of the reservoir over an
/// input sequence. Row n of z/z0/sig/... belongs to step n -> n+1; h has one
/// more row than the step count (h.row(0) is the initial state).
struct HiddenSequence {
  Matrix h;
  Matrix z;        // preactivation at tau
  Matrix z0;       // preactivation at tau = 0
  Matrix sig;      // act(z)
  Matrix sig_dot;  // act'(z)
  Matrix sig0;     // act(z0)
  double tau = 0.0;
  Activation activation = Activation::Tanh;

  int steps() const { return static_cast<int>(z.rows()); }
  int neurons() const { return static_cast<int>(z.cols()); }

  /// Drops the first n steps (washout); h keeps the state entering step n.
  HiddenSequence drop_front(int n) const;
};

/// Teacher-forced pass: every input point produces one step.
HiddenSequence drive(const Reservoir& res, const Trajectory& inputs, const Vector& h0);

/// One reservoir update; returns the new hidden state.
Vector step(const Reservoir& res, const Vector& h, const Vector& input, double tau);

/// Matrix-market style text dump (omega triplets, dense v, b, c). Debug aid only.
void write_dump(std::ostream& out, const Reservoir& res);

}  // namespace esnode
