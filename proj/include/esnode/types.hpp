#pragma once

#include <Eigen/Dense>

namespace esnode {

using Vector = Eigen::VectorXd;
/// Row-major so that a time step (or a neuron row) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace esnode
