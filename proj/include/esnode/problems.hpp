#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "esnode/types.hpp"

namespace esnode {

/// Autonomous system dy/dt = f(y) with its analytic Jacobian.
struct OdeSystem {
  std::string name;
  int dim = 0;
  std::function<Vector(const Vector&)> rhs;
  std::function<Matrix(const Vector&)> jac;
  /// Exact solution y(t) through y_init at t = 0; empty when unknown.
  std::function<Vector(const Vector& y_init, double t)> reference;

  bool has_reference() const { return static_cast<bool>(reference); }
};

OdeSystem harmonic();
OdeSystem van_der_pol();
/// sigma = 10, rho = 28, beta = 8/3.
OdeSystem lorenz();

/// Lookup by the names used in run configs: "harmonic", "vdp", "lorenz".
OdeSystem system_by_name(std::string_view name);
std::vector<std::string> system_names();

}  // namespace esnode
