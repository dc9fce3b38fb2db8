#include "esnode/problems.hpp"

#include <cmath>

#include "esnode/error.hpp"

namespace esnode {

OdeSystem harmonic() {
  OdeSystem s;
  s.name = "harmonic";
  s.dim = 2;
  s.rhs = [](const Vector& y) {
    Vector f(2);
    f << y(1), -y(0);
    return f;
  };
  s.jac = [](const Vector&) {
    Matrix j(2, 2);
    j << 0.0, 1.0, -1.0, 0.0;
    return j;
  };
  s.reference = [](const Vector& y_init, double t) {
    const double c = std::cos(t), sn = std::sin(t);
    Vector y(2);
    y << y_init(0) * c + y_init(1) * sn, -y_init(0) * sn + y_init(1) * c;
    return y;
  };
  return s;
}

OdeSystem van_der_pol() {
  OdeSystem s;
  s.name = "vdp";
  s.dim = 2;
  s.rhs = [](const Vector& y) {
    Vector f(2);
    f << y(1), y(1) - y(0) - y(0) * y(0) * y(1);
    return f;
  };
  s.jac = [](const Vector& y) {
    Matrix j(2, 2);
    j << 0.0, 1.0, -1.0 - 2.0 * y(0) * y(1), 1.0 - y(0) * y(0);
    return j;
  };
  return s;
}

OdeSystem lorenz() {
  constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  OdeSystem s;
  s.name = "lorenz";
  s.dim = 3;
  s.rhs = [=](const Vector& y) {
    Vector f(3);
    f << sigma * (y(1) - y(0)), y(0) * (rho - y(2)) - y(1), y(0) * y(1) - beta * y(2);
    return f;
  };
  s.jac = [=](const Vector& y) {
    Matrix j(3, 3);
    j << -sigma, sigma, 0.0,
         rho - y(2), -1.0, -y(0),
         y(1), y(0), -beta;
    return j;
  };
  return s;
}

OdeSystem system_by_name(std::string_view name) {
  if (name == "harmonic") return harmonic();
  if (name == "vdp") return van_der_pol();
  if (name == "lorenz") return lorenz();
  throw Error(ErrorCode::Config, "unknown problem '" + std::string(name) +
                                     "' (expected harmonic, vdp or lorenz)");
}

std::vector<std::string> system_names() { return {"harmonic", "vdp", "lorenz"}; }

}  // namespace esnode
