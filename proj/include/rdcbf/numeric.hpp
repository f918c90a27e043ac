#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace rdcbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Central-difference step used for every numeric derivative in the library.
inline double fd_step(double xj) { return std::max(1e-6, 1e-6 * std::abs(xj)); }

// Jacobian of a vector-valued map by central differences.
template <typename F>
Mat numeric_jacobian(F&& fn, const Vec& x) {
  Vec x_pert = x;
  Mat jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j]);
    x_pert[j] = x[j] + h;
    const Vec plus = fn(x_pert);
    x_pert[j] = x[j] - h;
    const Vec minus = fn(x_pert);
    x_pert[j] = x[j];
    if (j == 0) jac.resize(plus.size(), x.size());
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

// Gradient of a scalar map by central differences.
template <typename F>
Vec numeric_gradient(F&& fn, const Vec& x) {
  Vec x_pert = x;
  Vec grad(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j]);
    x_pert[j] = x[j] + h;
    const double plus = fn(x_pert);
    x_pert[j] = x[j] - h;
    const double minus = fn(x_pert);
    x_pert[j] = x[j];
    grad[j] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

// One classical 4th-order Runge-Kutta step of y' = field(y).
template <typename Field>
Vec rk4_step(Field&& field, const Vec& y, double h) {
  const Vec k1 = field(y);
  const Vec k2 = field(y + 0.5 * h * k1);
  const Vec k3 = field(y + 0.5 * h * k2);
  const Vec k4 = field(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace rdcbf
