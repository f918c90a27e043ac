#pragma once

#include <cmath>
#include <optional>
#include <random>

#include "rdcbf/all.hpp"

namespace fixtures {

using rdcbf::Mat;
using rdcbf::Vec;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// r'' = u, analytic Jacobians.
inline rdcbf::SystemModel double_integrator() {
  rdcbf::SystemModel model;
  model.n = 1;
  model.m = 1;
  model.f_r = [](const Vec& x) { return Vec(x.tail(1)); };
  model.f_v = [](const Vec&) { return Vec(Vec::Zero(1)); };
  model.g_diag = [](const Vec&) { return Vec(Vec::Ones(1)); };
  model.f_r_jacobian = [](const Vec&) { return Mat((Mat(1, 2) << 0.0, 1.0).finished()); };
  model.f_v_jacobian = [](const Vec&) { return Mat(Mat::Zero(1, 2)); };
  model.g_diag_jacobian = [](const Vec&) { return Mat(Mat::Zero(1, 2)); };
  return model;
}

// h_r = sign * (r - wall)
inline rdcbf::RD2Constraint wall(double at = 1.0, double sign = 1.0) {
  rdcbf::RD2Constraint h;
  h.value = [at, sign](const Vec& r) { return sign * (r[0] - at); };
  h.gradient = [sign](const Vec&) { return Vec(Vec::Constant(1, sign)); };
  h.hessian = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
  return h;
}

inline rdcbf::ConstraintSet wall_constraints(std::optional<std::pair<double, double>> v_box = {},
                                             double u_lo = -1.0, double u_hi = 1.0) {
  Vec vmin(0), vmax(0);
  if (v_box) {
    vmin = Vec::Constant(1, v_box->first);
    vmax = Vec::Constant(1, v_box->second);
  }
  return rdcbf::ConstraintSet(wall(), vmin, vmax, Vec::Constant(1, u_lo), Vec::Constant(1, u_hi));
}

inline rdcbf::EvadingConfig braking_config(double k = 10.0, double eps = 1e-4) {
  rdcbf::EvadingConfig cfg;
  cfg.epsilon = eps;
  cfg.gain = Vec::Constant(1, k);
  cfg.k1 = cfg.k2 = cfg.k3 = Vec(0);
  return cfg;
}

inline rdcbf::EvadingConfig boxed_config(double k = 10.0, double eps = 1e-4) {
  rdcbf::EvadingConfig cfg = braking_config(k, eps);
  cfg.k1 = Vec::Constant(1, 1.0);
  cfg.k2 = Vec::Constant(1, 2.0);
  cfg.k3 = Vec::Constant(1, 1.0);
  return cfg;
}

inline rdcbf::ZcbfConfig short_zcbf() {
  rdcbf::ZcbfConfig zc;
  zc.horizon = 10.0;
  zc.step = 0.01;
  zc.dwell = 0.5;
  return zc;
}

// Deceleration of the saturated braking maneuver u* = cap tanh(-k) for h_r = r - 1, |u| <= 1.
inline double braking(double k = 10.0, double eps = 1e-4) {
  const double cap = (2.0 - std::sqrt(eps)) / 2.0;
  return cap * std::tanh(k);
}

// Nonlinear two-channel system with no Jacobian hooks (exercises the numeric fallbacks).
// g stays in [1, 2] x [1.5, 2.5]; gsign flips the sign of each channel's gain.
inline rdcbf::SystemModel coupled_system(Eigen::Vector2d gsign = {1.0, 1.0}) {
  rdcbf::SystemModel model;
  model.n = 2;
  model.m = 2;
  model.f_r = [](const Vec& x) {
    return vec({x[2] + 0.3 * std::sin(x[1]), 0.5 * x[3] * std::cos(x[0]) + 0.2 * x[2]});
  };
  model.f_v = [](const Vec& x) { return vec({0.1 * x[0] * x[3], -0.2 * std::sin(x[2])}); };
  model.g_diag = [gsign](const Vec& x) {
    return vec({gsign[0] * (1.5 + 0.5 * std::cos(x[0])), gsign[1] * (2.0 + 0.5 * std::sin(x[3]))});
  };
  return model;
}

inline rdcbf::RD2Constraint quadratic_bowl() {
  rdcbf::RD2Constraint h;
  h.value = [](const Vec& r) { return 4.0 - r[0] * r[0] - 0.5 * r[1] * r[1] - 0.3 * r[0] * r[1]; };
  h.gradient = [](const Vec& r) { return vec({-2.0 * r[0] - 0.3 * r[1], -r[1] - 0.3 * r[0]}); };
  return h;
}

inline rdcbf::uav::UavScenario uav_default() { return {}; }

inline rdcbf::EvadingConfig uav_gains() {
  rdcbf::EvadingConfig cfg;
  cfg.epsilon = 0.0036;
  cfg.gain = vec({0.006, 0.016, 0.006});
  cfg.k1 = vec({1.0, 16.0});
  cfg.k2 = vec({0.5, 6.667});
  cfg.k3 = vec({0.006, 0.26});
  return cfg;
}

// Uniform state in the UAV RD1 box with positions in a shell around the obstacle.
inline Vec uav_state_near_obstacle(const rdcbf::uav::UavScenario& sc, std::mt19937_64& rng,
                                   double r_lo, double r_hi) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss;
  Eigen::Vector3d dir(gauss(rng), gauss(rng), 0.3 * gauss(rng));
  dir.normalize();
  const double dist = r_lo + (r_hi - r_lo) * u01(rng);
  Vec x(6);
  x.head(3) = sc.obstacle_center + dist * dir;
  x[3] = sc.v_min + (sc.v_max - sc.v_min) * u01(rng);
  x[4] = sc.gamma_min + (sc.gamma_max - sc.gamma_min) * u01(rng);
  // Bias headings toward the obstacle so the barrier has a nontrivial peak.
  const double toward = std::atan2(-dir.y(), -dir.x());
  x[5] = toward + (u01(rng) - 0.5) * 2.0;
  return x;
}

}  // namespace fixtures
