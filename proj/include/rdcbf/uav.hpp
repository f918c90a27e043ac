#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "rdcbf/filter.hpp"

namespace rdcbf::uav {

// State layout [Px, Py, Pz, V, gamma, psi], input [u_V, u_gamma, u_psi].
inline constexpr int kV = 3;
inline constexpr int kGamma = 4;
inline constexpr int kPsi = 5;

/// Level circle flown at constant speed; direction +1 is counter-clockwise.
struct CircleReference {
  Eigen::Vector2d center{0.0, 0.0};
  double radius = 100.0;
  double altitude = 100.0;
  double speed = 15.0;
  double direction = 1.0;

  double rate() const { return direction * speed / radius; }
  Eigen::Vector3d position(double t) const {
    const double th = rate() * t;
    return {center.x() + radius * std::cos(th), center.y() + radius * std::sin(th), altitude};
  }
  Eigen::Vector3d velocity(double t) const {
    const double th = rate() * t;
    const double w = rate();
    return {-radius * w * std::sin(th), radius * w * std::cos(th), 0.0};
  }
};

/// Fixed-wing point-mass scenario: one spherical obstacle, speed and flight-path-angle boxes.
struct UavScenario {
  double gravity = 9.81;  // g0
  Eigen::Vector3d obstacle_center{-100.0, 0.0, 106.0};
  double uav_radius = 1.0;
  double obstacle_radius = 15.0;
  double clearance = 2.0;
  double v_min = 12.0, v_max = 20.0;
  double gamma_min = -0.3, gamma_max = 0.3;
  // Model domain is |gamma| <= pi/2 - gamma_margin.
  double gamma_margin = 0.05;
  Eigen::Vector3d u_min{-3.0, 0.0, -10.0};
  Eigen::Vector3d u_max{3.0, 20.0, 10.0};
  CircleReference reference;
  Vec initial_state = (Vec(6) << 100.0, 0.0, 100.0, 15.0, 0.0, std::numbers::pi / 2).finished();

  double inflated_radius() const { return uav_radius + obstacle_radius + clearance; }

  // Field-level checks; the Assumption-1 margin check is separate so audits can probe it.
  void validate_fields() const {
    if (!(gravity > 0.0)) throw ContractViolation("gravity must be positive");
    if (!(uav_radius >= 0.0 && obstacle_radius >= 0.0 && clearance >= 0.0))
      throw ContractViolation("radii must be non-negative");
    if (!(v_min > 0.0)) throw ContractViolation("v_min must be positive");
    if (!(v_min < v_max)) throw ContractViolation("v_min must be < v_max");
    if (!(gamma_min < gamma_max)) throw ContractViolation("gamma_min must be < gamma_max");
    if (!(gamma_margin > 0.0 && gamma_margin < std::numbers::pi / 2))
      throw ContractViolation("gamma_margin must lie in (0, pi/2)");
    for (int i = 0; i < 3; ++i)
      if (!(u_min[i] < u_max[i])) throw ContractViolation("u_min must be < u_max");
    if (!(reference.radius > 0.0 && reference.speed > 0.0))
      throw ContractViolation("reference radius and speed must be positive");
    if (initial_state.size() != 6) throw ContractViolation("initial state needs 6 entries");
  }

  void validate() const {
    validate_fields();
    const double limit = std::numbers::pi / 2 - gamma_margin;
    if (!(std::abs(gamma_min) < limit && std::abs(gamma_max) < limit))
      throw ContractViolation("gamma bounds must stay within pi/2 - gamma_margin");
    // g0 cos(gamma) must lie strictly inside the u_gamma range over the gamma box.
    const double cos_hi = (gamma_min <= 0.0 && gamma_max >= 0.0)
                              ? 1.0
                              : std::max(std::cos(gamma_min), std::cos(gamma_max));
    const double cos_lo = std::min(std::cos(gamma_min), std::cos(gamma_max));
    if (!(u_min[1] < gravity * cos_lo && gravity * cos_hi < u_max[1]))
      throw ContractViolation("u_gamma range must contain g0*cos(gamma) over the gamma box");
    if (!(u_min[0] < 0.0 && u_max[0] > 0.0 && u_min[2] < 0.0 && u_max[2] > 0.0))
      throw ContractViolation("u_V and u_psi ranges must contain zero");
  }
};

namespace detail {
inline void check_domain(const Vec& x) {
  if (!(x[kV] > 0.0)) throw DomainError("UAV speed must be positive");
  if (!(std::abs(x[kGamma]) < std::numbers::pi / 2))
    throw DomainError("UAV flight path angle must be within (-pi/2, pi/2)");
}
}  // namespace detail

/// Point-mass fixed-wing model with analytic Jacobians.
inline SystemModel uav_model(const UavScenario& sc) {
  const double g0 = sc.gravity;
  const double min_cos = std::sin(sc.gamma_margin);
  SystemModel model;
  model.n = 3;
  model.m = 3;
  model.f_r = [](const Vec& x) {
    detail::check_domain(x);
    const double V = x[kV], cg = std::cos(x[kGamma]), sg = std::sin(x[kGamma]);
    const double cp = std::cos(x[kPsi]), sp = std::sin(x[kPsi]);
    return Vec((Vec(3) << V * cg * cp, V * cg * sp, V * sg).finished());
  };
  model.f_v = [g0](const Vec& x) {
    detail::check_domain(x);
    return Vec((Vec(3) << 0.0, -g0 * std::cos(x[kGamma]) / x[kV], 0.0).finished());
  };
  model.g_diag = [min_cos](const Vec& x) {
    detail::check_domain(x);
    const double cg = std::cos(x[kGamma]);
    if (cg < min_cos) throw SingularChannel(2);
    return Vec((Vec(3) << 1.0, 1.0 / x[kV], 1.0 / (x[kV] * cg)).finished());
  };
  model.f_r_jacobian = [](const Vec& x) {
    detail::check_domain(x);
    const double V = x[kV], cg = std::cos(x[kGamma]), sg = std::sin(x[kGamma]);
    const double cp = std::cos(x[kPsi]), sp = std::sin(x[kPsi]);
    Mat J = Mat::Zero(3, 6);
    J.col(kV) << cg * cp, cg * sp, sg;
    J.col(kGamma) << -V * sg * cp, -V * sg * sp, V * cg;
    J.col(kPsi) << -V * cg * sp, V * cg * cp, 0.0;
    return J;
  };
  model.f_v_jacobian = [g0](const Vec& x) {
    detail::check_domain(x);
    const double V = x[kV], cg = std::cos(x[kGamma]), sg = std::sin(x[kGamma]);
    Mat J = Mat::Zero(3, 6);
    J(1, kV) = g0 * cg / (V * V);
    J(1, kGamma) = g0 * sg / V;
    return J;
  };
  model.g_diag_jacobian = [](const Vec& x) {
    detail::check_domain(x);
    const double V = x[kV], cg = std::cos(x[kGamma]), sg = std::sin(x[kGamma]);
    Mat J = Mat::Zero(3, 6);
    J(1, kV) = -1.0 / (V * V);
    J(2, kV) = -1.0 / (V * V * cg);
    J(2, kGamma) = sg / (V * cg * cg);
    return J;
  };
  return model;
}

/// h_obs(P) = (R + R_obs + R_min)^2 - |P - P_obs|^2.
inline RD2Constraint obstacle_constraint(const UavScenario& sc) {
  const Eigen::Vector3d center = sc.obstacle_center;
  const double rho = sc.inflated_radius();
  RD2Constraint h;
  h.value = [center, rho](const Vec& p) { return rho * rho - (p.head<3>() - center).squaredNorm(); };
  h.gradient = [center](const Vec& p) { return Vec(-2.0 * (p.head<3>() - center)); };
  h.hessian = [](const Vec&) { return Mat(-2.0 * Mat::Identity(3, 3)); };
  return h;
}

inline ConstraintSet uav_constraints(const UavScenario& sc) {
  return ConstraintSet(obstacle_constraint(sc), Eigen::Vector2d(sc.v_min, sc.gamma_min),
                       Eigen::Vector2d(sc.v_max, sc.gamma_max), sc.u_min, sc.u_max);
}

/// Gap between the UAV sphere and the obstacle sphere; negative means contact.
inline double obstacle_distance(const UavScenario& sc, const Vec& x) {
  return (x.head<3>() - sc.obstacle_center).norm() - sc.uav_radius - sc.obstacle_radius;
}

/// Input that holds the reference circle at level flight and the current speed.
inline Eigen::Vector3d level_turn_input(const UavScenario& sc, double speed) {
  return {0.0, sc.gravity, sc.reference.direction * speed * speed / sc.reference.radius};
}

/// Tracker settings. Cost per predicted step k:
///   w_vel |P'_k - v_des_k|^2 + w_pos |P_k - p_ref_k|^2 + w_speed (V_k - V_ref)^2
///   + sum_i w_input_i (u_k,i - u_ff,i)^2
/// with v_des = p_ref' + sat(k_pos (p_ref - P)), |sat| <= max_correction.
struct TrackerConfig {
  double horizon = 0.5;
  int steps = 10;
  int iterations = 20;
  double w_vel = 1.0;
  double w_pos = 0.01;
  double w_speed = 0.5;
  Eigen::Vector3d w_input{0.05, 0.05, 0.05};
  double k_pos = 0.3;
  double max_correction = 8.0;
};

/// Single-shooting tracking controller for the circle reference.
///
/// Holds a warm start, so each simulated vehicle needs its own instance.
class NominalTracker {
 public:
  NominalTracker(UavScenario sc, TrackerConfig cfg = {})
      : sc_(std::move(sc)), cfg_(cfg), model_(uav_model(sc_)) {}

  Vec operator()(const Vec& x, double t) {
    const int N = cfg_.steps;
    const double dt = cfg_.horizon / N;
    std::vector<Eigen::Vector3d> plan(static_cast<std::size_t>(N));
    if (warm_.empty()) {
      for (int k = 0; k < N; ++k) plan[k] = clip(level_turn_input(sc_, sc_.reference.speed));
    } else {
      const int shift = std::max(0, static_cast<int>(std::lround((t - warm_time_) / dt)));
      for (int k = 0; k < N; ++k) plan[k] = warm_[std::min(k + shift, N - 1)];
    }

    const Eigen::Vector3d range = sc_.u_max - sc_.u_min;
    const Eigen::Vector3d precond = range.cwiseProduct(range) / 100.0;
    std::vector<Eigen::Vector3d> grad(plan.size());
    double cost = rollout_cost(x, t, plan, &grad);
    double step = 1.0;
    for (int it = 0; it < cfg_.iterations; ++it) {
      bool accepted = false;
      for (int ls = 0; ls < 12 && !accepted; ++ls) {
        std::vector<Eigen::Vector3d> trial(plan.size());
        double decrease = 0.0;
        for (std::size_t k = 0; k < plan.size(); ++k) {
          trial[k] = clip(plan[k] - step * precond.cwiseProduct(grad[k]));
          decrease += grad[k].dot(plan[k] - trial[k]);
        }
        if (decrease <= 0.0) break;
        const double trial_cost = rollout_cost(x, t, trial, nullptr);
        if (trial_cost <= cost - 1e-4 * decrease) {
          plan = std::move(trial);
          cost = rollout_cost(x, t, plan, &grad);
          accepted = true;
          step = std::min(step * 2.0, 1e3);
        } else {
          step *= 0.5;
        }
      }
      if (!accepted) break;
    }
    warm_ = plan;
    warm_time_ = t;
    return Vec(plan.front());
  }

  const UavScenario& scenario() const { return sc_; }

 private:
  Eigen::Vector3d clip(const Eigen::Vector3d& u) const {
    return u.cwiseMax(sc_.u_min).cwiseMin(sc_.u_max);
  }

  // Desired velocity and its Jacobian with respect to position.
  void desired_velocity(const Eigen::Vector3d& p, double t, Eigen::Vector3d& v_des,
                        Eigen::Matrix3d& dv_dp) const {
    const Eigen::Vector3d e = sc_.reference.position(t) - p;
    const Eigen::Vector3d corr = cfg_.k_pos * e;
    const double norm = corr.norm();
    if (norm <= cfg_.max_correction) {
      v_des = sc_.reference.velocity(t) + corr;
      dv_dp = -cfg_.k_pos * Eigen::Matrix3d::Identity();
    } else {
      const double en = e.norm();
      const Eigen::Vector3d dir = e / en;
      v_des = sc_.reference.velocity(t) + cfg_.max_correction * dir;
      dv_dp = -(cfg_.max_correction / en) * (Eigen::Matrix3d::Identity() - dir * dir.transpose());
    }
  }

  // Euler rollout cost; fills the gradient by the adjoint recursion when requested.
  double rollout_cost(const Vec& x0, double t0, const std::vector<Eigen::Vector3d>& plan,
                      std::vector<Eigen::Vector3d>* grad) const {
    const int N = cfg_.steps;
    const double dt = cfg_.horizon / N;
    std::vector<Vec> xs(static_cast<std::size_t>(N + 1));
    xs[0] = x0;
    double cost = 0.0;
    const Eigen::Vector3d u_ff = clip(level_turn_input(sc_, sc_.reference.speed));
    for (int k = 0; k < N; ++k) {
      Vec xk = xs[k];
      xk[kV] = std::max(xk[kV], 0.1 * sc_.v_min);
      xk[kGamma] = std::clamp(xk[kGamma], -1.4, 1.4);
      xs[k + 1] = xk + dt * eval_dynamics(model_, xk, Vec(plan[k]));
      const Eigen::Vector3d du = plan[k] - u_ff;
      cost += du.dot(cfg_.w_input.cwiseProduct(du));
    }
    std::vector<Vec> stage_grad(static_cast<std::size_t>(N + 1), Vec::Zero(6));
    for (int k = 1; k <= N; ++k) {
      Vec xk = xs[k];
      xk[kV] = std::max(xk[kV], 0.1 * sc_.v_min);
      xk[kGamma] = std::clamp(xk[kGamma], -1.4, 1.4);
      xs[k] = xk;
      const double tk = t0 + k * dt;
      const Eigen::Vector3d p = xk.head<3>();
      Eigen::Vector3d v_des;
      Eigen::Matrix3d dv_dp;
      desired_velocity(p, tk, v_des, dv_dp);
      const Eigen::Vector3d pdot = model_.f_r(xk);
      const Eigen::Vector3d ev = pdot - v_des;
      const Eigen::Vector3d ep = p - sc_.reference.position(tk);
      const double es = xk[kV] - sc_.reference.speed;
      cost += cfg_.w_vel * ev.squaredNorm() + cfg_.w_pos * ep.squaredNorm() +
              cfg_.w_speed * es * es;
      if (grad) {
        const Mat jr = model_.f_r_jacobian(xk);
        Vec gk = 2.0 * cfg_.w_vel * (jr.transpose() * ev);
        gk.head<3>() += 2.0 * cfg_.w_vel * (-dv_dp.transpose() * ev) + 2.0 * cfg_.w_pos * ep;
        gk[kV] += 2.0 * cfg_.w_speed * es;
        stage_grad[k] = gk;
      }
    }
    if (grad) {
      grad->assign(static_cast<std::size_t>(N), Eigen::Vector3d::Zero());
      Vec lambda = stage_grad[N];
      for (int k = N - 1; k >= 0; --k) {
        const Vec& xk = xs[k];
        const Vec g = model_.g_diag(xk);
        const Eigen::Vector3d du = plan[k] - u_ff;
        (*grad)[k] = 2.0 * cfg_.w_input.cwiseProduct(du) +
                     dt * g.cwiseProduct(lambda.tail(3));
        Mat jx(6, 6);
        jx.topRows(3) = model_.f_r_jacobian(xk);
        jx.bottomRows(3) = model_.f_v_jacobian(xk) +
                           Vec(plan[k]).asDiagonal() * model_.g_diag_jacobian(xk);
        lambda = stage_grad[k] + lambda + dt * (jx.transpose() * lambda);
      }
    }
    return cost;
  }

  UavScenario sc_;
  TrackerConfig cfg_;
  SystemModel model_;
  std::vector<Eigen::Vector3d> warm_;
  double warm_time_ = 0.0;
};

}  // namespace rdcbf::uav
