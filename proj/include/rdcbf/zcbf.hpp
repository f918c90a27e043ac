#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "rdcbf/evading.hpp"

namespace rdcbf {

/// Numerical horizon and integration settings for the rollout-defined barrier.
struct ZcbfConfig {
  double horizon = 15.0;  // T_max
  double step = 0.01;     // fixed RK4 step
  // Rollout stops once h_r has decreased for this long and h_r' < 0.
  double dwell = 1.0;
  // Two maxima within this relative distance of H count as a maximizer switch.
  double switch_rel_tol = 1e-6;
  // Gradients below this norm are flagged.
  double small_gradient = 1e-8;

  void validate() const {
    if (!(horizon > 0.0)) throw ContractViolation("zcbf horizon must be positive");
    if (!(step > 0.0)) throw ContractViolation("zcbf step must be positive");
    if (!(step <= horizon)) throw ContractViolation("zcbf step must not exceed the horizon");
    if (!(dwell >= 0.0)) throw ContractViolation("zcbf dwell must be non-negative");
  }
};

/// Samples of the evading flow started at x.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> states;
  std::vector<double> h;
  bool stopped_early = false;
};

/// Result of evaluating the barrier H_r at one state.
struct ZcbfEvaluation {
  double H = 0.0;
  double t_star = 0.0;
  Vec grad;  // empty until grad_H is called
  Trajectory trajectory;
  std::size_t peak_index = 0;
  double peak_offset = 0.0;  // sub-step location of the peak, in units of step
  bool horizon_truncated = false;
  bool switching = false;
  bool small_gradient = false;
};

/// Closed-loop vector field f(y) + g(y) u*(y).
inline Vec closed_loop_field(const SystemModel& model, const ConstraintSet& cons,
                             const EvadingConfig& cfg, const Vec& y) {
  const EvadingTerms t = evading_terms(model, cons, cfg, y);
  Vec dy(model.state_dim());
  dy.head(model.n) = model.f_r(y);
  for (int i = 0; i < model.m; ++i)
    dy[model.n + i] = t.g[i] * evading_channel(cons, cfg, t, y, model.n, i);
  return dy;
}

/// Jacobian of the closed-loop field: model Jacobians plus a central difference on u*.
inline Mat closed_loop_jacobian(const SystemModel& model, const ConstraintSet& cons,
                                const EvadingConfig& cfg, const Vec& y) {
  const int n = model.n;
  const int m = model.m;
  const int dim = model.state_dim();
  const Vec g = model.input_gain(y);
  const Vec u_star = evading_input(model, cons, cfg, y);
  const Mat du = numeric_jacobian([&](const Vec& p) { return evading_input(model, cons, cfg, p); }, y);

  Mat jac(dim, dim);
  jac.topRows(n) = model.jacobian_f_r(y);
  jac.bottomRows(m) = model.jacobian_f_v(y) + u_star.asDiagonal() * model.jacobian_g(y) +
                      g.asDiagonal() * du;
  return jac;
}

namespace detail {

template <typename Fn>
auto tag_rollout_errors(double t, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ChannelError& e) {
    throw RolloutError(e.what(), t, e.channel());
  } catch (const RolloutError&) {
    throw;
  } catch (const Error& e) {
    throw RolloutError(e.what(), t, -1);
  }
}

inline std::size_t rollout_steps(const ZcbfConfig& zc) {
  return static_cast<std::size_t>(std::ceil(zc.horizon / zc.step - 1e-9));
}

}  // namespace detail

/// Integrate the evading flow from x with fixed-step RK4, recording h_r along it.
inline Trajectory rollout_flow(const SystemModel& model, const ConstraintSet& cons,
                               const EvadingConfig& cfg, const ZcbfConfig& zc, const Vec& x) {
  model.check_state(x);
  zc.validate();
  if (!x.allFinite()) throw ContractViolation("rollout start state is not finite");
  const int n = model.n;
  const auto field = [&](const Vec& y) { return closed_loop_field(model, cons, cfg, y); };
  const std::size_t steps = detail::rollout_steps(zc);

  Trajectory traj;
  traj.t.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.h.reserve(steps + 1);
  traj.t.push_back(0.0);
  traj.states.push_back(x);
  traj.h.push_back(cons.h_r()(x.head(n)));

  double decrease_start = 0.0;
  Vec y = x;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = traj.t.back();
    y = detail::tag_rollout_errors(t_prev, [&] { return rk4_step(field, y, zc.step); });
    if (!y.allFinite()) throw RolloutError("evading flow diverged", t_prev, -1);
    const double t = static_cast<double>(k) * zc.step;
    const double h = cons.h_r()(y.head(n));
    if (!(h < traj.h.back())) decrease_start = t;
    traj.t.push_back(t);
    traj.states.push_back(y);
    traj.h.push_back(h);
    if (t - decrease_start >= zc.dwell - 1e-12) {
      const double h_dot = detail::tag_rollout_errors(
          t, [&] { return cons.h_r().grad(y.head(n)).dot(model.f_r(y)); });
      if (h_dot < 0.0) {
        traj.stopped_early = true;
        break;
      }
    }
  }
  return traj;
}

namespace detail {

// Earliest grid maximum plus a three-point parabolic refinement.
inline void locate_peak(ZcbfEvaluation& ev, double step) {
  const auto& h = ev.trajectory.h;
  std::size_t k = 0;
  for (std::size_t j = 1; j < h.size(); ++j)
    if (h[j] > h[k]) k = j;
  ev.peak_index = k;
  ev.peak_offset = 0.0;
  ev.H = h[k];
  if (k > 0 && k + 1 < h.size()) {
    const double curvature = h[k - 1] - 2.0 * h[k] + h[k + 1];
    if (curvature < 0.0) {
      const double s = (h[k - 1] - h[k + 1]) / (2.0 * curvature);
      const double diff = h[k + 1] - h[k - 1];
      ev.peak_offset = s;
      ev.H = h[k] - diff * diff / (8.0 * curvature);
    }
  }
  ev.t_star = ev.trajectory.t[k] + ev.peak_offset * step;
  ev.horizon_truncated = !ev.trajectory.stopped_early && k + 1 == h.size() && k > 0;
}

// A second local maximum, separated from the first by a dip, with nearly the same value.
inline bool detect_switching(const std::vector<double>& h, std::size_t k, double H, double rel) {
  const double tol = rel * std::max(1.0, std::abs(H));
  const double level = H - tol;
  const std::size_t last = h.size() - 1;
  auto is_local_max = [&](std::size_t j) {
    const bool left = j == 0 || h[j] >= h[j - 1];
    const bool right = j == last || h[j] >= h[j + 1];
    return left && right;
  };
  double dip = h[k];
  for (std::size_t j = k + 1; j <= last; ++j) {
    dip = std::min(dip, h[j]);
    if (j > k + 1 && dip < level && h[j] >= level && is_local_max(j)) return true;
  }
  dip = h[k];
  for (std::size_t j = k; j-- > 0;) {
    dip = std::min(dip, h[j]);
    if (j + 1 < k && dip < level && h[j] >= level && is_local_max(j)) return true;
  }
  return false;
}

}  // namespace detail

/// H_r(x) = sup_t h_r along the evading flow, with its (earliest) maximiser time.
inline ZcbfEvaluation eval_H(const SystemModel& model, const ConstraintSet& cons,
                             const EvadingConfig& cfg, const ZcbfConfig& zc, const Vec& x) {
  ZcbfEvaluation ev;
  ev.trajectory = rollout_flow(model, cons, cfg, zc, x);
  detail::locate_peak(ev, zc.step);
  ev.switching = detail::detect_switching(ev.trajectory.h, ev.peak_index, ev.H, zc.switch_rel_tol);
  return ev;
}

/// Fills ev.grad with dH/dx via the variational equation Phi' = J_cl Phi, Phi(0) = I.
///
/// The sensitivity row grad h_r(r(t))^T Phi_r(t) is interpolated at the refined peak with
/// the same three samples eval_H used, so the result is the derivative of the value
/// eval_H reports.
inline const Vec& grad_H(const SystemModel& model, const ConstraintSet& cons,
                         const EvadingConfig& cfg, const ZcbfConfig& zc, const Vec& x,
                         ZcbfEvaluation& ev) {
  const int n = model.n;
  const int dim = model.state_dim();
  const std::size_t k = ev.peak_index;
  const bool refined = ev.peak_offset != 0.0;
  const std::size_t last = refined ? k + 1 : k;

  auto sensitivity_row = [&](const Vec& y, const Mat& phi) -> Vec {
    return (cons.h_r().grad(y.head(n)).transpose() * phi.topRows(n)).transpose();
  };

  std::vector<Vec> rows;
  Vec y = x;
  Mat phi = Mat::Identity(dim, dim);
  const std::size_t first_kept = refined ? k - 1 : k;
  if (first_kept == 0) rows.push_back(sensitivity_row(y, phi));

  const auto field = [&](const Vec& s) { return closed_loop_field(model, cons, cfg, s); };
  const auto jac = [&](const Vec& s) { return closed_loop_jacobian(model, cons, cfg, s); };
  const double h = zc.step;
  for (std::size_t j = 1; j <= last; ++j) {
    const double t_prev = ev.trajectory.t[j - 1];
    detail::tag_rollout_errors(t_prev, [&] {
      const Vec k1 = field(y);
      const Mat p1 = jac(y) * phi;
      const Vec y2 = y + 0.5 * h * k1;
      const Vec k2 = field(y2);
      const Mat p2 = jac(y2) * (phi + 0.5 * h * p1);
      const Vec y3 = y + 0.5 * h * k2;
      const Vec k3 = field(y3);
      const Mat p3 = jac(y3) * (phi + 0.5 * h * p2);
      const Vec y4 = y + h * k3;
      const Vec k4 = field(y4);
      const Mat p4 = jac(y4) * (phi + h * p3);
      y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      phi = phi + (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
      return 0;
    });
    if (j >= first_kept) rows.push_back(sensitivity_row(y, phi));
  }

  if (refined) {
    const double s = ev.peak_offset;
    ev.grad = 0.5 * s * (s - 1.0) * rows[0] + (1.0 - s * s) * rows[1] + 0.5 * s * (s + 1.0) * rows[2];
  } else {
    ev.grad = rows.back();
  }
  ev.small_gradient = !(ev.grad.norm() >= zc.small_gradient);
  return ev.grad;
}

/// eval_H followed by grad_H.
inline ZcbfEvaluation eval_H_with_gradient(const SystemModel& model, const ConstraintSet& cons,
                                           const EvadingConfig& cfg, const ZcbfConfig& zc,
                                           const Vec& x) {
  ZcbfEvaluation ev = eval_H(model, cons, cfg, zc, x);
  grad_H(model, cons, cfg, zc, x, ev);
  return ev;
}

/// H_r'(x, u) = grad_H^T (f(x) + g(x) u).
inline double H_dot(const SystemModel& model, const ZcbfEvaluation& ev, const Vec& x,
                    const Vec& u) {
  if (ev.grad.size() != model.state_dim())
    throw ContractViolation("H_dot needs an evaluation with a gradient");
  return ev.grad.dot(eval_dynamics(model, x, u));
}

/// alpha * (-H) - H', non-negative iff the barrier condition holds with linear alpha.
inline double zcbf_margin(const SystemModel& model, const ZcbfEvaluation& ev, const Vec& x,
                          const Vec& u, double alpha_gain) {
  if (!(alpha_gain > 0.0)) throw ContractViolation("alpha gain must be positive");
  return alpha_gain * (-ev.H) - H_dot(model, ev, x, u);
}

}  // namespace rdcbf
