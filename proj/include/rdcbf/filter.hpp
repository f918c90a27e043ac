#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

#include "rdcbf/box_qp.hpp"
#include "rdcbf/zcbf.hpp"

namespace rdcbf {

/// Weights and settings of the one-step safety filter.
struct FilterConfig {
  Mat R1;                   // positive definite
  Mat R2;                   // positive semidefinite
  double alpha_gain = 1.0;  // linear class-K function alpha(s) = alpha_gain * s
  double dt = 0.05;         // Euler step of the constraint model
  double feasibility_tol = 1e-9;
  double membership_tol = 1e-9;
  // Fraction of the box half-width enforced on the next-step velocity bound.
  double rd1_shrink = 0.98;
  // Forces the solver to report failure (exercises the evading-maneuver fallback).
  bool disable_solver = false;

  static FilterConfig defaults(int m) {
    FilterConfig fc;
    fc.R1 = Mat::Identity(m, m);
    fc.R2 = 0.1 * Mat::Identity(m, m);
    return fc;
  }

  void validate(int m) const {
    if (R1.rows() != m || R1.cols() != m || R2.rows() != m || R2.cols() != m)
      throw ContractViolation("filter weights must be m x m");
    if (!R1.isApprox(R1.transpose()) || !R2.isApprox(R2.transpose()))
      throw ContractViolation("filter weights must be symmetric");
    if (Eigen::LLT<Mat>(R1).info() != Eigen::Success)
      throw ContractViolation("R1 must be positive definite");
    if (m > 0 && Eigen::SelfAdjointEigenSolver<Mat>(R2).eigenvalues().minCoeff() < -1e-12)
      throw ContractViolation("R2 must be positive semidefinite");
    if (!(alpha_gain > 0.0)) throw ContractViolation("alpha gain must be positive");
    if (!(dt > 0.0)) throw ContractViolation("filter dt must be positive");
    if (!(rd1_shrink > 0.0 && rd1_shrink <= 1.0))
      throw ContractViolation("rd1_shrink must lie in (0, 1]");
  }
};

/// x + dt (f(x) + g(x) u): the constraint model of the one-step problem.
inline Vec discrete_step(const SystemModel& model, const Vec& x, const Vec& u, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("discrete_step needs dt > 0");
  return x + dt * eval_dynamics(model, x, u);
}

enum class Region { inside, boundary, outside };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::inside: return "inside";
    case Region::boundary: return "boundary";
    case Region::outside: return "outside";
  }
  return "?";
}

/// Position relative to the ultimate invariant set {H_r <= 0} ∩ RD1 boxes.
struct Membership {
  Region region = Region::outside;
  Vec margins;  // [H_r, h_v_0, ..., h_v_{c-1}]
};

inline Membership classify(const ConstraintSet& cons, int n, double H, const Vec& x, double tol) {
  Membership out;
  out.margins.resize(1 + cons.c());
  out.margins[0] = H;
  const Vec v = x.tail(x.size() - n);
  for (int i = 0; i < cons.c(); ++i) out.margins[1 + i] = rd1_value(cons, v, i);
  const double worst = out.margins.maxCoeff();
  if (worst < -tol) out.region = Region::inside;
  else if (worst <= tol) out.region = Region::boundary;
  else out.region = Region::outside;
  return out;
}

inline Membership membership(const SystemModel& model, const ConstraintSet& cons,
                             const EvadingConfig& ev_cfg, const ZcbfConfig& zc, const Vec& x,
                             double tol = 1e-9) {
  const ZcbfEvaluation ev = eval_H(model, cons, ev_cfg, zc, x);
  return classify(cons, model.n, ev.H, x, tol);
}

/// Which constraints bind at the returned input.
struct ActiveSet {
  bool zcbf = false;
  std::vector<bool> rd1;
  std::vector<bool> input;

  // bit 0: barrier; bits 1..c: RD1 channels; bits c+1..c+m: input bounds.
  std::uint64_t bitmask() const {
    std::uint64_t bits = zcbf ? 1u : 0u;
    std::size_t pos = 1;
    for (bool b : rd1) bits |= (b ? std::uint64_t{1} : 0u) << pos++;
    for (bool b : input) bits |= (b ? std::uint64_t{1} : 0u) << pos++;
    return bits;
  }
};

struct FilterResult {
  Vec u_safe;
  bool used_fallback = false;
  bool best_effort = false;  // state was outside the invariant set
  ActiveSet active;
  double objective = 0.0;
  double solve_time_us = 0.0;
  ZcbfEvaluation zcbf;
  Membership membership;
};

namespace detail {

// Interval of u_i keeping the Euler-predicted v_i within `fraction` of the box half-width.
inline std::pair<double, double> rd1_input_interval(const ConstraintSet& cons, int i, double v,
                                                    double f, double g, double dt,
                                                    double fraction) {
  const double lo_v = cons.v_center(i) - fraction * cons.v_half_width(i);
  const double hi_v = cons.v_center(i) + fraction * cons.v_half_width(i);
  double a = (lo_v - v - dt * f) / (dt * g);
  double b = (hi_v - v - dt * f) / (dt * g);
  if (a > b) std::swap(a, b);
  return {a, b};
}

inline double filter_objective(const Mat& R1, const Mat& R2, const Vec& u, const Vec& u_hat,
                               const Vec& u_prev, bool use_r2) {
  const Vec e1 = u - u_hat;
  double obj = e1.dot(R1 * e1);
  if (use_r2) {
    const Vec e2 = u - u_prev;
    obj += e2.dot(R2 * e2);
  }
  return obj;
}

inline FilterResult filter_impl(const SystemModel& model, const ConstraintSet& cons,
                                const EvadingConfig& ev_cfg, const ZcbfConfig& zc,
                                const FilterConfig& fc, const Vec& x, const Vec& u_hat,
                                const Vec& u_prev, bool use_r2) {
  const auto start = std::chrono::steady_clock::now();
  model.check_state(x);
  model.check_input(u_hat);
  model.check_input(u_prev);
  check_compatible(model, cons);
  fc.validate(model.m);
  if (!x.allFinite()) throw ContractViolation("filter state is not finite");
  if (!cons.input_admissible(u_hat, fc.feasibility_tol))
    throw ContractViolation("nominal input is outside the input box");
  if (use_r2 && !cons.input_admissible(u_prev, fc.feasibility_tol))
    throw ContractViolation("previous input is outside the input box");

  const int n = model.n;
  const int m = model.m;
  const int c = cons.c();

  FilterResult res;
  res.zcbf = eval_H_with_gradient(model, cons, ev_cfg, zc, x);
  res.membership = classify(cons, n, res.zcbf.H, x, fc.membership_tol);
  const bool outside = res.membership.region == Region::outside;

  const Vec f = model.drift(x);
  const Vec f_v = f.tail(m);
  const Vec g = model.input_gain(x);

  BoxAffineQP qp;
  qp.Q = use_r2 ? Mat(fc.R1 + fc.R2) : fc.R1;
  qp.q = use_r2 ? Vec(fc.R1 * u_hat + fc.R2 * u_prev) : Vec(fc.R1 * u_hat);
  qp.lo = cons.u_min();
  qp.hi = cons.u_max();
  qp.tol = fc.feasibility_tol;
  qp.has_affine = true;
  qp.a = res.zcbf.grad.tail(m).cwiseProduct(g);
  qp.b = fc.alpha_gain * (-res.zcbf.H) - res.zcbf.grad.dot(f);

  bool feasible = true;
  std::vector<bool> rd1_bounded(static_cast<std::size_t>(c), false);
  for (int i = 0; i < c; ++i) {
    const double v = x[n + i];
    auto [lo, hi] = rd1_input_interval(cons, i, v, f_v[i], g[i], fc.dt, fc.rd1_shrink);
    if (std::max(lo, qp.lo[i]) > std::min(hi, qp.hi[i]))
      std::tie(lo, hi) = rd1_input_interval(cons, i, v, f_v[i], g[i], fc.dt, 1.0);
    const double new_lo = std::max(lo, qp.lo[i]);
    const double new_hi = std::min(hi, qp.hi[i]);
    if (new_lo > new_hi) {
      feasible = false;
      if (outside) {
        // Least violation: the box end whose prediction lands closest to the interval.
        const double pick = (hi < qp.lo[i]) ? qp.lo[i] : qp.hi[i];
        qp.lo[i] = qp.hi[i] = pick;
        rd1_bounded[i] = true;
      }
      continue;
    }
    rd1_bounded[i] = lo > cons.u_min()[i] || hi < cons.u_max()[i];
    qp.lo[i] = new_lo;
    qp.hi[i] = new_hi;
  }
  const double reachable = min_over_box(qp.a, qp.lo, qp.hi);
  if (reachable > qp.b + fc.feasibility_tol * (1.0 + std::abs(qp.b))) {
    feasible = false;
    if (outside) qp.b = reachable;
  }

  std::optional<BoxAffineSolution> sol;
  if (!fc.disable_solver && (feasible || outside)) sol = solve_box_affine_qp(qp);

  if (sol) {
    res.u_safe = sol->u;
    res.best_effort = outside;
    res.active.zcbf = sol->affine_active;
  } else {
    // The evading maneuver satisfies every constraint inside the set.
    res.u_safe = evading_input(model, cons, ev_cfg, x);
    res.used_fallback = true;
    res.best_effort = outside;
    res.active.zcbf = std::abs(qp.a.dot(res.u_safe) - qp.b) <= 1e-7 * (1.0 + std::abs(qp.b));
  }

  const double act_tol = 1e-7;
  res.active.rd1.assign(static_cast<std::size_t>(c), false);
  for (int i = 0; i < c; ++i)
    res.active.rd1[i] = rd1_bounded[i] && (std::abs(res.u_safe[i] - qp.lo[i]) <= act_tol ||
                                          std::abs(res.u_safe[i] - qp.hi[i]) <= act_tol);
  res.active.input.assign(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i)
    res.active.input[i] = std::abs(res.u_safe[i] - cons.u_min()[i]) <= act_tol ||
                          std::abs(res.u_safe[i] - cons.u_max()[i]) <= act_tol;
  res.objective = filter_objective(fc.R1, fc.R2, res.u_safe, u_hat, u_prev, use_r2);
  res.solve_time_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace detail

/// One-step safety filter:
///
///   min ||u - u_hat||^2_R1 + ||u - u_prev||^2_R2
///   s.t. u in U,  H_r'(x, u) <= alpha (-H_r(x)),  h_{v_i}(v_{t+1}) <= 0  (i < c)
///
/// Falls back to the evading maneuver when the problem cannot be solved. Outside the
/// invariant set the violations are minimised first and the result is flagged best_effort.
inline FilterResult solve_filter(const SystemModel& model, const ConstraintSet& cons,
                                 const EvadingConfig& ev_cfg, const ZcbfConfig& zc,
                                 const FilterConfig& fc, const Vec& x, const Vec& u_hat,
                                 const Vec& u_prev) {
  return detail::filter_impl(model, cons, ev_cfg, zc, fc, x, u_hat, u_prev, true);
}

/// Barrier-only comparison filter: every channel uses the unbounded maneuver, no RD1
/// constraints, no smoothing term.
inline FilterResult baseline_filter(const SystemModel& model, const ConstraintSet& cons,
                                    const EvadingConfig& ev_cfg, const ZcbfConfig& zc,
                                    const FilterConfig& fc, const Vec& x, const Vec& u_hat) {
  return detail::filter_impl(model, cons.without_rd1(), unconstrained_variant(ev_cfg), zc, fc, x,
                             u_hat, u_hat, false);
}

}  // namespace rdcbf
