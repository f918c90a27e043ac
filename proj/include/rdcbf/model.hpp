#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "rdcbf/errors.hpp"
#include "rdcbf/numeric.hpp"

namespace rdcbf {

/// Second-order control-affine system
///
///   r' = f_r(x)
///   v' = f_v(x) + diag(g_diag(x)) u,      x = [r; v],  dim r = n,  dim v = dim u = m.
///
/// The Jacobian hooks are optional; when empty the central-difference fallback is used.
struct SystemModel {
  using VecMap = std::function<Vec(const Vec&)>;
  using MatMap = std::function<Mat(const Vec&)>;

  int n = 0;
  int m = 0;
  VecMap f_r;
  VecMap f_v;
  VecMap g_diag;
  MatMap f_r_jacobian;     // n x (n+m)
  MatMap f_v_jacobian;     // m x (n+m)
  MatMap g_diag_jacobian;  // m x (n+m)
  double singularity_tol = 1e-9;

  int state_dim() const { return n + m; }

  void check_state(const Vec& x) const {
    if (x.size() != state_dim())
      throw ContractViolation("state has dimension " + std::to_string(x.size()) + ", expected " +
                              std::to_string(state_dim()));
  }
  void check_input(const Vec& u) const {
    if (u.size() != m)
      throw ContractViolation("input has dimension " + std::to_string(u.size()) + ", expected " +
                              std::to_string(m));
  }

  Vec positions(const Vec& x) const { return x.head(n); }
  Vec velocities(const Vec& x) const { return x.tail(m); }

  // Diagonal input gains, with the control-authority check applied to every channel.
  Vec input_gain(const Vec& x) const {
    Vec g = g_diag(x);
    for (int i = 0; i < m; ++i)
      if (!(std::abs(g[i]) >= singularity_tol)) throw SingularChannel(i);
    return g;
  }

  // Drift [f_r; f_v].
  Vec drift(const Vec& x) const {
    Vec f(state_dim());
    f.head(n) = f_r(x);
    f.tail(m) = f_v(x);
    return f;
  }

  Mat jacobian_f_r(const Vec& x) const {
    return f_r_jacobian ? f_r_jacobian(x) : numeric_jacobian(f_r, x);
  }
  Mat jacobian_f_v(const Vec& x) const {
    return f_v_jacobian ? f_v_jacobian(x) : numeric_jacobian(f_v, x);
  }
  Mat jacobian_g(const Vec& x) const {
    return g_diag_jacobian ? g_diag_jacobian(x) : numeric_jacobian(g_diag, x);
  }
};

/// Relative-degree-two constraint h_r(r) <= 0 on the position block.
struct RD2Constraint {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional
  std::function<Mat(const Vec&)> hessian;   // optional

  double operator()(const Vec& r) const { return value(r); }
  Vec grad(const Vec& r) const { return gradient ? gradient(r) : numeric_gradient(value, r); }
  Mat hess(const Vec& r) const {
    if (hessian) return hessian(r);
    return numeric_jacobian([this](const Vec& p) { return grad(p); }, r);
  }
};

/// The RD2 constraint, box bounds on the first c velocity channels, and the input box.
class ConstraintSet {
 public:
  ConstraintSet(RD2Constraint h_r, Vec v_min, Vec v_max, Vec u_min, Vec u_max)
      : h_r_(std::move(h_r)),
        v_min_(std::move(v_min)),
        v_max_(std::move(v_max)),
        u_min_(std::move(u_min)),
        u_max_(std::move(u_max)) {
    if (!h_r_.value) throw ContractViolation("RD2 constraint has no value function");
    if (v_min_.size() != v_max_.size())
      throw ContractViolation("v_min and v_max have different lengths");
    if (u_min_.size() != u_max_.size())
      throw ContractViolation("u_min and u_max have different lengths");
    if (v_min_.size() > u_min_.size())
      throw ContractViolation("more RD1 bounds than input channels");
    for (Eigen::Index i = 0; i < v_min_.size(); ++i)
      if (!(v_min_[i] < v_max_[i]))
        throw ContractViolation("v_min must be < v_max on channel " + std::to_string(i));
    for (Eigen::Index i = 0; i < u_min_.size(); ++i)
      if (!(u_min_[i] < u_max_[i]))
        throw ContractViolation("u_min must be < u_max on channel " + std::to_string(i));
  }

  const RD2Constraint& h_r() const { return h_r_; }
  int c() const { return static_cast<int>(v_min_.size()); }
  int m() const { return static_cast<int>(u_min_.size()); }
  const Vec& v_min() const { return v_min_; }
  const Vec& v_max() const { return v_max_; }
  const Vec& u_min() const { return u_min_; }
  const Vec& u_max() const { return u_max_; }
  double v_half_width(int i) const { return 0.5 * (v_max_[i] - v_min_[i]); }
  double v_center(int i) const { return 0.5 * (v_max_[i] + v_min_[i]); }

  bool input_admissible(const Vec& u, double tol = 0.0) const {
    return ((u - u_min_).array() >= -tol).all() && ((u_max_ - u).array() >= -tol).all();
  }

  // Same constraints with the RD1 bounds dropped.
  ConstraintSet without_rd1() const { return ConstraintSet(h_r_, Vec(0), Vec(0), u_min_, u_max_); }

 private:
  RD2Constraint h_r_;
  Vec v_min_, v_max_, u_min_, u_max_;
};

inline void check_compatible(const SystemModel& model, const ConstraintSet& cons) {
  if (cons.m() != model.m)
    throw ContractViolation("constraint set has " + std::to_string(cons.m()) +
                            " input channels, model has " + std::to_string(model.m));
}

/// x' = [f_r(x); f_v(x) + g(x) u].
inline Vec eval_dynamics(const SystemModel& model, const Vec& x, const Vec& u) {
  model.check_state(x);
  model.check_input(u);
  Vec dx(model.state_dim());
  dx.head(model.n) = model.f_r(x);
  dx.tail(model.m) = model.f_v(x) + model.g_diag(x).cwiseProduct(u);
  return dx;
}

/// Drift-compensated input f_v/g_v + u, so that v_i' = g_{v_i} * modified_i.
inline Vec modified_input(const SystemModel& model, const Vec& x, const Vec& u) {
  model.check_state(x);
  model.check_input(u);
  const Vec g = model.input_gain(x);
  return model.f_v(x).cwiseQuotient(g) + u;
}

/// Admissible modified input at x is [-mu, nu].
struct InputRange {
  Vec mu;
  Vec nu;
};

// Unchecked version: returns mu, nu even when they do not straddle zero.
inline InputRange input_range_unchecked(const SystemModel& model, const ConstraintSet& cons,
                                        const Vec& x) {
  const Vec drift_ratio = model.f_v(x).cwiseQuotient(model.input_gain(x));
  return {-cons.u_min() - drift_ratio, cons.u_max() + drift_ratio};
}

inline InputRange mu_nu(const SystemModel& model, const ConstraintSet& cons, const Vec& x) {
  model.check_state(x);
  check_compatible(model, cons);
  InputRange range = input_range_unchecked(model, cons, x);
  for (int i = 0; i < model.m; ++i)
    if (!(range.mu[i] > 0.0 && range.nu[i] > 0.0))
      throw AssumptionViolation(i, range.mu[i], range.nu[i]);
  return range;
}

// Smooth under-approximation of min(mu, nu).
inline double smooth_min_cap(double mu, double nu, double epsilon) {
  const double diff = mu - nu;
  return 0.5 * (mu + nu - std::sqrt(diff * diff + epsilon));
}

/// Per-channel cap on |modified input| that keeps the original input inside the box.
inline Vec smooth_input_cap(const InputRange& range, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractViolation("smoothing epsilon must be positive");
  Vec cap(range.mu.size());
  for (Eigen::Index i = 0; i < cap.size(); ++i) {
    const double bound = 4.0 * range.mu[i] * range.nu[i];
    // A few ulps of slack: at the bound the cap is zero up to rounding.
    const double strict = bound * (1.0 - 8.0 * std::numeric_limits<double>::epsilon());
    if (!(epsilon < strict)) throw EpsilonTooLarge(static_cast<int>(i), epsilon, bound);
    cap[i] = smooth_min_cap(range.mu[i], range.nu[i], epsilon);
  }
  return cap;
}

inline Vec smooth_input_cap(const SystemModel& model, const ConstraintSet& cons, const Vec& x,
                            double epsilon) {
  return smooth_input_cap(mu_nu(model, cons, x), epsilon);
}

// d_i(x) given a precomputed g.
inline Vec d_coeffs(const SystemModel& model, const ConstraintSet& cons, const Vec& x,
                    const Vec& g) {
  const Vec grad_h = cons.h_r().grad(x.head(model.n));
  const Mat jac = model.jacobian_f_r(x);
  return (grad_h.transpose() * jac.rightCols(model.m)).transpose().cwiseProduct(g);
}

/// Input coefficients of the second derivative of h_r: d_i = (dh_r'/dv_i) g_{v_i}.
inline Vec d_coeffs(const SystemModel& model, const ConstraintSet& cons, const Vec& x) {
  model.check_state(x);
  return d_coeffs(model, cons, x, model.input_gain(x));
}

struct RD2Derivatives {
  double h = 0.0;
  double h_dot = 0.0;
  double h_ddot = 0.0;
};

/// h_r, its first derivative (input free) and its second derivative (affine in u).
inline RD2Derivatives rd2_derivatives(const SystemModel& model, const ConstraintSet& cons,
                                      const Vec& x, const Vec& u) {
  model.check_state(x);
  model.check_input(u);
  const int n = model.n;
  const Vec r = x.head(n);
  const Vec grad_h = cons.h_r().grad(r);
  const Mat hess_h = cons.h_r().hess(r);
  const Vec fr = model.f_r(x);
  const Mat jac_fr = model.jacobian_f_r(x);

  // d(h_r')/dx = [f_r^T H + grad^T df_r/dr,  grad^T df_r/dv]
  Eigen::RowVectorXd dhdot(model.state_dim());
  dhdot = grad_h.transpose() * jac_fr;
  dhdot.head(n) += fr.transpose() * hess_h;

  RD2Derivatives out;
  out.h = cons.h_r()(r);
  out.h_dot = grad_h.dot(fr);
  out.h_ddot = dhdot.dot(eval_dynamics(model, x, u));
  return out;
}

/// Box constraint function (v_i - center)^2 - half_width^2 for RD1 channel i (0-based).
inline double rd1_value(const ConstraintSet& cons, const Vec& v, int i) {
  if (i < 0 || i >= cons.c())
    throw ContractViolation("RD1 channel " + std::to_string(i) + " out of range [0, " +
                            std::to_string(cons.c()) + ")");
  if (v.size() <= i) throw ContractViolation("velocity vector too short for RD1 channel");
  // Factored form of (v - center)^2 - half_width^2; exactly zero on both bounds.
  return (v[i] - cons.v_min()[i]) * (v[i] - cons.v_max()[i]);
}

}  // namespace rdcbf
