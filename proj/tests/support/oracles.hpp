#pragma once

// Independent reference computations used to check the library. None of these call the
// code under test beyond model/constraint accessors.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "support/fixtures.hpp"

namespace oracles {

using rdcbf::Vec;

struct TieError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bang-bang evading law: u_i = u_min_i if d_i > 0, u_max_i if d_i < 0. d is computed here
// from the constraint gradient and a central difference of f_r in v.
inline Vec greedy_input(const rdcbf::SystemModel& model, const rdcbf::ConstraintSet& cons,
                        const Vec& x) {
  const int n = model.n;
  const Vec g = model.g_diag(x);
  const Vec grad = cons.h_r().grad(x.head(n));
  Vec u(model.m);
  for (int i = 0; i < model.m; ++i) {
    const double step = 1e-6;
    Vec xp = x, xm = x;
    xp[n + i] += step;
    xm[n + i] -= step;
    const double d = grad.dot(model.f_r(xp) - model.f_r(xm)) / (2 * step) * g[i];
    if (d == 0.0) throw TieError("greedy law undefined at d = 0 on channel " + std::to_string(i));
    u[i] = d > 0.0 ? cons.u_min()[i] : cons.u_max()[i];
  }
  return u;
}

// Brute-force barrier for the double integrator with h_r = r - wall and |u| <= u_bound,
// no velocity box: RK4 with step `dt` on r'' = cap tanh(-k), maximum over every grid point.
struct BruteForceH {
  double H;
  double t_star;
};

inline BruteForceH brute_force_wall_H(double r0, double v0, double wall, double u_bound,
                                      double k, double eps, double dt, double horizon) {
  const double cap = (2.0 * u_bound - std::sqrt(eps)) / 2.0;  // mu = nu = u_bound
  const double accel = cap * std::tanh(-k);                   // d = 1 everywhere
  double r = r0, v = v0;
  BruteForceH best{r0 - wall, 0.0};
  const long steps = std::lround(horizon / dt);
  for (long j = 1; j <= steps; ++j) {
    // RK4 on (r, v) with constant acceleration (kept explicit for independence).
    const double k1r = v, k1v = accel;
    const double k2r = v + 0.5 * dt * k1v, k2v = accel;
    const double k3r = v + 0.5 * dt * k2v, k3v = accel;
    const double k4r = v + dt * k3v, k4v = accel;
    r += dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
    v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (r - wall > best.H) best = {r - wall, static_cast<double>(j) * dt};
    if (v < 0.0 && r - wall < best.H - 1.0) break;
  }
  return best;
}

// Minimum of a scalar objective over [lo, hi] restricted to the set where every constraint
// function is <= 0. A dense grid locates candidates; bisection then resolves every
// feasibility boundary crossed between neighbouring grid points, and the unconstrained
// stationary point is added when the objective is a known quadratic.
struct GridResult {
  bool feasible = false;
  double u = 0.0;
  double value = 0.0;
};

inline GridResult grid_minimize(const std::function<double(double)>& objective,
                                const std::vector<std::function<double(double)>>& constraints,
                                double lo, double hi, double step, double tol,
                                std::vector<double> extra_points = {}) {
  auto feasible = [&](double u) {
    for (const auto& c : constraints)
      if (c(u) > tol) return false;
    return true;
  };
  GridResult best;
  auto consider = [&](double u) {
    if (u < lo || u > hi || !feasible(u)) return;
    const double val = objective(u);
    if (!best.feasible || val < best.value) best = {true, u, val};
  };
  const long count = std::lround((hi - lo) / step);
  double prev_u = lo;
  bool prev_ok = feasible(lo);
  consider(lo);
  for (long j = 1; j <= count; ++j) {
    const double u = j == count ? hi : lo + static_cast<double>(j) * step;
    const bool ok = feasible(u);
    consider(u);
    if (ok != prev_ok) {
      double a = prev_u, b = u;  // feasibility flips inside [a, b]
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        if (feasible(mid) == prev_ok) a = mid;
        else b = mid;
      }
      consider(prev_ok ? a : b);
    }
    prev_u = u;
    prev_ok = ok;
  }
  for (double u : extra_points) consider(u);
  return best;
}

}  // namespace oracles
