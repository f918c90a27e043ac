// Minimal use of the library without the simulation harness: a 1-D double integrator
// r'' = u driven toward a wall at r = 1 by an aggressive PD law, with the safety filter
// keeping r <= 1 and |v| <= 1 under |u| <= 1.

#include <algorithm>
#include <cstdio>

#include "rdcbf/all.hpp"

using rdcbf::Mat;
using rdcbf::Vec;

int main() {
  rdcbf::SystemModel model;
  model.n = 1;
  model.m = 1;
  model.f_r = [](const Vec& x) { return Vec(x.tail(1)); };
  model.f_v = [](const Vec&) { return Vec(Vec::Zero(1)); };
  model.g_diag = [](const Vec&) { return Vec(Vec::Ones(1)); };

  rdcbf::RD2Constraint wall;
  wall.value = [](const Vec& r) { return r[0] - 1.0; };

  const Vec one = Vec::Ones(1);
  const rdcbf::ConstraintSet cons(wall, -one, one, -one, one);

  rdcbf::EvadingConfig ev;
  ev.epsilon = 1e-4;
  ev.gain = Vec::Constant(1, 10.0);
  ev.k1 = one;
  ev.k2 = Vec::Constant(1, 2.0);
  ev.k3 = one;

  const rdcbf::ZcbfConfig zc{.horizon = 10.0, .step = 0.01, .dwell = 0.5};
  const rdcbf::FilterConfig fc = rdcbf::FilterConfig::defaults(1);

  auto nominal = [](const Vec& x) {
    return Vec(Vec::Constant(1, std::clamp(4.0 * (0.8 - x[0]) - 0.5 * x[1], -1.0, 1.0)));
  };

  Vec x(2);
  x << -2.0, 0.0;
  Vec u_prev = nominal(x);
  const double period = 0.05;
  const int substeps = 5;

  std::printf("%6s %10s %10s %8s %8s %12s %s\n", "t", "r", "v", "u_hat", "u", "H", "region");
  for (int k = 0; k <= 160; ++k) {
    const Vec u_hat = nominal(x);
    const rdcbf::FilterResult res =
        rdcbf::solve_filter(model, cons, ev, zc, fc, x, u_hat, u_prev);
    if (k % 10 == 0)
      std::printf("%6.2f %10.5f %10.5f %8.4f %8.4f %12.5g %s%s\n", k * period, x[0], x[1],
                  u_hat[0], res.u_safe[0], res.zcbf.H, rdcbf::to_string(res.membership.region),
                  res.used_fallback ? " (fallback)" : "");
    const auto field = [&](const Vec& y) { return rdcbf::eval_dynamics(model, y, res.u_safe); };
    for (int s = 0; s < substeps; ++s) x = rdcbf::rk4_step(field, x, period / substeps);
    u_prev = res.u_safe;
  }
  return 0;
}
