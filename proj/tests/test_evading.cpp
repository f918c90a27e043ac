#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace rdcbf;
using namespace rdcbf::uav;
using fixtures::vec;

namespace {

// 1-D system r'' = gs * u with h_r = hs * (r - 1), so d = hs * gs everywhere.
SystemModel scaled_integrator(double gs) {
  SystemModel model = fixtures::double_integrator();
  model.g_diag = [gs](const Vec&) { return Vec(Vec::Constant(1, gs)); };
  model.g_diag_jacobian = nullptr;
  return model;
}

ConstraintSet scaled_wall(double hs, std::optional<std::pair<double, double>> box = {}) {
  Vec vmin(0), vmax(0);
  if (box) {
    vmin = vec({box->first});
    vmax = vec({box->second});
  }
  return ConstraintSet(fixtures::wall(1.0, hs), vmin, vmax, vec({-1}), vec({1}));
}

RD2Constraint flat() {
  RD2Constraint h;
  h.value = [](const Vec&) { return -1.0; };
  h.gradient = [](const Vec&) { return Vec(Vec::Zero(1)); };
  return h;
}

EvadingConfig unit_gains(double k = 1.0) {
  EvadingConfig cfg;
  cfg.epsilon = 1e-14;  // cap -> min(mu, nu) = 1
  cfg.gain = vec({k});
  cfg.k1 = cfg.k2 = cfg.k3 = vec({1.0});
  return cfg;
}

EvadingConfig unbounded_gain(double k) {
  EvadingConfig cfg = unit_gains(k);
  cfg.k1 = cfg.k2 = cfg.k3 = Vec(0);
  return cfg;
}

}  // namespace

TEST(EvadeUnconstrained, ZeroCoefficientGivesZero) {
  const ConstraintSet cons(flat(), Vec(0), Vec(0), vec({-1}), vec({1}));
  EXPECT_EQ(evade_unconstrained(fixtures::double_integrator(), cons, unbounded_gain(1.0),
                                vec({0.2, 0.3}), 0),
            0.0);
}

TEST(EvadeUnconstrained, TanhValues) {
  const SystemModel model = fixtures::double_integrator();
  const double a = evade_unconstrained(model, scaled_wall(3.0), unbounded_gain(1.0), vec({0, 0}), 0);
  EXPECT_NEAR(a, std::tanh(-3.0), 1e-6);
  EXPECT_NEAR(a, -0.995055, 1e-6);
  const double b = evade_unconstrained(model, scaled_wall(-1.0), unbounded_gain(10.0), vec({0, 0}), 0);
  EXPECT_NEAR(b, std::tanh(10.0), 1e-6);
  EXPECT_GT(b, 0.99999999 - 1e-6);
}

TEST(EvadeUnconstrained, RejectsBoundedChannel) {
  EXPECT_THROW(evade_unconstrained(fixtures::double_integrator(), scaled_wall(1.0, {{-1, 1}}),
                                   unit_gains(), vec({0, 0}), 0),
               ContractViolation);
}

TEST(EvadeConstrained, CenterWithZeroCoefficientGivesZero) {
  const ConstraintSet cons(flat(), vec({10}), vec({20}), vec({-1}), vec({1}));
  EXPECT_EQ(evade_constrained(fixtures::double_integrator(), cons, unit_gains(), vec({0, 15}), 0),
            0.0);
}

TEST(EvadeConstrained, UpperBoundExample) {
  const ConstraintSet cons(flat(), vec({10}), vec({20}), vec({-1}), vec({1}));
  const double u = evade_constrained(fixtures::double_integrator(), cons, unit_gains(), vec({0, 20}), 0);
  EXPECT_NEAR(u, std::tanh(-1.0) * std::tanh(5.0), 1e-7);
  EXPECT_NEAR(u, -0.761525, 1e-6);
}

TEST(EvadeConstrained, NonPositiveAtUpperBoundForAnyD) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  std::uniform_real_distribution<double> G(0.05, 5.0);
  for (int s = 0; s < 1000; ++s) {
    const double hs = U(rng), gs = G(rng);
    EvadingConfig cfg = unit_gains();
    cfg.k1 = vec({G(rng)});
    cfg.k2 = vec({G(rng)});
    cfg.k3 = vec({G(rng)});
    const double u = evade_constrained(scaled_integrator(gs), scaled_wall(hs, {{10, 20}}), cfg,
                                       vec({U(rng), 20.0}), 0);
    ASSERT_LE(u, 0.0) << hs << ' ' << gs;
  }
}

TEST(EvadeConstrained, QuadrantSigns) {
  // At the box centre the velocity heads toward v_min when g*d > 0 and toward v_max when
  // g*d < 0; the modified input always opposes d.
  for (double gs : {-2.0, 2.0}) {
    for (double hs : {-1.5, 1.5}) {
      const double d = hs * gs;
      const double u = evade_constrained(scaled_integrator(gs), scaled_wall(hs, {{-1, 1}}),
                                         unit_gains(), vec({0.0, 0.0}), 0);
      EXPECT_LT(u * d, 0.0) << "g=" << gs << " h=" << hs;
      EXPECT_LT(gs * u * d * gs, 0.0);
      EXPECT_EQ(std::signbit(gs * u), !std::signbit(gs * d));
    }
  }
}

TEST(EvadingInput, ZeroDriftEqualsModified) {
  const SystemModel model = fixtures::double_integrator();
  const ConstraintSet cons = scaled_wall(1.0, {{-1, 1}});
  const Vec x = vec({0.3, 0.4});
  EXPECT_EQ(evading_input(model, cons, unit_gains(), x)[0],
            evading_modified_input(model, cons, unit_gains(), x)[0]);
}

TEST(EvadingInput, StrictlyInsideInputBoxOnUav) {
  const UavScenario sc = fixtures::uav_default();
  const SystemModel model = uav_model(sc);
  const ConstraintSet cons = uav_constraints(sc);
  const EvadingConfig cfg = fixtures::uav_gains();
  std::mt19937_64 rng(23);
  for (int s = 0; s < 2000; ++s) {
    const Vec x = fixtures::uav_state_near_obstacle(sc, rng, 0.0, 200.0);
    const Vec u = evading_input(model, cons, cfg, x);
    for (int i = 0; i < 3; ++i) {
      ASSERT_GT(u[i], cons.u_min()[i]);
      ASSERT_LT(u[i], cons.u_max()[i]);
    }
  }
}

TEST(EvadingInput, ContinuouslyDifferentiable) {
  // Central differences at h and h/2 agree to O(h^2): the maneuver has no kinks.
  const UavScenario sc = fixtures::uav_default();
  const SystemModel model = uav_model(sc);
  const ConstraintSet cons = uav_constraints(sc);
  const EvadingConfig cfg = fixtures::uav_gains();
  std::mt19937_64 rng(29);
  std::normal_distribution<double> N;
  for (int s = 0; s < 50; ++s) {
    const Vec x = fixtures::uav_state_near_obstacle(sc, rng, 10.0, 60.0);
    Vec dir(6);
    for (int j = 0; j < 6; ++j) dir[j] = N(rng);
    dir.head(3) *= 5.0;
    dir.tail(3) *= 0.05;
    auto diff = [&](double h) {
      return Vec((evading_input(model, cons, cfg, x + h * dir) -
                  evading_input(model, cons, cfg, x - h * dir)) / (2 * h));
    };
    const Vec d1 = diff(1e-2), d2 = diff(5e-3), d3 = diff(2.5e-3);
    const double e12 = (d1 - d2).norm(), e23 = (d2 - d3).norm();
    if (e12 < 1e-9) continue;
    EXPECT_LT(e23, 0.35 * e12) << "sample " << s;
  }
}

TEST(EvadingInput, LipschitzOverCompactRegion) {
  const UavScenario sc = fixtures::uav_default();
  const SystemModel model = uav_model(sc);
  const ConstraintSet cons = uav_constraints(sc);
  const EvadingConfig cfg = fixtures::uav_gains();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  std::vector<Vec> xs;
  for (int s = 0; s < 300; ++s) xs.push_back(fixtures::uav_state_near_obstacle(sc, rng, 10.0, 60.0));
  double L = 0.0;
  for (const Vec& x : xs) {
    const Mat J = numeric_jacobian([&](const Vec& p) { return evading_input(model, cons, cfg, p); }, x);
    L = std::max(L, J.norm());
  }
  L *= 2.0;
  for (const Vec& x : xs) {
    Vec dx(6);
    for (int j = 0; j < 6; ++j) dx[j] = 1e-3 * U(rng);
    const double change =
        (evading_input(model, cons, cfg, x + dx) - evading_input(model, cons, cfg, x)).norm();
    ASSERT_LE(change, L * dx.norm());
  }

  // The bang-bang law jumps across d = 0 and has no such bound.
  const SystemModel di = fixtures::double_integrator();
  RD2Constraint tilted;
  tilted.value = [](const Vec& r) { return r[0]; };
  const ConstraintSet cons_tilted(tilted, Vec(0), Vec(0), vec({-1}), vec({1}));
  SystemModel sign_flip = di;
  sign_flip.f_r = [](const Vec& x) { return Vec(Vec::Constant(1, x[0] * x[1])); };
  sign_flip.f_r_jacobian = nullptr;
  const Vec a = oracles::greedy_input(sign_flip, cons_tilted, vec({1e-4, 0.0}));
  const Vec b = oracles::greedy_input(sign_flip, cons_tilted, vec({-1e-4, 0.0}));
  EXPECT_GT(std::abs(a[0] - b[0]) / 2e-4, 1e3);
}

TEST(BoundaryDecay, ZeroAtCenter) {
  const ConstraintSet cons(fixtures::wall(), vec({10}), vec({20}), vec({-1}), vec({1}));
  EXPECT_EQ(boundary_decay(fixtures::double_integrator(), cons, unit_gains(), vec({0, 15}), 0), 0.0);
}

TEST(BoundaryDecay, UpperBoundExample) {
  const ConstraintSet cons(flat(), vec({10}), vec({20}), vec({-1}), vec({1}));
  const double rate = boundary_decay(fixtures::double_integrator(), cons, unit_gains(), vec({0, 20}), 0);
  EXPECT_NEAR(rate, 2.0 * 5.0 * std::tanh(-1.0) * std::tanh(5.0), 1e-6);
  EXPECT_NEAR(rate, -7.615, 1e-3);
}

TEST(BoundaryDecay, NonPositiveOnBoundaryForAllSignQuadrants) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  std::uniform_real_distribution<double> K(0.1, 5.0);
  int count = 0;
  for (int quadrant = 0; quadrant < 4; ++quadrant) {
    const Eigen::Vector2d gsign(quadrant & 1 ? -1.0 : 1.0, quadrant & 2 ? -1.0 : 1.0);
    const SystemModel model = fixtures::coupled_system(gsign);
    const ConstraintSet cons(fixtures::quadratic_bowl(), vec({-1.0, -0.5}), vec({1.0, 2.0}),
                             vec({-8, -8}), vec({8, 8}));
    EvadingConfig cfg;
    cfg.epsilon = 1e-3;
    cfg.gain = vec({1, 1});
    for (int s = 0; s < 300; ++s) {
      cfg.k1 = vec({K(rng), K(rng)});
      cfg.k2 = vec({K(rng), K(rng)});
      cfg.k3 = vec({K(rng), K(rng)});
      Vec x = vec({U(rng), U(rng), U(rng), U(rng)});
      const int i = s % 2;
      x[2 + i] = (s / 2) % 2 ? cons.v_max()[i] : cons.v_min()[i];
      x[2 + (1 - i)] = cons.v_center(1 - i) + 0.9 * cons.v_half_width(1 - i) * U(rng) / 2.0;
      ASSERT_LE(boundary_decay(model, cons, cfg, x, i), 1e-12);
      ++count;
    }
  }
  EXPECT_GE(count, 1000);
}

TEST(GreedyOracle, CaseSplitAndTie) {
  SystemModel model = fixtures::coupled_system();
  model.f_r = [](const Vec& x) { return Vec(x.tail(2)); };
  model.g_diag = [](const Vec&) { return vec({1.0, 1.0}); };
  RD2Constraint h;
  h.value = [](const Vec& r) { return r[0] - r[1]; };
  h.gradient = [](const Vec&) { return vec({1.0, -1.0}); };
  const ConstraintSet cons(h, Vec(0), Vec(0), vec({-1, -1}), vec({1, 1}));
  const Vec u = oracles::greedy_input(model, cons, vec({0, 0, 0, 0}));
  EXPECT_EQ(u[0], -1.0);
  EXPECT_EQ(u[1], 1.0);

  RD2Constraint h0;
  h0.value = [](const Vec& r) { return r[0]; };
  h0.gradient = [](const Vec&) { return vec({1.0, 0.0}); };
  const ConstraintSet cons0(h0, Vec(0), Vec(0), vec({-1, -1}), vec({1, 1}));
  EXPECT_THROW(oracles::greedy_input(model, cons0, vec({0, 0, 0, 0})), oracles::TieError);
}

TEST(GreedyOracle, SmoothLawApproachesBangBang) {
  const SystemModel model = fixtures::double_integrator();
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> D(0.1, 3.0);
  for (int s = 0; s < 200; ++s) {
    const double hs = (s % 2 ? -1.0 : 1.0) * D(rng);
    const ConstraintSet cons = scaled_wall(hs);
    EvadingConfig cfg = unbounded_gain(100.0);
    cfg.epsilon = 1e-4;
    const Vec x = vec({0.0, 0.0});
    const double smooth = evade_unconstrained(model, cons, cfg, x, 0);
    const double greedy = oracles::greedy_input(model, cons, x)[0];
    const double cap = smooth_min_cap(1.0, 1.0, cfg.epsilon);
    // |smooth - greedy| <= cap (1 - tanh(100 |d|)) + (1 - cap)
    EXPECT_LE(std::abs(smooth - greedy), cap * (1.0 - std::tanh(100.0 * std::abs(hs))) + (1.0 - cap) + 1e-15);
  }
}

TEST(EvadingFlow, VelocitiesStayInBoxes) {
  const UavScenario sc = fixtures::uav_default();
  const SystemModel model = uav_model(sc);
  const ConstraintSet cons = uav_constraints(sc);
  const EvadingConfig cfg = fixtures::uav_gains();
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int s = 0; s < 40; ++s) {
    Vec x = fixtures::uav_state_near_obstacle(sc, rng, 10.0, 100.0);
    x[3] = 12.0 + 1e-3 + (8.0 - 2e-3) * U(rng);
    x[4] = -0.3 + 1e-4 + (0.6 - 2e-4) * U(rng);
    const auto field = [&](const Vec& y) { return closed_loop_field(model, cons, cfg, y); };
    for (int k = 0; k < 1500; ++k) {
      x = rk4_step(field, x, 0.01);
      ASSERT_GE(x[3], 12.0 - 1e-9);
      ASSERT_LE(x[3], 20.0 + 1e-9);
      ASSERT_GE(x[4], -0.3 - 1e-9);
      ASSERT_LE(x[4], 0.3 + 1e-9);
    }
  }
}

TEST(DefaultGains, PositiveAndEpsilonTiedToValidityBound) {
  const UavScenario sc = fixtures::uav_default();
  const SystemModel model = uav_model(sc);
  const ConstraintSet cons = uav_constraints(sc);
  std::mt19937_64 rng(47);
  std::vector<Vec> samples;
  for (int s = 0; s < 500; ++s) samples.push_back(fixtures::uav_state_near_obstacle(sc, rng, 0.0, 150.0));
  const EvadingConfig cfg = default_evading_config(model, cons, samples);
  EXPECT_NO_THROW(cfg.validate(3, 2));
  double min_bound = 1e300;
  for (const Vec& x : samples) {
    const auto r = mu_nu(model, cons, x);
    min_bound = std::min(min_bound, (4.0 * r.mu.cwiseProduct(r.nu)).minCoeff());
  }
  EXPECT_NEAR(cfg.epsilon, 1e-4 * min_bound, 1e-12 * min_bound);
  EXPECT_NEAR(cfg.k2[0], 4.0 / 8.0, 1e-15);
  EXPECT_NEAR(cfg.k2[1], 4.0 / 0.6, 1e-12);
}

TEST(EvadingConfig, RejectsBadGains) {
  EvadingConfig cfg = unit_gains();
  EXPECT_NO_THROW(cfg.validate(1, 1));
  cfg.k2 = vec({0.0});
  EXPECT_THROW(cfg.validate(1, 1), ContractViolation);
  cfg = unit_gains();
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(1, 1), ContractViolation);
  EXPECT_THROW(unit_gains().validate(2, 1), ContractViolation);
}
