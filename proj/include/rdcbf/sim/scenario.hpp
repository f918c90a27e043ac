#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rdcbf/sim/config.hpp"

namespace rdcbf::sim {

using NominalController = std::function<Vec(const Vec&, double)>;

/// Everything a simulation needs, wired from a configuration.
struct Scenario {
  SystemModel model;
  ConstraintSet constraints;
  EvadingConfig evading;
  ZcbfConfig zcbf;
  FilterConfig filter;
  Vec initial_state;
  std::vector<std::string> state_names;
  // Builds a fresh nominal controller (controllers may carry warm-start state).
  std::function<NominalController()> make_nominal;
  // Signed clearance to the RD2 obstacle.
  std::function<double(const Vec&)> distance;
  // Uniform sample over the scenario state box.
  std::function<Vec(std::mt19937_64&)> sample_state;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Scenario uav_scenario(const UavSettings& s) {
  const uav::UavScenario sc = s.scenario;
  const uav::TrackerConfig tracker = s.tracker;
  const double span = sc.reference.radius + 60.0;
  Scenario out{uav::uav_model(sc),
               uav::uav_constraints(sc),
               {},
               {},
               {},
               sc.initial_state,
               {"px", "py", "pz", "V", "gamma", "psi"},
               [sc, tracker]() -> NominalController {
                 auto ctrl = std::make_shared<uav::NominalTracker>(sc, tracker);
                 return [ctrl](const Vec& x, double t) { return (*ctrl)(x, t); };
               },
               [sc](const Vec& x) { return uav::obstacle_distance(sc, x); },
               [sc, span](std::mt19937_64& rng) {
                 Vec x(6);
                 x[0] = uniform(rng, sc.reference.center.x() - span, sc.reference.center.x() + span);
                 x[1] = uniform(rng, sc.reference.center.y() - span, sc.reference.center.y() + span);
                 x[2] = uniform(rng, sc.reference.altitude - 60.0, sc.reference.altitude + 60.0);
                 x[3] = uniform(rng, sc.v_min, sc.v_max);
                 x[4] = uniform(rng, sc.gamma_min, sc.gamma_max);
                 x[5] = uniform(rng, -std::numbers::pi, std::numbers::pi);
                 return x;
               }};
  return out;
}

inline Scenario double_integrator_scenario(const DoubleIntegratorSettings& s) {
  SystemModel model;
  model.n = 1;
  model.m = 1;
  model.f_r = [](const Vec& x) { return Vec(x.tail(1)); };
  model.f_v = [](const Vec&) { return Vec(Vec::Zero(1)); };
  model.g_diag = [](const Vec&) { return Vec(Vec::Ones(1)); };
  model.f_r_jacobian = [](const Vec&) { return Mat((Mat(1, 2) << 0.0, 1.0).finished()); };
  model.f_v_jacobian = [](const Vec&) { return Mat(Mat::Zero(1, 2)); };
  model.g_diag_jacobian = [](const Vec&) { return Mat(Mat::Zero(1, 2)); };

  const double wall = s.wall;
  RD2Constraint h;
  h.value = [wall](const Vec& r) { return r[0] - wall; };
  h.gradient = [](const Vec&) { return Vec(Vec::Ones(1)); };
  h.hessian = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };

  Vec v_min(0), v_max(0);
  if (s.v_bounds) {
    v_min = Vec::Constant(1, s.v_bounds->first);
    v_max = Vec::Constant(1, s.v_bounds->second);
  }
  ConstraintSet cons(h, v_min, v_max, Vec::Constant(1, s.u_bounds.first),
                     Vec::Constant(1, s.u_bounds.second));

  const double v_lo = s.v_bounds ? s.v_bounds->first : -3.0;
  const double v_hi = s.v_bounds ? s.v_bounds->second : 3.0;
  Scenario out{std::move(model),
               std::move(cons),
               {},
               {},
               {},
               s.initial_state,
               {"r", "v"},
               [s]() -> NominalController {
                 return [s](const Vec& x, double) {
                   const double u = s.kp * (s.target - x[0]) - s.kd * x[1];
                   return Vec(Vec::Constant(1, std::clamp(u, s.u_bounds.first, s.u_bounds.second)));
                 };
               },
               [wall](const Vec& x) { return wall - x[0]; },
               [wall, v_lo, v_hi](std::mt19937_64& rng) {
                 Vec x(2);
                 x[0] = uniform(rng, wall - 10.0, wall);
                 x[1] = uniform(rng, v_lo, v_hi);
                 return x;
               }};
  return out;
}

}  // namespace detail

/// Draw `count` states from the scenario box.
inline std::vector<Vec> sample_states(const Scenario& sc, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sc.sample_state(rng));
  return out;
}

/// Model, constraints and solver settings without the sample-based evading defaults.
inline Scenario build_scenario_skeleton(const SimConfig& cfg) {
  Scenario sc = std::visit(
      [](const auto& s) -> Scenario {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UavSettings>) return detail::uav_scenario(s);
        else return detail::double_integrator_scenario(s);
      },
      cfg.scenario);
  sc.zcbf = cfg.zcbf;
  const int m = sc.model.m;
  FilterConfig fc = FilterConfig::defaults(m);
  if (cfg.filter.R1) fc.R1 = *cfg.filter.R1;
  if (cfg.filter.R2) fc.R2 = *cfg.filter.R2;
  fc.alpha_gain = cfg.filter.alpha_gain;
  fc.dt = cfg.filter.dt.value_or(cfg.sim.controller_period);
  fc.rd1_shrink = cfg.filter.rd1_shrink;
  fc.feasibility_tol = cfg.filter.feasibility_tol;
  fc.membership_tol = cfg.filter.membership_tol;
  fc.disable_solver = cfg.filter.disable_solver;
  sc.filter = fc;
  return sc;
}

/// Evading gains from the config, with missing entries filled from a state sample.
inline EvadingConfig resolve_evading(const Scenario& sc, const EvadingSettings& es,
                                     std::uint64_t seed) {
  const bool complete = es.epsilon && es.gain && (sc.constraints.c() == 0 || (es.k1 && es.k2 && es.k3));
  EvadingConfig cfg;
  if (!complete) {
    const std::vector<Vec> samples = sample_states(sc, 2000, seed);
    cfg = default_evading_config(sc.model, sc.constraints, samples, es.gain_scale);
  }
  if (es.epsilon) cfg.epsilon = *es.epsilon;
  if (es.gain) cfg.gain = *es.gain;
  if (sc.constraints.c() > 0) {
    if (es.k1) cfg.k1 = *es.k1;
    if (es.k2) cfg.k2 = *es.k2;
    if (es.k3) cfg.k3 = *es.k3;
  } else {
    cfg.k1 = cfg.k2 = cfg.k3 = Vec(0);
  }
  return cfg;
}

/// Fully wired scenario. Validation failures become ConfigError with a field path.
inline Scenario build_scenario(const SimConfig& cfg) {
  if (const auto* u = std::get_if<UavSettings>(&cfg.scenario)) {
    try {
      u->scenario.validate();
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("scenario.uav: ") + e.what());
    }
  }
  Scenario sc = [&] {
    try {
      return build_scenario_skeleton(cfg);
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("scenario: ") + e.what());
    }
  }();
  try {
    sc.evading = resolve_evading(sc, cfg.evading, cfg.seed);
    sc.evading.validate(sc.model.m, sc.constraints.c());
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("evading: ") + e.what());
  } catch (const ChannelError& e) {
    throw ConfigError(std::string("evading: default gains could not be sampled: ") + e.what());
  }
  try {
    sc.filter.validate(sc.model.m);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("filter: ") + e.what());
  }
  if (sc.initial_state.size() != sc.model.state_dim())
    throw ConfigError("scenario: initial_state has the wrong dimension");
  return sc;
}

}  // namespace rdcbf::sim
