#pragma once

#include <ostream>

#include "rdcbf/sim/scenario.hpp"
#include "rdcbf/sim/simulation.hpp"

namespace rdcbf::sim {

/// Sampled check of control authority (g), admissible-range positivity (mu, nu) and
/// smoothing-epsilon validity (4 mu nu > epsilon) over the scenario box.
struct AuditReport {
  std::size_t samples = 0;
  double epsilon = 0.0;
  Vec min_abs_g, min_mu, min_nu, min_eps_slack;
  std::vector<std::size_t> g_failures, mu_failures, nu_failures, eps_failures;
  std::size_t domain_failures = 0;

  bool pass() const {
    auto none = [](const std::vector<std::size_t>& v) {
      for (auto e : v)
        if (e) return false;
      return true;
    };
    return domain_failures == 0 && none(g_failures) && none(mu_failures) && none(nu_failures) &&
           none(eps_failures) && (min_abs_g.array() > 0.0).all() && (min_mu.array() > 0.0).all() &&
           (min_nu.array() > 0.0).all() && (min_eps_slack.array() > 0.0).all();
  }
};

inline AuditReport audit_assumptions(const SimConfig& cfg, std::size_t sample_count) {
  if (sample_count < 1) throw ContractViolation("audit needs at least one sample");
  const Scenario sc = build_scenario_skeleton(cfg);
  const SystemModel& model = sc.model;
  const int m = model.m;
  const std::vector<Vec> states = sample_states(sc, sample_count, cfg.seed);

  AuditReport rep;
  rep.samples = sample_count;
  const double inf = std::numeric_limits<double>::infinity();
  rep.min_abs_g = Vec::Constant(m, inf);
  rep.min_mu = Vec::Constant(m, inf);
  rep.min_nu = Vec::Constant(m, inf);
  rep.min_eps_slack = Vec::Constant(m, inf);
  rep.g_failures.assign(m, 0);
  rep.mu_failures.assign(m, 0);
  rep.nu_failures.assign(m, 0);
  rep.eps_failures.assign(m, 0);

  std::vector<InputRange> ranges(states.size());
  std::vector<bool> ok(states.size(), false);
  double min_bound = inf;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const Vec& x = states[s];
    try {
      const Vec g = model.g_diag(x);
      for (int i = 0; i < m; ++i) {
        rep.min_abs_g[i] = std::min(rep.min_abs_g[i], std::abs(g[i]));
        if (!(std::abs(g[i]) >= model.singularity_tol)) ++rep.g_failures[i];
      }
      ranges[s] = input_range_unchecked(model, sc.constraints, x);
      ok[s] = true;
      for (int i = 0; i < m; ++i) {
        const double mu = ranges[s].mu[i], nu = ranges[s].nu[i];
        rep.min_mu[i] = std::min(rep.min_mu[i], mu);
        rep.min_nu[i] = std::min(rep.min_nu[i], nu);
        if (!(mu > 0.0)) ++rep.mu_failures[i];
        if (!(nu > 0.0)) ++rep.nu_failures[i];
        if (mu > 0.0 && nu > 0.0) min_bound = std::min(min_bound, 4.0 * mu * nu);
      }
    } catch (const SingularChannel& e) {
      ++rep.g_failures[e.channel()];
      rep.min_abs_g[e.channel()] = 0.0;
    } catch (const DomainError&) {
      ++rep.domain_failures;
    }
  }

  if (cfg.evading.epsilon) {
    rep.epsilon = *cfg.evading.epsilon;
  } else {
    try {
      rep.epsilon = resolve_evading(sc, cfg.evading, cfg.seed).epsilon;
    } catch (const Error&) {
      rep.epsilon = std::isfinite(min_bound) ? 1e-4 * min_bound : 0.0;
    }
  }
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (!ok[s]) continue;
    for (int i = 0; i < m; ++i) {
      const double slack = 4.0 * ranges[s].mu[i] * ranges[s].nu[i] - rep.epsilon;
      rep.min_eps_slack[i] = std::min(rep.min_eps_slack[i], slack);
      if (!(slack > 0.0)) ++rep.eps_failures[i];
    }
  }
  return rep;
}

inline void print_audit(std::ostream& os, const AuditReport& rep) {
  os << "samples=" << rep.samples << '\n' << "epsilon=" << format_double(rep.epsilon) << '\n';
  for (Eigen::Index i = 0; i < rep.min_abs_g.size(); ++i) {
    os << "channel " << i << ": min|g|=" << format_double(rep.min_abs_g[i])
       << " min_mu=" << format_double(rep.min_mu[i]) << " min_nu=" << format_double(rep.min_nu[i])
       << " min(4*mu*nu-eps)=" << format_double(rep.min_eps_slack[i])
       << " failures[g,mu,nu,eps]=" << rep.g_failures[i] << ',' << rep.mu_failures[i] << ','
       << rep.nu_failures[i] << ',' << rep.eps_failures[i] << '\n';
  }
  os << "domain_failures=" << rep.domain_failures << '\n';
  os << "result=" << (rep.pass() ? "pass" : "fail") << '\n';
}

}  // namespace rdcbf::sim
