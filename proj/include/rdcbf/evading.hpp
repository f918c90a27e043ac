#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "rdcbf/model.hpp"

namespace rdcbf {

/// Gains of the smooth evading maneuver.
///
/// `gain` has one entry per input channel and is used for the channels without a box
/// bound (index >= c). `k1`, `k2`, `k3` have one entry per bounded channel.
struct EvadingConfig {
  double epsilon = 1e-4;
  Vec gain;
  Vec k1, k2, k3;

  void validate(int m, int c) const {
    if (!(epsilon > 0.0)) throw ContractViolation("evading epsilon must be positive");
    if (gain.size() != m) throw ContractViolation("evading gain needs one entry per input");
    if (k1.size() != c || k2.size() != c || k3.size() != c)
      throw ContractViolation("evading k1/k2/k3 need one entry per RD1 channel");
    auto positive = [](const Vec& v) { return (v.array() > 0.0).all(); };
    if (!positive(gain) || !positive(k1) || !positive(k2) || !positive(k3))
      throw ContractViolation("evading gains must be strictly positive");
  }
};

// cap * tanh(-k d)
inline double unconstrained_law(double cap, double k, double d) { return cap * std::tanh(-k * d); }

// cap * tanh(-k1 g) * tanh(k2 (v - (half tanh(-k3 g d) + center)))
inline double constrained_law(double cap, double k1, double k2, double k3, double g, double d,
                              double v, double center, double half) {
  const double target_offset = half * std::tanh(-k3 * g * d);
  return cap * std::tanh(-k1 * g) * std::tanh(k2 * ((v - center) - target_offset));
}

/// Everything the maneuver needs at one state, evaluated once.
struct EvadingTerms {
  Vec f_v;
  Vec g;
  InputRange range;
  Vec cap;
  Vec d;
};

inline EvadingTerms evading_terms(const SystemModel& model, const ConstraintSet& cons,
                                  const EvadingConfig& cfg, const Vec& x) {
  model.check_state(x);
  check_compatible(model, cons);
  EvadingTerms t;
  t.f_v = model.f_v(x);
  t.g = model.input_gain(x);
  const Vec ratio = t.f_v.cwiseQuotient(t.g);
  t.range = {-cons.u_min() - ratio, cons.u_max() + ratio};
  for (int i = 0; i < model.m; ++i)
    if (!(t.range.mu[i] > 0.0 && t.range.nu[i] > 0.0))
      throw AssumptionViolation(i, t.range.mu[i], t.range.nu[i]);
  t.cap = smooth_input_cap(t.range, cfg.epsilon);
  t.d = d_coeffs(model, cons, x, t.g);
  return t;
}

inline double evading_channel(const ConstraintSet& cons, const EvadingConfig& cfg,
                              const EvadingTerms& t, const Vec& x, int n, int i) {
  if (i >= cons.c()) return unconstrained_law(t.cap[i], cfg.gain[i], t.d[i]);
  return constrained_law(t.cap[i], cfg.k1[i], cfg.k2[i], cfg.k3[i], t.g[i], t.d[i], x[n + i],
                         cons.v_center(i), cons.v_half_width(i));
}

/// Modified-input maneuver for an unbounded channel i (c <= i < m).
inline double evade_unconstrained(const SystemModel& model, const ConstraintSet& cons,
                                  const EvadingConfig& cfg, const Vec& x, int i) {
  if (i < cons.c() || i >= model.m)
    throw ContractViolation("evade_unconstrained needs an unbounded channel");
  const EvadingTerms t = evading_terms(model, cons, cfg, x);
  return unconstrained_law(t.cap[i], cfg.gain[i], t.d[i]);
}

/// Modified-input maneuver for a box-bounded channel i (0 <= i < c).
inline double evade_constrained(const SystemModel& model, const ConstraintSet& cons,
                                const EvadingConfig& cfg, const Vec& x, int i) {
  if (i < 0 || i >= cons.c()) throw ContractViolation("evade_constrained needs an RD1 channel");
  const EvadingTerms t = evading_terms(model, cons, cfg, x);
  return evading_channel(cons, cfg, t, x, model.n, i);
}

inline Vec evading_modified_input(const SystemModel& model, const ConstraintSet& cons,
                                  const EvadingConfig& cfg, const Vec& x) {
  const EvadingTerms t = evading_terms(model, cons, cfg, x);
  Vec out(model.m);
  for (int i = 0; i < model.m; ++i) out[i] = evading_channel(cons, cfg, t, x, model.n, i);
  return out;
}

/// The evading maneuver u*(x) in original input coordinates. Always strictly inside the box.
inline Vec evading_input(const SystemModel& model, const ConstraintSet& cons,
                         const EvadingConfig& cfg, const Vec& x) {
  const EvadingTerms t = evading_terms(model, cons, cfg, x);
  Vec u(model.m);
  for (int i = 0; i < model.m; ++i)
    u[i] = evading_channel(cons, cfg, t, x, model.n, i) - t.f_v[i] / t.g[i];
  return u;
}

/// Rate of the RD1 constraint function of channel i under u*: 2 (v_i - center) g_i u~*_i.
inline double boundary_decay(const SystemModel& model, const ConstraintSet& cons,
                             const EvadingConfig& cfg, const Vec& x, int i) {
  if (i < 0 || i >= cons.c()) throw ContractViolation("boundary_decay needs an RD1 channel");
  const EvadingTerms t = evading_terms(model, cons, cfg, x);
  const double u_mod = evading_channel(cons, cfg, t, x, model.n, i);
  return 2.0 * (x[model.n + i] - cons.v_center(i)) * t.g[i] * u_mod;
}

namespace detail {
inline double median_abs(std::vector<double> v) {
  for (double& e : v) e = std::abs(e);
  std::erase_if(v, [](double e) { return !(e > 0.0) || !std::isfinite(e); });
  if (v.empty()) return 1.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}
}  // namespace detail

/// Gains normalised so that each tanh argument is of order `scale` over a state sample,
/// and epsilon = 1e-4 * min 4 mu nu over the same sample.
inline EvadingConfig default_evading_config(const SystemModel& model, const ConstraintSet& cons,
                                            std::span<const Vec> samples, double scale = 1.0) {
  if (samples.empty()) throw ContractViolation("default gains need at least one sample state");
  const int m = model.m;
  const int c = cons.c();
  std::vector<std::vector<double>> d(m), g(m), gd(m);
  double min_bound = std::numeric_limits<double>::infinity();
  for (const Vec& x : samples) {
    const Vec gx = model.input_gain(x);
    const InputRange range = mu_nu(model, cons, x);
    const Vec dx = d_coeffs(model, cons, x, gx);
    for (int i = 0; i < m; ++i) {
      d[i].push_back(dx[i]);
      g[i].push_back(gx[i]);
      gd[i].push_back(gx[i] * dx[i]);
      min_bound = std::min(min_bound, 4.0 * range.mu[i] * range.nu[i]);
    }
  }
  EvadingConfig cfg;
  cfg.epsilon = 1e-4 * min_bound;
  cfg.gain.resize(m);
  cfg.k1.resize(c);
  cfg.k2.resize(c);
  cfg.k3.resize(c);
  for (int i = 0; i < m; ++i) cfg.gain[i] = scale / detail::median_abs(d[i]);
  for (int i = 0; i < c; ++i) {
    cfg.k1[i] = scale / detail::median_abs(g[i]);
    cfg.k2[i] = 4.0 / (cons.v_max()[i] - cons.v_min()[i]);
    cfg.k3[i] = scale / detail::median_abs(gd[i]);
  }
  return cfg;
}

/// Same maneuver with every channel treated as unbounded.
inline EvadingConfig unconstrained_variant(const EvadingConfig& cfg) {
  EvadingConfig out;
  out.epsilon = cfg.epsilon;
  out.gain = cfg.gain;
  return out;
}

}  // namespace rdcbf
