#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "rdcbf/uav.hpp"

namespace rdcbf::sim {

/// Malformed or invalid configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Mode { proposed, baseline, nominal_only };

inline Mode parse_mode(const std::string& s) {
  if (s == "proposed") return Mode::proposed;
  if (s == "baseline") return Mode::baseline;
  if (s == "nominal-only") return Mode::nominal_only;
  throw ConfigError("sim.mode: unknown mode '" + s + "' (expected proposed|baseline|nominal-only)");
}

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::proposed: return "proposed";
    case Mode::baseline: return "baseline";
    case Mode::nominal_only: return "nominal-only";
  }
  return "?";
}

/// 1-D double integrator r'' = u with a wall at r = wall (safe side r <= wall).
struct DoubleIntegratorSettings {
  double wall = 1.0;
  std::optional<std::pair<double, double>> v_bounds;
  std::pair<double, double> u_bounds{-1.0, 1.0};
  Vec initial_state = Vec::Zero(2);
  // Nominal PD controller toward `target`, clipped to the input box.
  double target = 2.0;
  double kp = 1.0;
  double kd = 1.0;
};

struct UavSettings {
  uav::UavScenario scenario;
  uav::TrackerConfig tracker;
};

// Missing entries are filled from a state sample (see default_evading_config).
struct EvadingSettings {
  std::optional<double> epsilon;
  std::optional<Vec> gain, k1, k2, k3;
  double gain_scale = 1.0;
};

struct FilterSettings {
  std::optional<Mat> R1, R2;
  double alpha_gain = 1.0;
  std::optional<double> dt;  // defaults to the controller period
  double rd1_shrink = 0.98;
  double feasibility_tol = 1e-9;
  double membership_tol = 1e-9;
  bool disable_solver = false;
};

struct SimSettings {
  double duration = 70.0;
  double plant_step = 0.01;
  double controller_period = 0.05;
  Mode mode = Mode::proposed;
};

struct OutputSettings {
  std::string log = "sim_log.csv";
  bool timing = true;  // solve-time column (wall clock, not reproducible)
};

struct SimConfig {
  std::variant<UavSettings, DoubleIntegratorSettings> scenario;
  EvadingSettings evading;
  ZcbfConfig zcbf;
  FilterSettings filter;
  SimSettings sim;
  OutputSettings output;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(sim.duration >= 0.0)) throw ConfigError("sim.duration must be >= 0");
    if (!(sim.plant_step > 0.0)) throw ConfigError("sim.plant_step must be > 0");
    if (!(sim.controller_period >= sim.plant_step))
      throw ConfigError("sim.controller_period must be >= sim.plant_step");
  }
};

namespace detail {

using nlohmann::json;

// Object reader that remembers consumed keys so unknown ones can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() = default;

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  Section sub(const std::string& key) {
    if (!has(key)) return Section(empty(), where(key));
    return Section(raw(key), where(key));
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number(key);
  }
  double number(const std::string& key) {
    if (!has(key)) throw ConfigError(where(key) + ": required field missing");
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  Vec vector(const std::string& key, std::optional<Eigen::Index> size = std::nullopt) {
    if (!has(key)) throw ConfigError(where(key) + ": required field missing");
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    if (size && out.size() != *size)
      throw ConfigError(where(key) + ": expected " + std::to_string(*size) + " entries");
    return out;
  }
  std::optional<Vec> optional_vector(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return vector(key);
  }
  // A weight given either as a diagonal (flat array) or as rows.
  std::optional<Mat> matrix(const std::string& key, Eigen::Index m) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(m))
      throw ConfigError(where(key) + ": expected " + std::to_string(m) + " entries");
    if (v[0].is_number()) return Mat(vector(key, m).asDiagonal());
    Mat out(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const json& row = v[static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(m))
        throw ConfigError(where(key) + ": expected a " + std::to_string(m) + "x" +
                          std::to_string(m) + " matrix");
      for (Eigen::Index c = 0; c < m; ++c) {
        if (!row[static_cast<std::size_t>(c)].is_number())
          throw ConfigError(where(key) + ": matrix entries must be numbers");
        out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    return out;
  }

  // Throws on keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.contains(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::pair<double, double> bounds_pair(Section& s, const std::string& key) {
  const Vec v = s.vector(key, 2);
  if (!(v[0] < v[1])) throw ConfigError(s.where(key) + ": lower bound must be < upper bound");
  return {v[0], v[1]};
}

inline UavSettings parse_uav(Section s) {
  UavSettings out;
  auto& sc = out.scenario;
  sc.gravity = s.number("gravity", sc.gravity);
  if (s.has("obstacle_center")) sc.obstacle_center = s.vector("obstacle_center", 3);
  sc.uav_radius = s.number("uav_radius", sc.uav_radius);
  sc.obstacle_radius = s.number("obstacle_radius", sc.obstacle_radius);
  sc.clearance = s.number("clearance", sc.clearance);
  if (s.has("v_bounds")) std::tie(sc.v_min, sc.v_max) = bounds_pair(s, "v_bounds");
  if (s.has("gamma_bounds")) std::tie(sc.gamma_min, sc.gamma_max) = bounds_pair(s, "gamma_bounds");
  sc.gamma_margin = s.number("gamma_margin", sc.gamma_margin);
  if (s.has("u_min")) sc.u_min = s.vector("u_min", 3);
  if (s.has("u_max")) sc.u_max = s.vector("u_max", 3);
  if (s.has("initial_state")) sc.initial_state = s.vector("initial_state", 6);
  {
    Section ref = s.sub("reference");
    if (ref.has("center")) sc.reference.center = ref.vector("center", 2);
    sc.reference.radius = ref.number("radius", sc.reference.radius);
    sc.reference.altitude = ref.number("altitude", sc.reference.altitude);
    sc.reference.speed = ref.number("speed", sc.reference.speed);
    sc.reference.direction = ref.number("direction", sc.reference.direction);
    if (sc.reference.direction != 1.0 && sc.reference.direction != -1.0)
      throw ConfigError(ref.where("direction") + ": expected 1 or -1");
    ref.finish();
  }
  {
    Section tr = s.sub("tracker");
    auto& t = out.tracker;
    t.horizon = tr.number("horizon", t.horizon);
    t.steps = static_cast<int>(tr.number("steps", t.steps));
    t.iterations = static_cast<int>(tr.number("iterations", t.iterations));
    t.w_vel = tr.number("w_vel", t.w_vel);
    t.w_pos = tr.number("w_pos", t.w_pos);
    t.w_speed = tr.number("w_speed", t.w_speed);
    if (tr.has("w_input")) t.w_input = tr.vector("w_input", 3);
    t.k_pos = tr.number("k_pos", t.k_pos);
    t.max_correction = tr.number("max_correction", t.max_correction);
    if (!(t.horizon > 0.0 && t.steps > 0 && t.iterations >= 0))
      throw ConfigError(tr.where("horizon") + ": tracker horizon/steps must be positive");
    tr.finish();
  }
  s.finish();
  try {
    sc.validate_fields();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("scenario.uav: ") + e.what());
  }
  return out;
}

inline DoubleIntegratorSettings parse_double_integrator(Section s) {
  DoubleIntegratorSettings out;
  out.wall = s.number("wall", out.wall);
  if (s.has("v_bounds")) out.v_bounds = bounds_pair(s, "v_bounds");
  if (s.has("u_bounds")) out.u_bounds = bounds_pair(s, "u_bounds");
  if (s.has("initial_state")) out.initial_state = s.vector("initial_state", 2);
  out.target = s.number("target", out.target);
  out.kp = s.number("kp", out.kp);
  out.kd = s.number("kd", out.kd);
  s.finish();
  return out;
}

}  // namespace detail

/// Parse a configuration document. Unknown keys are errors.
inline SimConfig parse_config(const nlohmann::json& doc) {
  using detail::Section;
  SimConfig cfg;
  Section root(doc, "");

  {
    Section sc = root.sub("scenario");
    const bool has_uav = sc.has("uav");
    const bool has_di = sc.has("double_integrator");
    if (has_uav == has_di)
      throw ConfigError("scenario: exactly one of 'uav' or 'double_integrator' is required");
    if (has_uav) cfg.scenario = detail::parse_uav(sc.sub("uav"));
    else cfg.scenario = detail::parse_double_integrator(sc.sub("double_integrator"));
    sc.finish();
  }
  {
    Section ev = root.sub("evading");
    if (ev.has("epsilon")) cfg.evading.epsilon = ev.number("epsilon");
    cfg.evading.gain = ev.optional_vector("gain");
    cfg.evading.k1 = ev.optional_vector("k1");
    cfg.evading.k2 = ev.optional_vector("k2");
    cfg.evading.k3 = ev.optional_vector("k3");
    cfg.evading.gain_scale = ev.number("gain_scale", cfg.evading.gain_scale);
    ev.finish();
  }
  {
    Section z = root.sub("zcbf");
    cfg.zcbf.horizon = z.number("horizon", cfg.zcbf.horizon);
    cfg.zcbf.step = z.number("step", cfg.zcbf.step);
    cfg.zcbf.dwell = z.number("dwell", cfg.zcbf.dwell);
    z.finish();
    try {
      cfg.zcbf.validate();
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("zcbf: ") + e.what());
    }
  }
  {
    const int m = std::holds_alternative<UavSettings>(cfg.scenario) ? 3 : 1;
    Section f = root.sub("filter");
    cfg.filter.R1 = f.matrix("R1", m);
    cfg.filter.R2 = f.matrix("R2", m);
    cfg.filter.alpha_gain = f.number("alpha", cfg.filter.alpha_gain);
    if (f.has("dt")) cfg.filter.dt = f.number("dt");
    cfg.filter.rd1_shrink = f.number("rd1_shrink", cfg.filter.rd1_shrink);
    cfg.filter.feasibility_tol = f.number("feasibility_tol", cfg.filter.feasibility_tol);
    cfg.filter.membership_tol = f.number("membership_tol", cfg.filter.membership_tol);
    cfg.filter.disable_solver = f.boolean("disable_solver", cfg.filter.disable_solver);
    f.finish();
  }
  {
    Section s = root.sub("sim");
    cfg.sim.duration = s.number("duration", cfg.sim.duration);
    cfg.sim.plant_step = s.number("plant_step", cfg.sim.plant_step);
    cfg.sim.controller_period = s.number("controller_period", cfg.sim.controller_period);
    if (s.has("mode")) cfg.sim.mode = parse_mode(s.text("mode", "proposed"));
    s.finish();
  }
  {
    Section o = root.sub("output");
    cfg.output.log = o.text("log", cfg.output.log);
    cfg.output.timing = o.boolean("timing", cfg.output.timing);
    o.finish();
  }
  if (root.has("seed")) {
    const double seed = root.number("seed");
    if (!(seed >= 0.0)) throw ConfigError("seed: must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  root.finish();
  cfg.validate();
  return cfg;
}

inline SimConfig parse_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace rdcbf::sim
