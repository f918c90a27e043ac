#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "rdcbf/sim/scenario.hpp"

namespace rdcbf::sim {

/// Column names plus numeric rows, one per controller step.
struct SimLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ContractViolation("log has no column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }
  std::vector<double> series(const std::string& name) const {
    const std::size_t k = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
  }
};

/// Simulation stopped by a model or rollout error; rows logged so far are kept.
class RuntimeAbort : public Error {
 public:
  RuntimeAbort(const std::string& what, SimLog partial)
      : Error(what), partial_(std::move(partial)) {}
  const SimLog& partial() const { return partial_; }

 private:
  SimLog partial_;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Appends rows to a CSV file, flushing each one so a killed run leaves a valid prefix.
class CsvWriter {
 public:
  CsvWriter() = default;
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot open log file '" + path + "'");
  }
  bool is_open() const { return out_.is_open(); }

  void header(const std::vector<std::string>& cols) {
    if (!out_.is_open()) return;
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
    out_.flush();
  }
  void row(const std::vector<double>& values) {
    if (!out_.is_open()) return;
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += format_double(values[i]);
    }
    line += '\n';
    out_ << line;
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct RunOptions {
  std::optional<Mode> mode;
  std::optional<double> duration;
  std::optional<std::string> log_path;  // empty string: do not write a file
  std::ostream* warnings = &std::cerr;
};

inline std::vector<std::string> log_columns(const Scenario& sc, bool timing) {
  const int m = sc.model.m;
  const int c = sc.constraints.c();
  std::vector<std::string> cols{"t"};
  for (const auto& s : sc.state_names) cols.push_back(s);
  for (int i = 0; i < m; ++i) cols.push_back("uhat_" + std::to_string(i));
  for (int i = 0; i < m; ++i) cols.push_back("u_" + std::to_string(i));
  cols.push_back("H");
  cols.push_back("t_star");
  for (int i = 0; i < c; ++i) cols.push_back("hv_" + std::to_string(i));
  for (int i = 0; i < c; ++i) cols.push_back("rd1_excess_" + std::to_string(i));
  cols.push_back("input_excess");
  cols.push_back("obstacle_distance");
  cols.push_back("used_fallback");
  cols.push_back("best_effort");
  cols.push_back("active_set");
  if (timing) cols.push_back("solve_us");
  return cols;
}

/// Closed-loop run: zero-order hold at the controller period, RK4 plant at the plant step.
inline SimLog run_sim(const SimConfig& cfg, const Scenario& sc, const RunOptions& opt = {}) {
  const Mode mode = opt.mode.value_or(cfg.sim.mode);
  const double duration = opt.duration.value_or(cfg.sim.duration);
  if (!(duration >= 0.0)) throw ConfigError("duration must be >= 0");
  const std::string path = opt.log_path.value_or(cfg.output.log);
  const double period = cfg.sim.controller_period;
  const double plant_step = cfg.sim.plant_step;
  const int n = sc.model.n;
  const int m = sc.model.m;
  const int c = sc.constraints.c();
  const auto steps = static_cast<long>(std::llround(duration / period));
  const int substeps = std::max(1, static_cast<int>(std::llround(period / plant_step)));
  const double h = period / substeps;

  SimLog log;
  log.columns = log_columns(sc, cfg.output.timing);
  CsvWriter writer;
  if (!path.empty()) writer = CsvWriter(path);
  writer.header(log.columns);

  NominalController nominal = sc.make_nominal();
  Vec x = sc.initial_state;
  Vec u_prev;

  if (mode != Mode::nominal_only && opt.warnings) {
    const Membership mem = membership(sc.model, sc.constraints, sc.evading, sc.zcbf, x,
                                      sc.filter.membership_tol);
    if (mem.region != Region::inside)
      *opt.warnings << "warning: initial state is " << to_string(mem.region)
                    << " the invariant set; filter runs best-effort\n";
  }

  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * period;
    std::vector<double> row;
    try {
      const Vec u_hat = nominal(x, t);
      if (u_prev.size() == 0) u_prev = u_hat;
      FilterResult res;
      if (mode == Mode::proposed) {
        res = solve_filter(sc.model, sc.constraints, sc.evading, sc.zcbf, sc.filter, x, u_hat, u_prev);
      } else if (mode == Mode::baseline) {
        res = baseline_filter(sc.model, sc.constraints, sc.evading, sc.zcbf, sc.filter, x, u_hat);
      } else {
        res.u_safe = u_hat;
        res.zcbf.H = std::numeric_limits<double>::quiet_NaN();
        res.zcbf.t_star = std::numeric_limits<double>::quiet_NaN();
        try {
          const ZcbfEvaluation ev = eval_H(sc.model, sc.constraints, sc.evading, sc.zcbf, x);
          res.zcbf.H = ev.H;
          res.zcbf.t_star = ev.t_star;
        } catch (const Error&) {
          // logging only; the unfiltered run does not depend on H
        }
      }

      row.push_back(t);
      for (int i = 0; i < n + m; ++i) row.push_back(x[i]);
      for (int i = 0; i < m; ++i) row.push_back(u_hat[i]);
      for (int i = 0; i < m; ++i) row.push_back(res.u_safe[i]);
      row.push_back(res.zcbf.H);
      row.push_back(res.zcbf.t_star);
      const Vec v = x.tail(m);
      for (int i = 0; i < c; ++i) row.push_back(rd1_value(sc.constraints, v, i));
      for (int i = 0; i < c; ++i)
        row.push_back(std::max(sc.constraints.v_min()[i] - v[i], v[i] - sc.constraints.v_max()[i]));
      row.push_back(std::max((sc.constraints.u_min() - res.u_safe).maxCoeff(),
                             (res.u_safe - sc.constraints.u_max()).maxCoeff()));
      row.push_back(sc.distance(x));
      row.push_back(res.used_fallback ? 1.0 : 0.0);
      row.push_back(res.best_effort ? 1.0 : 0.0);
      row.push_back(static_cast<double>(res.active.bitmask()));
      if (cfg.output.timing) row.push_back(res.solve_time_us);

      writer.row(row);
      log.rows.push_back(row);
      if (k == steps) break;

      const Vec u = res.u_safe;
      for (int s = 0; s < substeps; ++s)
        x = rk4_step([&](const Vec& y) { return eval_dynamics(sc.model, y, u); }, x, h);
      if (!x.allFinite()) throw DomainError("plant state is not finite");
      u_prev = u;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw RuntimeAbort("simulation aborted at t=" + format_double(t) + ": " + e.what(), log);
    }
  }
  return log;
}

/// Read a CSV log written by run_sim.
inline SimLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log '" + path + "'");
  SimLog log;
  std::string line;
  if (!std::getline(in, line)) throw Error("log '" + path + "' is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) log.columns.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != log.columns.size())
      throw Error("log '" + path + "' has a malformed row");
    log.rows.push_back(std::move(row));
  }
  return log;
}

}  // namespace rdcbf::sim
