#pragma once

#include <cmath>
#include <ostream>

#include "rdcbf/sim/simulation.hpp"

namespace rdcbf::sim {

struct Metrics {
  std::size_t rows = 0;
  double min_clearance = 0.0;
  std::size_t rd1_violations = 0;  // rows with any RD1 channel outside its box
  double rd1_max_violation = 0.0;
  std::size_t input_violations = 0;
  std::size_t fallback_count = 0;
  std::size_t best_effort_count = 0;
  double solve_mean_us = 0.0;
  double solve_std_us = 0.0;
  double solve_max_us = 0.0;
  double chattering = 0.0;  // sum |u_t - u_{t-1}|
};

/// Summary of a log. Only reads columns, so it works on logs loaded from disk.
inline Metrics metrics(const SimLog& log, double input_tol = 1e-9) {
  if (log.rows.empty()) throw ContractViolation("metrics need a non-empty log");
  Metrics out;
  out.rows = log.rows.size();

  std::vector<std::size_t> rd1_cols, u_cols;
  for (std::size_t i = 0; i < log.columns.size(); ++i) {
    if (log.columns[i].rfind("rd1_excess_", 0) == 0) rd1_cols.push_back(i);
    if (log.columns[i].rfind("u_", 0) == 0) u_cols.push_back(i);
  }
  const std::size_t dist = log.column("obstacle_distance");
  const std::size_t input = log.column("input_excess");
  const std::size_t fallback = log.column("used_fallback");
  const std::size_t best = log.column("best_effort");
  const bool timing = log.has_column("solve_us");
  const std::size_t solve = timing ? log.column("solve_us") : 0;

  out.min_clearance = std::numeric_limits<double>::infinity();
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < log.rows.size(); ++r) {
    const auto& row = log.rows[r];
    out.min_clearance = std::min(out.min_clearance, row[dist]);
    double worst = 0.0;
    for (std::size_t k : rd1_cols) worst = std::max(worst, row[k]);
    if (worst > 0.0) {
      ++out.rd1_violations;
      out.rd1_max_violation = std::max(out.rd1_max_violation, worst);
    }
    if (row[input] > input_tol) ++out.input_violations;
    if (row[fallback] != 0.0) ++out.fallback_count;
    if (row[best] != 0.0) ++out.best_effort_count;
    if (timing) {
      sum += row[solve];
      sum_sq += row[solve] * row[solve];
      out.solve_max_us = std::max(out.solve_max_us, row[solve]);
    }
    if (r > 0) {
      double sq = 0.0;
      for (std::size_t k : u_cols) {
        const double d = row[k] - log.rows[r - 1][k];
        sq += d * d;
      }
      out.chattering += std::sqrt(sq);
    }
  }
  if (timing) {
    const double count = static_cast<double>(log.rows.size());
    out.solve_mean_us = sum / count;
    out.solve_std_us = std::sqrt(std::max(0.0, sum_sq / count - out.solve_mean_us * out.solve_mean_us));
  }
  return out;
}

/// Aligned human-readable block followed by key=value lines.
inline void print_metrics(std::ostream& os, const Metrics& mt) {
  auto line = [&](const char* label, const std::string& value) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-28s %s\n", label, value.c_str());
    os << buf;
  };
  line("rows", std::to_string(mt.rows));
  line("min obstacle clearance", format_double(mt.min_clearance));
  line("RD1 violations (rows)", std::to_string(mt.rd1_violations));
  line("RD1 max violation", format_double(mt.rd1_max_violation));
  line("input-bound violations", std::to_string(mt.input_violations));
  line("fallback steps", std::to_string(mt.fallback_count));
  line("best-effort steps", std::to_string(mt.best_effort_count));
  line("solve time mean [us]", format_double(mt.solve_mean_us));
  line("solve time stddev [us]", format_double(mt.solve_std_us));
  line("solve time max [us]", format_double(mt.solve_max_us));
  line("chattering index", format_double(mt.chattering));
  os << "rows=" << mt.rows << '\n'
     << "min_clearance=" << format_double(mt.min_clearance) << '\n'
     << "rd1_violations=" << mt.rd1_violations << '\n'
     << "rd1_max_violation=" << format_double(mt.rd1_max_violation) << '\n'
     << "input_violations=" << mt.input_violations << '\n'
     << "fallback_count=" << mt.fallback_count << '\n'
     << "best_effort_count=" << mt.best_effort_count << '\n'
     << "solve_mean_us=" << format_double(mt.solve_mean_us) << '\n'
     << "solve_std_us=" << format_double(mt.solve_std_us) << '\n'
     << "solve_max_us=" << format_double(mt.solve_max_us) << '\n'
     << "chattering=" << format_double(mt.chattering) << '\n';
}

}  // namespace rdcbf::sim
