// Command-line front end: run a scenario, audit its assumptions, summarise a log.
//
//   rdcbf_cli run <config> [--mode proposed|baseline|nominal-only] [--out <path>] [--duration <s>]
//   rdcbf_cli audit <config> [--samples N]
//   rdcbf_cli metrics <log>
//
// Exit codes: 0 success, 1 configuration error, 2 runtime abort.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rdcbf/sim/audit.hpp"
#include "rdcbf/sim/metrics.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeAbort = 2;

int run_command(const std::string& config_path, const std::string& mode,
                const std::string& out_path, double duration) {
  using namespace rdcbf::sim;
  SimConfig cfg;
  std::optional<Scenario> sc;
  RunOptions opt;
  try {
    cfg = load_config(config_path);
    if (!mode.empty()) opt.mode = parse_mode(mode);
    if (!out_path.empty()) opt.log_path = out_path;
    if (duration >= 0.0) opt.duration = duration;
    sc.emplace(build_scenario(cfg));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const SimLog log = run_sim(cfg, *sc, opt);
    print_metrics(std::cout, metrics(log));
  } catch (const RuntimeAbort& e) {
    std::cerr << e.what() << '\n';
    return kRuntimeAbort;
  } catch (const rdcbf::Error& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeAbort;
  }
  return kOk;
}

int audit_command(const std::string& config_path, std::size_t samples) {
  using namespace rdcbf::sim;
  try {
    const SimConfig cfg = load_config(config_path);
    const AuditReport rep = audit_assumptions(cfg, samples);
    print_audit(std::cout, rep);
    return rep.pass() ? kOk : kRuntimeAbort;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const rdcbf::Error& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeAbort;
  }
}

int metrics_command(const std::string& log_path) {
  using namespace rdcbf::sim;
  try {
    print_metrics(std::cout, metrics(read_log(log_path)));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeAbort;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety filter for second-order systems under state and input constraints"};
  app.require_subcommand(1);

  std::string config_path, mode, out_path, log_path;
  double duration = -1.0;
  std::size_t samples = 100000;

  auto* run = app.add_subcommand("run", "simulate a scenario and write a CSV log");
  run->add_option("config", config_path, "configuration file")->required();
  run->add_option("--mode", mode, "proposed | baseline | nominal-only")
      ->check(CLI::IsMember({"proposed", "baseline", "nominal-only"}));
  run->add_option("--out", out_path, "log path (overrides output.log)");
  run->add_option("--duration", duration, "simulated seconds (overrides sim.duration)")
      ->check(CLI::NonNegativeNumber);

  auto* audit = app.add_subcommand("audit", "sample the state box and check the model assumptions");
  audit->add_option("config", config_path, "configuration file")->required();
  audit->add_option("--samples", samples, "number of sampled states")->check(CLI::PositiveNumber);

  auto* met = app.add_subcommand("metrics", "summarise a simulation log");
  met->add_option("log", log_path, "CSV log written by 'run'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) return run_command(config_path, mode, out_path, duration);
  if (*audit) return audit_command(config_path, samples);
  return metrics_command(log_path);
}
