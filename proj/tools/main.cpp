#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rlrv");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("RLRV_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Runtime verification monitors for tabular reinforcement learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trace_path;
  std::string out_path;
  std::string property = "quality";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> check_every;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--seed", seed, "Override the master seed");
    cmd->add_option("--check-every", check_every, "Transitions between checkpoints");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a trace and its ground-truth sidecar");
  common(simulate);
  simulate->add_option("--out", out_path, "Trace file to write")->required();

  auto* monitor = app.add_subcommand("monitor", "Replay a trace through one monitor");
  common(monitor);
  monitor->add_option("--trace", trace_path, "Trace file")->required();
  monitor->add_option("--property", property, "quality | optimality | timeliness")
      ->check(CLI::IsMember({"quality", "optimality", "timeliness"}));

  auto* report = app.add_subcommand("report", "Write the figure CSVs for a trace");
  common(report);
  report->add_option("--trace", trace_path, "Trace file")->required();
  report->add_option("--out", out_path, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rlrv::cli::kBadInput;
  }

  rlrv::cli::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = rlrv::cli::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (check_every) cfg.check_every = *check_every;
    cfg.validate();
  } catch (const rlrv::Error& e) {
    spdlog::error("{}", e.what());
    return rlrv::cli::kBadInput;
  }

  if (simulate->parsed()) return rlrv::cli::run_simulate(cfg, out_path);
  if (monitor->parsed()) {
    return rlrv::cli::run_monitor(cfg, trace_path, rlrv::cli::parse_property(property), std::cout);
  }
  return rlrv::cli::run_report(cfg, trace_path, out_path);
}
