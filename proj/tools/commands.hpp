#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "rlrv/trace.hpp"

namespace rlrv::cli {

/// Process exit codes.
enum ExitCode : int { kSatisfied = 0, kBadInput = 1, kViolated = 2, kUnverified = 3 };

int exit_code_for(Status status);

enum class Property { Quality, Optimality, Timeliness };

/// Throws ConfigError for an unknown name.
Property parse_property(const std::string& name);

Mdp build_environment(const RunConfig& cfg);

/// Named policy for the configured environment. "estimated" needs a trace.
PolicyTable resolve_policy(const RunConfig& cfg, const std::string& name,
                           const Trace* trace = nullptr);

/// The monitored policy: policy_file when given, otherwise cfg.policy.
PolicyTable monitored_policy(const RunConfig& cfg, const Trace* trace = nullptr);

std::vector<std::int64_t> checkpoints_for(const RunConfig& cfg, std::int64_t length);

/// Writes the trace and its ground-truth sidecar.
int run_simulate(const RunConfig& cfg, const std::filesystem::path& out_path);

/// Prints one line per checkpoint to `out`; returns the exit code of the
/// final verdict.
int run_monitor(const RunConfig& cfg, const std::filesystem::path& trace_path, Property property,
                std::ostream& out);

/// Writes the figure CSVs into out_dir.
int run_report(const RunConfig& cfg, const std::filesystem::path& trace_path,
               const std::filesystem::path& out_dir);

}  // namespace rlrv::cli
