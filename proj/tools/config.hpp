#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rlrv/harness.hpp"
#include "rlrv/optimality.hpp"
#include "rlrv/quality.hpp"
#include "rlrv/timeliness.hpp"

namespace rlrv::cli {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Environment { Patrol, Random };
enum class Schedule { Linear, Geometric };

/// Everything the commands need. Loaded from a JSON object whose keys mirror
/// the field names; absent keys keep these defaults.
struct RunConfig {
  Environment environment = Environment::Patrol;
  PatrolConfig patrol;
  int random_states = 6;
  int random_actions = 3;

  std::int64_t n_transitions = 20000;
  double discount = 0.5;
  double learning_rate = 0.75;
  double convergence_eps = 0.05;
  double negligibility = 0.0;
  double r_min = 0.0;
  double r_max = 3.0;
  std::int64_t max_transitions = 100;
  Scenario scenario = Scenario::NewPolicy;

  QualityThresholds quality;
  EtaThresholds eta;
  double sigma_multiplier = 2.0;
  double calibration_fraction = 0.05;
  int resamples = 200;

  std::int64_t check_every = 500;
  Schedule schedule = Schedule::Linear;
  std::int64_t td_transitions = 200;

  /// Master seed; simulation, bootstrap, split and learner seeds derive from it.
  std::uint64_t seed = 1;
  std::uint64_t environment_seed = 7;

  /// exploration | schedule | uniform | station | estimated
  std::string policy = "exploration";
  std::string timeliness_policy = "schedule";
  std::optional<std::filesystem::path> policy_file;

  std::uint64_t simulation_seed() const { return seed; }
  std::uint64_t bootstrap_seed() const { return seed + 1; }
  std::uint64_t split_seed() const { return seed + 2; }
  std::uint64_t learner_seed() const { return seed + 3; }

  int n_states() const;
  int n_actions() const;

  /// Range checks for every field; throws ConfigError.
  void validate() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace rlrv::cli
