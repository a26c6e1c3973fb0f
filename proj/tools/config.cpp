#include "config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rlrv::cli {

using nlohmann::json;

int RunConfig::n_states() const {
  return environment == Environment::Patrol ? patrol.n_states() : random_states;
}

int RunConfig::n_actions() const {
  return environment == Environment::Patrol ? kPatrolActions : random_actions;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool known_policy(const std::string& name) {
  return name == "exploration" || name == "schedule" || name == "uniform" || name == "station" ||
         name == "estimated";
}

template <class T>
void read(const json& doc, const char* key, T& out) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    patrol.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  require(random_states >= 1 && random_actions >= 1, "random MDP needs at least one state and action");
  require(n_transitions >= 1, "n_transitions must be at least 1");
  require(discount >= 0.0 && discount < 1.0, "discount must lie in [0, 1)");
  require(learning_rate > 0.0 && learning_rate <= 1.0, "learning_rate must lie in (0, 1]");
  require(convergence_eps > 0.0, "convergence_eps must be positive");
  require(negligibility >= 0.0 && negligibility < 1.0, "negligibility must lie in [0, 1)");
  require(r_min <= r_max, "r_min must not exceed r_max");
  require(max_transitions >= 0, "max_transitions must be non-negative");
  require(quality.max_bias_rel > 0.0 && quality.max_sigma_rel > 0.0,
          "quality thresholds must be positive");
  require(eta.eta_lower_min >= 0.0 && eta.eta_lower_min <= 1.0 && eta.eta_upper_min >= 0.0 &&
              eta.eta_upper_min <= 1.0,
          "eta thresholds must lie in [0, 1]");
  require(sigma_multiplier > 0.0, "sigma_multiplier must be positive");
  require(calibration_fraction > 0.0 && calibration_fraction < 1.0,
          "calibration_fraction must lie in (0, 1)");
  require(resamples >= 100, "resamples must be at least 100");
  require(check_every >= 1, "check_every must be at least 1");
  require(td_transitions >= 1, "td_transitions must be at least 1");
  require(known_policy(policy), "unknown policy \"" + policy + "\"");
  require(known_policy(timeliness_policy), "unknown timeliness_policy \"" + timeliness_policy + "\"");
  if (environment == Environment::Random) {
    for (const auto* name : {&policy, &timeliness_policy}) {
      require(*name != "schedule" && *name != "station",
              "policy \"" + *name + "\" only exists for the patrol environment");
    }
  }
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require(doc.is_object(), "config must be a JSON object");

  RunConfig cfg;
  std::string text;
  if (doc.contains("environment")) {
    read(doc, "environment", text);
    require(text == "patrol" || text == "random", "environment must be \"patrol\" or \"random\"");
    cfg.environment = text == "patrol" ? Environment::Patrol : Environment::Random;
  }
  read(doc, "n_shifts", cfg.patrol.n_shifts);
  read(doc, "skip_probability", cfg.patrol.skip_probability);
  if (doc.contains("reward_scale")) {
    std::vector<double> scales;
    read(doc, "reward_scale", scales);
    require(scales.size() == 3, "reward_scale needs one entry per location");
    std::copy(scales.begin(), scales.end(), cfg.patrol.reward_scale.begin());
  }
  read(doc, "random_states", cfg.random_states);
  read(doc, "random_actions", cfg.random_actions);

  read(doc, "n_transitions", cfg.n_transitions);
  read(doc, "discount", cfg.discount);
  cfg.patrol.discount = cfg.discount;
  read(doc, "learning_rate", cfg.learning_rate);
  read(doc, "convergence_eps", cfg.convergence_eps);
  read(doc, "negligibility", cfg.negligibility);
  read(doc, "r_min", cfg.r_min);
  read(doc, "r_max", cfg.r_max);
  read(doc, "max_transitions", cfg.max_transitions);
  if (doc.contains("scenario")) {
    read(doc, "scenario", text);
    if (text == "NewPolicy") {
      cfg.scenario = Scenario::NewPolicy;
    } else if (text == "NewReward") {
      cfg.scenario = Scenario::NewReward;
    } else if (text == "NewEnvironment") {
      cfg.scenario = Scenario::NewEnvironment;
    } else {
      throw ConfigError("unknown scenario \"" + text + "\"");
    }
  }

  read(doc, "max_bias_rel", cfg.quality.max_bias_rel);
  read(doc, "max_sigma_rel", cfg.quality.max_sigma_rel);
  read(doc, "eta_lower_min", cfg.eta.eta_lower_min);
  read(doc, "eta_upper_min", cfg.eta.eta_upper_min);
  read(doc, "sigma_multiplier", cfg.sigma_multiplier);
  read(doc, "calibration_fraction", cfg.calibration_fraction);
  read(doc, "resamples", cfg.resamples);

  read(doc, "check_every", cfg.check_every);
  if (doc.contains("schedule")) {
    read(doc, "schedule", text);
    require(text == "linear" || text == "geometric", "schedule must be \"linear\" or \"geometric\"");
    cfg.schedule = text == "linear" ? Schedule::Linear : Schedule::Geometric;
  }
  read(doc, "td_transitions", cfg.td_transitions);

  read(doc, "seed", cfg.seed);
  read(doc, "environment_seed", cfg.environment_seed);
  cfg.patrol.rng_seed = cfg.environment_seed;

  read(doc, "policy", cfg.policy);
  read(doc, "timeliness_policy", cfg.timeliness_policy);
  if (doc.contains("policy_file")) {
    read(doc, "policy_file", text);
    cfg.policy_file = text;
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace rlrv::cli
