#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlrv/mdp.hpp"
#include "rlrv/trace.hpp"

namespace rlrv {

/// Night-patrol environment: state (t, loc) with index t * 3 + loc, action =
/// location to patrol next. A shift normally advances t by one; with
/// probability skip_probability it instead stays (early end) or jumps by two
/// (missed shift), split evenly. t wraps from the last shift to 0.
struct PatrolConfig {
  int n_shifts = 6;
  std::array<std::string, 3> locations{"docks", "slums", "station"};
  /// Rewards of arriving at a location are drawn from U[0, scale].
  std::array<double, 3> reward_scale{2.0, 3.0, 0.5};
  double skip_probability = 0.1;
  std::uint64_t rng_seed = 7;
  double discount = 0.5;

  int n_states() const { return n_shifts * 3; }
  void validate() const;
};

inline constexpr int kPatrolActions = 3;

inline StateIndex patrol_state(int shift, int location) { return shift * kPatrolActions + location; }
inline int patrol_shift(StateIndex s) { return s / kPatrolActions; }
inline int patrol_location(StateIndex s) { return s % kPatrolActions; }

/// Rewards depend on the arrival state (t', loc') and are fixed at build time.
Mdp build_patrol_mdp(const PatrolConfig& cfg);

/// Slums for t <= 1, station for t = 2, docks afterwards.
PolicyTable patrol_schedule_policy(const PatrolConfig& cfg);

/// Fully mixed behaviour policy preferring the slums (0.6, others 0.2).
PolicyTable patrol_exploration_policy(const PatrolConfig& cfg);

/// Mostly stays at the station, the least rewarding location (0.8, others 0.1).
PolicyTable patrol_station_policy(const PatrolConfig& cfg);

/// Samples n_transitions steps of the chain induced by the policy.
Trace run_policy(const Mdp& mdp, const PolicyTable& policy, std::int64_t n_transitions,
                 std::uint64_t seed, StateIndex initial_state = 0);

struct LearnerConfig {
  double learning_rate = 0.75;
  double discount = 0.5;
  /// Defaults to R_min / (1 - gamma).
  std::optional<double> initial_q;
  std::uint64_t rng_seed = 0;
};

struct TdPoint {
  std::int64_t step = 0;
  /// ||Q_k - Q^pi||_inf over the masked pairs.
  double delta_norm = 0.0;
  /// ||Q_k - Q_{k-1}||_inf.
  double consecutive_norm = 0.0;
};

/// On-policy SARSA evaluation of `policy`. The error is measured on the pairs
/// where `mask` is true; by default every pair with pi(s,a) > 0.
std::vector<TdPoint> td_evaluate(const Mdp& mdp, const PolicyTable& policy,
                                 const LearnerConfig& learner, std::int64_t n_transitions,
                                 const ActionValues& reference_q, StateIndex initial_state = 0,
                                 const std::vector<bool>& mask = {});

/// First step after which delta_norm stays below eps until the end.
std::optional<std::int64_t> first_sustained_below(const std::vector<TdPoint>& series, double eps);

/// Dirichlet(1) transition rows and U[0, 1] rewards.
Mdp random_mdp(int n_states, int n_actions, std::uint64_t seed, double discount = 0.9);

}  // namespace rlrv
