#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlrv/estimation.hpp"
#include "rlrv/quality.hpp"

namespace rlrv {

struct SplitConfig {
  double calibration_fraction = 0.05;
  std::uint64_t rng_seed = 0;
};

struct TraceSplit {
  Trace calibration;
  Trace validation;
};

/// Random partition without replacement. The calibration part holds
/// round(fraction * n) records; both parts keep the original record order.
/// Throws ParameterError when either part would be empty.
TraceSplit split_trace(const Trace& trace, const SplitConfig& cfg);

/// Policy iteration on the MDP estimated from the calibration records.
/// Not applicable unless every action of every observed state has data.
Applicable<PolicyTable> estimate_optimal_policy(const Trace& calibration, double discount);

/// Per-state interval bounds on V^pi, V^pi* and the optimality ratio.
struct OptimalityBounds {
  Eigen::VectorXd v_floor;
  Eigen::VectorXd v_ceil;
  Eigen::VectorXd vstar_floor;
  Eigen::VectorXd vstar_ceil;
  Eigen::VectorXd eta_lower;
  Eigen::VectorXd eta_upper;
  /// States the bounds refer to (observed in the validation data).
  std::vector<bool> active;
  /// States where the optimum's ceiling is 0 but the policy's is not.
  std::vector<StateIndex> flagged;
};

/// Interval arithmetic on two uncertainty estimates:
///   floor = max(0, V - bias - k sigma), ceil = max(0, V - bias + k sigma),
///   eta_lower = floor_pi / ceil_star, eta_upper = min(1, ceil_pi / floor_star).
/// A zero floor_star leaves eta_upper at 1. A zero ceil_star gives
/// eta_lower = 1 when ceil_pi is also 0 and flags the state otherwise.
OptimalityBounds bounds_from(const ValueUncertainty& policy_u, const ValueUncertainty& optimal_u,
                             double sigma_multiplier = 2.0);

struct OptimalityEstimate {
  OptimalityBounds bounds;
  ValueUncertainty policy_u;
  ValueUncertainty optimal_u;
};

/// Bootstraps both value functions on the validation records and bounds eta.
/// Throws PreconditionError on a negative observed reward; not applicable
/// when either policy lacks coverage.
Applicable<OptimalityEstimate> optimality_bounds(const Trace& validation, const PolicyTable& policy,
                                                 const PolicyTable& pi_star_cal, double discount,
                                                 int resamples, std::uint64_t seed,
                                                 double sigma_multiplier = 2.0);

struct EtaThresholds {
  double eta_lower_min = 0.5;
  double eta_upper_min = 0.7;
};

struct OptimalityConfig {
  EtaThresholds eta;
  QualityThresholds quality;
  SplitConfig split;
  int resamples = 200;
  std::uint64_t seed = 0;
  double sigma_multiplier = 2.0;
};

struct OptimalityVerdict {
  Status status = Status::Unverified;
  std::int64_t checked_at_step = 0;
  std::string reason;
  /// Quality condition on both value functions.
  bool condition_holds = false;
  std::optional<OptimalityBounds> bounds;
  std::optional<PolicyTable> pi_star_cal;
  StateIndex worst_state = -1;
};

/// Pure verdict rule once bounds and the quality condition are known.
OptimalityVerdict optimality_verdict_from(const OptimalityBounds& bounds, bool condition_holds,
                                          const EtaThresholds& eta);

OptimalityVerdict check_optimality(const Trace& trace, const PolicyTable& policy, double discount,
                                   const OptimalityConfig& cfg);

struct OptimalityPoint {
  std::int64_t step = 0;
  OptimalityVerdict verdict;
};

/// check_optimality on each trace prefix; pi*_cal is recomputed every time.
std::vector<OptimalityPoint> optimality_series(const Trace& trace, const PolicyTable& policy,
                                               double discount, const OptimalityConfig& cfg,
                                               const std::vector<std::int64_t>& checkpoints);

}  // namespace rlrv
