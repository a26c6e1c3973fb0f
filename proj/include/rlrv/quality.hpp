#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlrv/estimation.hpp"

namespace rlrv {

struct QualityThresholds {
  double max_bias_rel = 0.05;
  double max_sigma_rel = 0.02;

  /// Throws ParameterError unless both thresholds are positive.
  void validate() const;
};

struct StateScore {
  StateIndex state = -1;
  double value = 0.0;
};

struct QualityRow {
  StateIndex state = 0;
  double bias_rel = 0.0;
  double sigma_rel = 0.0;
};

struct QualityVerdict {
  Status status = Status::Unverified;
  StateScore worst_state_bias;
  StateScore worst_state_sigma;
  std::int64_t checked_at_step = 0;
  std::string reason;
  /// One row per reachable state; empty when Unverified.
  std::vector<QualityRow> detail;

  double max_bias_rel() const { return worst_state_bias.value; }
  double max_sigma_rel() const { return worst_state_sigma.value; }
};

/// Verdict from an already computed uncertainty estimate. Only states marked
/// active in `u` are compared against the thresholds.
QualityVerdict quality_verdict_from(const ValueUncertainty& u, const QualityThresholds& thresholds,
                                    std::int64_t step = 0);

/// Bootstraps the value uncertainty of `policy` under the estimated model and
/// compares it with the thresholds. Lack of coverage yields Unverified.
QualityVerdict check_quality(const EstimatedModel& model, const PolicyTable& policy,
                             double discount, const QualityThresholds& thresholds,
                             int resamples, std::uint64_t seed);

struct QualityPoint {
  std::int64_t step = 0;
  QualityVerdict verdict;
};

/// Checkpoints at every multiple of check_every plus the trace end.
std::vector<std::int64_t> linear_checkpoints(std::int64_t length, std::int64_t check_every);

/// first, 2*first, 4*first, ... capped by the trace end, which is always included.
std::vector<std::int64_t> geometric_checkpoints(std::int64_t length, std::int64_t first,
                                                double factor = 2.0);

/// Replays the trace and checks the property at each checkpoint.
std::vector<QualityPoint> quality_series(const Trace& trace, const PolicyTable& policy,
                                         double discount, const QualityThresholds& thresholds,
                                         std::int64_t check_every, int resamples,
                                         std::uint64_t seed);

/// Same, at explicit checkpoints (transition counts, sorted ascending).
std::vector<QualityPoint> quality_series(const Trace& trace, const PolicyTable& policy,
                                         double discount, const QualityThresholds& thresholds,
                                         const std::vector<std::int64_t>& checkpoints,
                                         int resamples, std::uint64_t seed);

/// Step of the first Satisfied entry, if any.
std::optional<std::int64_t> first_satisfied_step(const std::vector<QualityPoint>& series);

}  // namespace rlrv
