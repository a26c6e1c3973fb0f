#include "rlrv/optimality.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace rlrv {

TraceSplit split_trace(const Trace& trace, const SplitConfig& cfg) {
  if (!(cfg.calibration_fraction > 0.0 && cfg.calibration_fraction < 1.0)) {
    throw ParameterError("calibration fraction must lie in (0, 1)");
  }
  const std::size_t n = trace.size();
  const auto n_cal = static_cast<std::size_t>(
      std::llround(cfg.calibration_fraction * static_cast<double>(n)));
  if (n_cal == 0 || n_cal >= n) {
    std::ostringstream msg;
    msg << "split of " << n << " records at fraction " << cfg.calibration_fraction
        << " leaves one side empty";
    throw ParameterError(msg.str());
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.rng_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> in_cal(n, false);
  for (std::size_t i = 0; i < n_cal; ++i) in_cal[order[i]] = true;

  TraceSplit split{{trace.n_states, trace.n_actions, {}}, {trace.n_states, trace.n_actions, {}}};
  split.calibration.records.reserve(n_cal);
  split.validation.records.reserve(n - n_cal);
  for (std::size_t i = 0; i < n; ++i) {
    (in_cal[i] ? split.calibration : split.validation).records.push_back(trace.records[i]);
  }
  return split;
}

Applicable<PolicyTable> estimate_optimal_policy(const Trace& calibration, double discount) {
  const EstimatedModel model = build_model(calibration);
  try {
    const Mdp mdp = estimated_mdp(model, discount);
    return policy_iteration(mdp, PolicyTable::uniform(mdp.n_states(), mdp.n_actions())).policy;
  } catch (const MissingDataError& e) {
    return NotApplicable{std::string("calibration set: ") + e.what()};
  }
}

OptimalityBounds bounds_from(const ValueUncertainty& policy_u, const ValueUncertainty& optimal_u,
                             double sigma_multiplier) {
  const Eigen::Index n = policy_u.v_hat.size();
  const Eigen::VectorXd centre = policy_u.v_hat - policy_u.bias;
  const Eigen::VectorXd centre_star = optimal_u.v_hat - optimal_u.bias;
  const Eigen::VectorXd spread = sigma_multiplier * policy_u.sigma();
  const Eigen::VectorXd spread_star = sigma_multiplier * optimal_u.sigma();

  OptimalityBounds b;
  b.v_floor = (centre - spread).cwiseMax(0.0);
  b.v_ceil = (centre + spread).cwiseMax(0.0);
  b.vstar_floor = (centre_star - spread_star).cwiseMax(0.0);
  b.vstar_ceil = (centre_star + spread_star).cwiseMax(0.0);
  b.eta_lower = Eigen::VectorXd::Zero(n);
  b.eta_upper = Eigen::VectorXd::Ones(n);
  b.active.assign(n, true);
  for (Eigen::Index s = 0; s < n; ++s) {
    const bool active_pi = policy_u.active.empty() || policy_u.active[s];
    const bool active_star = optimal_u.active.empty() || optimal_u.active[s];
    b.active[s] = active_pi && active_star;
    if (!b.active[s]) continue;

    if (b.vstar_ceil[s] > 0.0) {
      b.eta_lower[s] = std::min(1.0, b.v_floor[s] / b.vstar_ceil[s]);
    } else if (b.v_ceil[s] == 0.0) {
      b.eta_lower[s] = 1.0;
    } else {
      b.flagged.push_back(static_cast<StateIndex>(s));
    }
    if (b.vstar_floor[s] > 0.0) {
      b.eta_upper[s] = std::min(1.0, b.v_ceil[s] / b.vstar_floor[s]);
    }
  }
  return b;
}

Applicable<OptimalityEstimate> optimality_bounds(const Trace& validation, const PolicyTable& policy,
                                                 const PolicyTable& pi_star_cal, double discount,
                                                 int resamples, std::uint64_t seed,
                                                 double sigma_multiplier) {
  const EstimatedModel model = build_model(validation);
  if (model.n_records() > 0 && model.min_reward() < 0.0) {
    std::ostringstream msg;
    msg << "negative reward " << model.min_reward() << " in the validation set";
    throw PreconditionError(msg.str());
  }
  try {
    // Same seed for both so that comparing a policy with itself is exact.
    OptimalityEstimate out;
    out.policy_u = estimate_bias_cov(model, policy, discount, resamples, seed);
    out.optimal_u = estimate_bias_cov(model, pi_star_cal, discount, resamples, seed);
    out.bounds = bounds_from(out.policy_u, out.optimal_u, sigma_multiplier);
    return out;
  } catch (const MissingDataError& e) {
    return NotApplicable{std::string("validation set: ") + e.what()};
  }
}

OptimalityVerdict optimality_verdict_from(const OptimalityBounds& bounds, bool condition_holds,
                                          const EtaThresholds& eta) {
  OptimalityVerdict v;
  v.condition_holds = condition_holds;
  v.bounds = bounds;
  if (!condition_holds) {
    v.reason = "quality condition does not hold on both value functions";
    return v;
  }
  if (!bounds.flagged.empty()) {
    std::ostringstream msg;
    msg << "optimum ceiling is 0 but the policy's is not at state " << bounds.flagged.front();
    v.reason = msg.str();
    return v;
  }
  v.status = Status::Satisfied;
  for (std::size_t s = 0; s < bounds.active.size(); ++s) {
    if (!bounds.active[s]) continue;
    if (bounds.eta_lower[s] < eta.eta_lower_min || bounds.eta_upper[s] < eta.eta_upper_min) {
      if (v.status == Status::Satisfied) {
        v.status = Status::Violated;
        v.worst_state = static_cast<StateIndex>(s);
      } else if (bounds.eta_lower[s] < bounds.eta_lower[v.worst_state]) {
        v.worst_state = static_cast<StateIndex>(s);
      }
    }
  }
  if (v.status == Status::Violated) {
    std::ostringstream msg;
    msg << "state " << v.worst_state << ": eta in [" << bounds.eta_lower[v.worst_state] << ", "
        << bounds.eta_upper[v.worst_state] << "]";
    v.reason = msg.str();
  }
  return v;
}

OptimalityVerdict check_optimality(const Trace& trace, const PolicyTable& policy, double discount,
                                   const OptimalityConfig& cfg) {
  cfg.quality.validate();
  const auto step = static_cast<std::int64_t>(trace.size());
  const auto unverified = [step](std::string reason) {
    OptimalityVerdict v;
    v.checked_at_step = step;
    v.reason = std::move(reason);
    return v;
  };

  TraceSplit split;
  try {
    split = split_trace(trace, cfg.split);
  } catch (const ParameterError& e) {
    return unverified(e.what());
  }

  auto pi_star = estimate_optimal_policy(split.calibration, discount);
  if (auto* na = std::get_if<NotApplicable>(&pi_star)) return unverified(na->reason);
  PolicyTable& pi_star_cal = std::get<PolicyTable>(pi_star);

  Applicable<OptimalityEstimate> estimate = NotApplicable{};
  try {
    estimate = optimality_bounds(split.validation, policy, pi_star_cal, discount, cfg.resamples,
                                 cfg.seed, cfg.sigma_multiplier);
  } catch (const PreconditionError& e) {
    return unverified(e.what());
  } catch (const ModelError& e) {
    return unverified(e.what());
  }
  if (auto* na = std::get_if<NotApplicable>(&estimate)) return unverified(na->reason);
  const OptimalityEstimate& est = std::get<OptimalityEstimate>(estimate);

  const auto q_pi = quality_verdict_from(est.policy_u, cfg.quality);
  const auto q_star = quality_verdict_from(est.optimal_u, cfg.quality);
  const bool condition =
      q_pi.status == Status::Satisfied && q_star.status == Status::Satisfied;

  OptimalityVerdict v = optimality_verdict_from(est.bounds, condition, cfg.eta);
  v.checked_at_step = step;
  v.pi_star_cal = pi_star_cal;
  return v;
}

std::vector<OptimalityPoint> optimality_series(const Trace& trace, const PolicyTable& policy,
                                               double discount, const OptimalityConfig& cfg,
                                               const std::vector<std::int64_t>& checkpoints) {
  std::vector<OptimalityPoint> series;
  series.reserve(checkpoints.size());
  for (const std::int64_t checkpoint : checkpoints) {
    const auto n = static_cast<std::size_t>(std::max<std::int64_t>(checkpoint, 0));
    const Trace prefix = trace.prefix(n);
    series.push_back({static_cast<std::int64_t>(prefix.size()),
                      check_optimality(prefix, policy, discount, cfg)});
  }
  return series;
}

}  // namespace rlrv
