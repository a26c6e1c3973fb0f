#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rlrv/common.hpp"
#include "rlrv/mdp.hpp"
#include "rlrv/trace.hpp"

namespace rlrv {

/// Visit counts and maximum-likelihood estimates T-hat, R-hat rebuilt from a
/// stream of transitions. Exactly one writer may call ingest(); analyses take
/// the model by const reference or work on a copy.
class EstimatedModel {
 public:
  EstimatedModel(int n_states, int n_actions);

  /// Adds one transition. Throws InstrumentationFault (leaving the model
  /// untouched) when an index is outside the declared space or the reward is
  /// not finite.
  void ingest(const TransitionRecord& record);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  std::size_t n_records() const { return n_records_; }

  std::int64_t count(StateIndex s, ActionIndex a) const { return pair_counts_[pair(s, a)]; }
  std::int64_t count(StateIndex s, ActionIndex a, StateIndex next) const {
    return triple_counts_[triple(s, a, next)];
  }
  /// N(s,a,s') / N(s,a); zero for unvisited pairs.
  double t_hat(StateIndex s, ActionIndex a, StateIndex next) const;
  /// Running mean of the rewards observed on (s,a,s'); zero when unobserved.
  double r_hat(StateIndex s, ActionIndex a, StateIndex next) const {
    return reward_mean_[triple(s, a, next)];
  }
  /// sum_s' T-hat(s,a,s') R-hat(s,a,s').
  double expected_reward(StateIndex s, ActionIndex a) const;

  /// min over all (s,a) of N(s,a).
  std::int64_t min_visit() const { return min_visit_; }

  /// True once s has appeared as the source or the successor of a record.
  bool observed(StateIndex s) const { return observed_[s]; }
  std::vector<bool> observed_states() const { return observed_; }

  std::span<const double> reward_samples(StateIndex s, ActionIndex a, StateIndex next) const {
    return reward_samples_[triple(s, a, next)];
  }
  bool reward_is_constant(StateIndex s, ActionIndex a, StateIndex next) const;

  /// Smallest observed reward (+inf when empty).
  double min_reward() const { return min_reward_; }

 private:
  std::size_t pair(StateIndex s, ActionIndex a) const {
    return static_cast<std::size_t>(s) * n_actions_ + a;
  }
  std::size_t triple(StateIndex s, ActionIndex a, StateIndex next) const {
    return pair(s, a) * n_states_ + next;
  }

  int n_states_;
  int n_actions_;
  std::size_t n_records_ = 0;
  std::int64_t min_visit_ = 0;
  double min_reward_;
  std::vector<std::int64_t> pair_counts_;
  std::vector<std::int64_t> triple_counts_;
  std::vector<double> reward_mean_;
  std::vector<std::vector<double>> reward_samples_;
  std::vector<bool> observed_;
};

EstimatedModel build_model(std::span<const TransitionRecord> records, int n_states,
                           int n_actions);
EstimatedModel build_model(const Trace& trace);

/// Pairs (s,a) with s observed and pi(s,a) > 0 but N(s,a) = 0.
std::vector<StateAction> uncovered_pairs(const EstimatedModel& model, const PolicyTable& policy);

/// On-policy estimates restricted to the observed states. Rows and entries
/// of unobserved ("inactive") states are zero.
struct OnPolicyModel {
  Eigen::MatrixXd t_pi;
  Eigen::VectorXd r_pi;
  std::vector<bool> active;
};

/// T-hat^pi(s,s') = sum_a pi(s,a) T-hat(s,a,s') and the matching R-hat^pi.
/// Throws MissingDataError naming the uncovered pairs.
OnPolicyModel on_policy_projection(const EstimatedModel& model, const PolicyTable& policy);

/// V-hat^pi from the estimated on-policy model. Inactive states get 0.
ValueVector estimate_value(const EstimatedModel& model, const PolicyTable& policy,
                           double discount);

struct ValueUncertainty {
  ValueVector v_hat;
  Eigen::VectorXd bias;
  Eigen::MatrixXd cov;
  Eigen::VectorXd bias_rel;
  Eigen::VectorXd sigma_rel;
  int sample_count = 0;
  /// States the estimates refer to; the rest carry zeros.
  std::vector<bool> active;

  Eigen::VectorXd sigma() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// |x| / |v| with the zero-denominator convention: +inf when |v| < 1e-12 and
/// x != 0, 0 when both vanish.
double relative_to_value(double x, double value);

/// Fills bias_rel and sigma_rel from v_hat, bias and cov.
void compute_relative_errors(ValueUncertainty& u);

/// Parametric bootstrap for the bias and covariance of V-hat^pi.
///
/// Each of the `resamples` draws replaces every policy-relevant row
/// T-hat(s,a,.) by a sample from Dirichlet(N(s,a,.) + 1/|S|) over the observed
/// states, and every observed reward mean by the mean of a with-replacement
/// resample of its reward samples (constant rewards stay fixed). The drawn
/// model is solved exactly; bias is the mean draw minus V-hat and cov is the
/// sample covariance of the draws.
///
/// Throws ParameterError when resamples < 100 and MissingDataError when a
/// policy-relevant pair on an observed state has no data.
ValueUncertainty estimate_bias_cov(const EstimatedModel& model, const PolicyTable& policy,
                                   double discount, int resamples, std::uint64_t rng_seed);

/// Turns the estimates into an MDP for planning. Unobserved states become
/// zero-reward self loops; every action on an observed state must have data.
Mdp estimated_mdp(const EstimatedModel& model, double discount);

/// pi-hat(s,a) from action frequencies; states never left get a uniform row.
PolicyTable estimate_policy_from_actions(const Trace& trace);

}  // namespace rlrv
