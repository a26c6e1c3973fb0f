#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rlrv/common.hpp"

namespace rlrv {

using ValueVector = Eigen::VectorXd;

/// Finite MDP {S, A, T, R, gamma} with dense tensors indexed [s][a][s'].
class Mdp {
 public:
  Mdp(int n_states, int n_actions, double discount);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double discount() const { return discount_; }

  double transition(StateIndex s, ActionIndex a, StateIndex next) const {
    return transition_[index(s, a, next)];
  }
  double& transition(StateIndex s, ActionIndex a, StateIndex next) {
    return transition_[index(s, a, next)];
  }
  double reward(StateIndex s, ActionIndex a, StateIndex next) const {
    return reward_[index(s, a, next)];
  }
  double& reward(StateIndex s, ActionIndex a, StateIndex next) {
    return reward_[index(s, a, next)];
  }

  /// Expected immediate reward sum_s' T(s,a,s') R(s,a,s').
  double expected_reward(StateIndex s, ActionIndex a) const;

  /// Smallest and largest reward over triples with positive probability.
  std::pair<double, double> reward_range() const;

  /// Throws ModelError unless every T row is a distribution (within 1e-9),
  /// rewards are finite and 0 <= gamma < 1.
  void validate() const;

  const std::vector<double>& transition_data() const { return transition_; }
  const std::vector<double>& reward_data() const { return reward_; }

 private:
  std::size_t index(StateIndex s, ActionIndex a, StateIndex next) const {
    return (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + next;
  }

  int n_states_;
  int n_actions_;
  double discount_;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

/// Stochastic policy pi(s,a); deterministic policies are one-hot rows.
class PolicyTable {
 public:
  PolicyTable(int n_states, int n_actions);
  explicit PolicyTable(Eigen::MatrixXd probs);

  static PolicyTable uniform(int n_states, int n_actions);
  static PolicyTable deterministic(const std::vector<ActionIndex>& actions,
                                   int n_actions);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }

  double operator()(StateIndex s, ActionIndex a) const { return probs_(s, a); }
  double& operator()(StateIndex s, ActionIndex a) { return probs_(s, a); }
  const Eigen::MatrixXd& matrix() const { return probs_; }

  /// Throws ModelError unless rows are distributions within 1e-9.
  void validate() const;

  friend bool operator==(const PolicyTable& a, const PolicyTable& b) {
    return a.probs_ == b.probs_;
  }

 private:
  Eigen::MatrixXd probs_;
};

/// Q(s,a) stored as a flat vector with index s * |A| + a, the same ordering
/// the update operator B uses.
class ActionValues {
 public:
  ActionValues(int n_states, int n_actions, double fill = 0.0);
  ActionValues(int n_states, int n_actions, Eigen::VectorXd flat);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double operator()(StateIndex s, ActionIndex a) const { return values_[s * n_actions_ + a]; }
  double& operator()(StateIndex s, ActionIndex a) { return values_[s * n_actions_ + a]; }

  const Eigen::VectorXd& flat() const { return values_; }
  Eigen::VectorXd& flat() { return values_; }

 private:
  int n_states_;
  int n_actions_;
  Eigen::VectorXd values_;
};

/// T^pi(s,s') = sum_a pi(s,a) T(s,a,s').
Eigen::MatrixXd policy_transition_matrix(const Mdp& mdp, const PolicyTable& policy);

/// R^pi(s) = sum_a pi(s,a) sum_s' T(s,a,s') R(s,a,s').
Eigen::VectorXd policy_reward_vector(const Mdp& mdp, const PolicyTable& policy);

/// Solves V = r + gamma * P V by dense LU. Shared by the exact and the
/// estimated value computations.
ValueVector solve_discounted_values(const Eigen::MatrixXd& transition,
                                    const Eigen::VectorXd& reward, double discount);

ValueVector value_of_policy(const Mdp& mdp, const PolicyTable& policy);

ActionValues action_value_of_policy(const Mdp& mdp, const PolicyTable& policy);

/// One-step lookahead Q for an arbitrary value vector.
ActionValues lookahead(const Mdp& mdp, const ValueVector& value);

/// Greedy one-hot policy; ties go to the lowest action index.
PolicyTable policy_improvement(const Mdp& mdp, const ValueVector& value);

struct PolicyIterationResult {
  PolicyTable policy;
  ValueVector value;
  int improvements = 0;
};

/// Alternates exact evaluation and greedy improvement until the policy is
/// unchanged. Throws ModelError after |A|^|S| + 1 improvements.
PolicyIterationResult policy_iteration(const Mdp& mdp, const PolicyTable& initial);

/// Expected on-policy update applied to every (s,a) at once:
/// Q'(s,a) = (1-alpha) Q(s,a) + alpha sum_s' T(s,a,s') [R(s,a,s') + gamma sum_a' pi(s',a') Q(s',a')].
ActionValues full_q_update(const Mdp& mdp, const PolicyTable& policy, const ActionValues& q,
                           double learning_rate);

}  // namespace rlrv
