#include "rlrv/mdp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rlrv {

namespace {

constexpr double kRowTolerance = 1e-9;

}  // namespace

Mdp::Mdp(int n_states, int n_actions, double discount)
    : n_states_(n_states), n_actions_(n_actions), discount_(discount) {
  if (n_states <= 0 || n_actions <= 0) {
    throw ModelError("MDP needs at least one state and one action");
  }
  const auto size = static_cast<std::size_t>(n_states) * n_actions * n_states;
  transition_.assign(size, 0.0);
  reward_.assign(size, 0.0);
}

double Mdp::expected_reward(StateIndex s, ActionIndex a) const {
  double total = 0.0;
  for (StateIndex next = 0; next < n_states_; ++next) {
    total += transition(s, a, next) * reward(s, a, next);
  }
  return total;
}

std::pair<double, double> Mdp::reward_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < reward_.size(); ++i) {
    if (transition_[i] > 0.0) {
      lo = std::min(lo, reward_[i]);
      hi = std::max(hi, reward_[i]);
    }
  }
  return {lo, hi};
}

void Mdp::validate() const {
  if (!(discount_ >= 0.0 && discount_ < 1.0)) {
    throw ModelError("discount must lie in [0, 1)");
  }
  for (StateIndex s = 0; s < n_states_; ++s) {
    for (ActionIndex a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (StateIndex next = 0; next < n_states_; ++next) {
        const double p = transition(s, a, next);
        if (!(p >= 0.0) || !std::isfinite(reward(s, a, next))) {
          std::ostringstream msg;
          msg << "invalid transition or reward at (" << s << "," << a << "," << next << ")";
          throw ModelError(msg.str());
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        std::ostringstream msg;
        msg << "transition row (" << s << "," << a << ") sums to " << sum;
        throw ModelError(msg.str());
      }
    }
  }
}

PolicyTable::PolicyTable(int n_states, int n_actions)
    : probs_(Eigen::MatrixXd::Zero(n_states, n_actions)) {}

PolicyTable::PolicyTable(Eigen::MatrixXd probs) : probs_(std::move(probs)) {}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  return PolicyTable(Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions));
}

PolicyTable PolicyTable::deterministic(const std::vector<ActionIndex>& actions,
                                       int n_actions) {
  PolicyTable policy(static_cast<int>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    policy(static_cast<StateIndex>(s), actions[s]) = 1.0;
  }
  return policy;
}

void PolicyTable::validate() const {
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    if ((probs_.row(s).array() < 0.0).any() || (probs_.row(s).array() > 1.0).any()) {
      throw ModelError("policy entries must lie in [0, 1]");
    }
    if (std::abs(probs_.row(s).sum() - 1.0) > kRowTolerance) {
      std::ostringstream msg;
      msg << "policy row " << s << " sums to " << probs_.row(s).sum();
      throw ModelError(msg.str());
    }
  }
}

ActionValues::ActionValues(int n_states, int n_actions, double fill)
    : n_states_(n_states),
      n_actions_(n_actions),
      values_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_states) * n_actions, fill)) {}

ActionValues::ActionValues(int n_states, int n_actions, Eigen::VectorXd flat)
    : n_states_(n_states), n_actions_(n_actions), values_(std::move(flat)) {
  if (values_.size() != static_cast<Eigen::Index>(n_states) * n_actions) {
    throw ModelError("action-value vector has the wrong size");
  }
}

static void check_shapes(const Mdp& mdp, const PolicyTable& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw ModelError("policy shape does not match the MDP");
  }
}

Eigen::MatrixXd policy_transition_matrix(const Mdp& mdp, const PolicyTable& policy) {
  check_shapes(mdp, policy);
  const int n = mdp.n_states();
  Eigen::MatrixXd t_pi = Eigen::MatrixXd::Zero(n, n);
  for (StateIndex s = 0; s < n; ++s) {
    for (ActionIndex a = 0; a < mdp.n_actions(); ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      for (StateIndex next = 0; next < n; ++next) {
        t_pi(s, next) += w * mdp.transition(s, a, next);
      }
    }
  }
  return t_pi;
}

Eigen::VectorXd policy_reward_vector(const Mdp& mdp, const PolicyTable& policy) {
  check_shapes(mdp, policy);
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(mdp.n_states());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    for (ActionIndex a = 0; a < mdp.n_actions(); ++a) {
      if (policy(s, a) != 0.0) r_pi[s] += policy(s, a) * mdp.expected_reward(s, a);
    }
  }
  return r_pi;
}

ValueVector solve_discounted_values(const Eigen::MatrixXd& transition,
                                    const Eigen::VectorXd& reward, double discount) {
  const Eigen::Index n = reward.size();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - discount * transition;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  // I - gamma P is strictly diagonally dominant for a (sub)stochastic P and
  // gamma < 1, so a vanishing pivot means the inputs broke an invariant.
  if (!(lu.rcond() > 1e-14)) {
    throw ModelError("value system is singular");
  }
  ValueVector v = lu.solve(reward);
  if (!v.allFinite()) throw ModelError("value system produced non-finite values");
  return v;
}

ValueVector value_of_policy(const Mdp& mdp, const PolicyTable& policy) {
  mdp.validate();
  policy.validate();
  return solve_discounted_values(policy_transition_matrix(mdp, policy),
                                 policy_reward_vector(mdp, policy), mdp.discount());
}

ActionValues lookahead(const Mdp& mdp, const ValueVector& value) {
  ActionValues q(mdp.n_states(), mdp.n_actions());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    for (ActionIndex a = 0; a < mdp.n_actions(); ++a) {
      double total = 0.0;
      for (StateIndex next = 0; next < mdp.n_states(); ++next) {
        const double p = mdp.transition(s, a, next);
        if (p != 0.0) total += p * (mdp.reward(s, a, next) + mdp.discount() * value[next]);
      }
      q(s, a) = total;
    }
  }
  return q;
}

ActionValues action_value_of_policy(const Mdp& mdp, const PolicyTable& policy) {
  return lookahead(mdp, value_of_policy(mdp, policy));
}

PolicyTable policy_improvement(const Mdp& mdp, const ValueVector& value) {
  const ActionValues q = lookahead(mdp, value);
  PolicyTable greedy(mdp.n_states(), mdp.n_actions());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    // Values within round-off of the incumbent count as ties so that policy
    // iteration cannot cycle on equal actions.
    ActionIndex best = 0;
    for (ActionIndex a = 1; a < mdp.n_actions(); ++a) {
      if (q(s, a) > q(s, best) + 1e-12 * (1.0 + std::abs(q(s, best)))) best = a;
    }
    greedy(s, best) = 1.0;
  }
  return greedy;
}

PolicyIterationResult policy_iteration(const Mdp& mdp, const PolicyTable& initial) {
  const double limit = std::pow(static_cast<double>(mdp.n_actions()), mdp.n_states()) + 1.0;
  PolicyTable current = initial;
  ValueVector value = value_of_policy(mdp, current);
  for (int improvements = 1;; ++improvements) {
    PolicyTable next = policy_improvement(mdp, value);
    if (next == current) return {std::move(current), std::move(value), improvements};
    if (improvements >= limit) {
      throw ModelError("policy iteration exceeded |A|^|S| + 1 improvements");
    }
    current = std::move(next);
    value = value_of_policy(mdp, current);
  }
}

ActionValues full_q_update(const Mdp& mdp, const PolicyTable& policy, const ActionValues& q,
                           double learning_rate) {
  check_shapes(mdp, policy);
  // Expected next-step value under pi for every state.
  Eigen::VectorXd next_value = Eigen::VectorXd::Zero(mdp.n_states());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    for (ActionIndex a = 0; a < mdp.n_actions(); ++a) next_value[s] += policy(s, a) * q(s, a);
  }
  ActionValues out(mdp.n_states(), mdp.n_actions());
  for (StateIndex s = 0; s < mdp.n_states(); ++s) {
    for (ActionIndex a = 0; a < mdp.n_actions(); ++a) {
      double target = 0.0;
      for (StateIndex next = 0; next < mdp.n_states(); ++next) {
        const double p = mdp.transition(s, a, next);
        if (p != 0.0) target += p * (mdp.reward(s, a, next) + mdp.discount() * next_value[next]);
      }
      out(s, a) = (1.0 - learning_rate) * q(s, a) + learning_rate * target;
    }
  }
  return out;
}

}  // namespace rlrv
