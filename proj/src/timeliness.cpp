#include "rlrv/timeliness.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rlrv {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::NewPolicy:
      return "NewPolicy";
    case Scenario::NewReward:
      return "NewReward";
    case Scenario::NewEnvironment:
      return "NewEnvironment";
  }
  return "?";
}

void TimelinessInputs::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ParameterError("learning rate must lie in (0, 1]");
  }
  if (!(discount >= 0.0 && discount < 1.0)) throw ParameterError("discount must lie in [0, 1)");
  if (!(convergence_eps > 0.0)) throw ParameterError("convergence eps must be positive");
  if (!(negligibility >= 0.0)) throw ParameterError("negligibility must be non-negative");
  if (!(r_min <= r_max)) throw ParameterError("r_min must not exceed r_max");
  if (max_transitions < 0) throw ParameterError("max_transitions must be non-negative");
}

std::int64_t compute_m_u(const TimelinessInputs& inputs) {
  const double gamma_hat = inputs.contraction_factor();
  if (!(gamma_hat < 1.0)) throw ParameterError("contraction factor must be below 1");
  if (!(inputs.convergence_eps > 0.0)) throw ParameterError("convergence eps must be positive");
  const double delta = inputs.initial_error_bound();
  if (delta <= inputs.convergence_eps) return 0;
  if (gamma_hat <= 0.0) return 1;  // one full backup is exact
  const double updates = std::log(delta / inputs.convergence_eps) / std::log(1.0 / gamma_hat);
  return std::max<std::int64_t>(1, ceil_count(updates));
}

SteadyState steady_state(const Eigen::MatrixXd& t_pi) {
  const Eigen::Index n = t_pi.rows();
  const Eigen::MatrixXd balance = Eigen::MatrixXd::Identity(n, n) - t_pi.transpose();

  Eigen::FullPivLU<Eigen::MatrixXd> rank_check(balance);
  rank_check.setThreshold(1e-10);
  SteadyState out;
  out.unique = rank_check.rank() == n - 1;

  if (out.unique) {
    Eigen::MatrixXd system = balance;
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    out.probs = system.fullPivLu().solve(rhs);
  } else {
    Eigen::MatrixXd system(n + 1, n);
    system.topRows(n) = balance;
    system.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    out.probs = system.completeOrthogonalDecomposition().solve(rhs);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.probs[i] < 1e-12) out.probs[i] = 0.0;
  }
  out.probs /= out.probs.sum();
  return out;
}

Applicable<TimelinessBound> compute_m_t(std::int64_t m_u, const SteadyState& steady,
                                        const PolicyTable& policy, double omega) {
  if (!steady.unique) return NotApplicable{"steady state is not unique"};
  if (policy.n_states() != steady.probs.size()) {
    throw ModelError("policy and steady state disagree on |S|");
  }
  TimelinessBound bound;
  bound.m_u = m_u;
  bound.m_t_worst = worst_case_m_t(m_u, omega);
  double worst = 0.0;
  for (StateIndex s = 0; s < policy.n_states(); ++s) {
    for (ActionIndex a = 0; a < policy.n_actions(); ++a) {
      const double visit = steady.probs[s] * policy(s, a);
      if (!(visit > omega)) continue;
      bound.omega_set.push_back({s, a});
      if (1.0 / visit > worst) {
        worst = 1.0 / visit;
        bound.limiting_pair = StateAction{s, a};
      }
    }
  }
  if (bound.omega_set.empty()) {
    bound.warning = "no state-action pair above the negligibility threshold";
    return bound;
  }
  bound.m_t = ceil_count(static_cast<double>(m_u) * worst);
  return bound;
}

std::optional<std::int64_t> worst_case_m_t(std::int64_t m_u, double omega) {
  if (!(omega > 0.0)) return std::nullopt;
  return ceil_count(static_cast<double>(m_u) / omega);
}

TimelinessVerdict timeliness_verdict_from(std::int64_t transitions, std::int64_t max_transitions) {
  TimelinessVerdict v;
  v.compared = transitions;
  v.status = transitions <= max_transitions ? Status::Satisfied : Status::Violated;
  std::ostringstream msg;
  msg << transitions << (transitions <= max_transitions ? " <= " : " > ") << max_transitions;
  v.reason = msg.str();
  return v;
}

namespace {

TimelinessVerdict unverified(Scenario scenario, std::string reason) {
  TimelinessVerdict v;
  v.scenario = scenario;
  v.reason = std::move(reason);
  return v;
}

std::optional<TimelinessVerdict> worst_case_only(Scenario scenario, const TimelinessInputs& inputs) {
  if (scenario != Scenario::NewEnvironment) return std::nullopt;
  const std::int64_t m_u = compute_m_u(inputs);
  const auto worst = worst_case_m_t(m_u, inputs.negligibility);
  if (!worst) {
    return unverified(scenario,
                      "new environment with omega = 0: the transition model must be re-learned");
  }
  TimelinessVerdict v = timeliness_verdict_from(*worst, inputs.max_transitions);
  v.scenario = scenario;
  TimelinessBound bound;
  bound.m_u = m_u;
  bound.m_t = *worst;
  bound.m_t_worst = worst;
  v.bound = bound;
  return v;
}

TimelinessVerdict from_chain(Scenario scenario, const TimelinessInputs& inputs,
                             const SteadyState& steady, const PolicyTable& policy) {
  const std::int64_t m_u = compute_m_u(inputs);
  auto bound = compute_m_t(m_u, steady, policy, inputs.negligibility);
  if (auto* na = std::get_if<NotApplicable>(&bound)) return unverified(scenario, na->reason);
  const auto& b = std::get<TimelinessBound>(bound);
  TimelinessVerdict v = timeliness_verdict_from(b.m_t, inputs.max_transitions);
  v.scenario = scenario;
  v.bound = b;
  return v;
}

}  // namespace

TimelinessVerdict check_timeliness(Scenario scenario, const TimelinessInputs& inputs,
                                   const EstimatedModel& model, const PolicyTable& policy) {
  try {
    inputs.validate();
    if (auto v = worst_case_only(scenario, inputs)) return *v;
    const OnPolicyModel projected = on_policy_projection(model, policy);
    // Chain over the observed states only; unobserved states get p = 0.
    std::vector<StateIndex> states;
    for (StateIndex s = 0; s < model.n_states(); ++s) {
      if (projected.active[s]) states.push_back(s);
    }
    const auto n = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXd compact(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) compact(i, j) = projected.t_pi(states[i], states[j]);
    }
    const SteadyState local = steady_state(compact);
    SteadyState full{Eigen::VectorXd::Zero(model.n_states()), local.unique};
    for (Eigen::Index i = 0; i < n; ++i) full.probs[states[i]] = local.probs[i];
    return from_chain(scenario, inputs, full, policy);
  } catch (const MissingDataError& e) {
    return unverified(scenario, e.what());
  } catch (const ParameterError& e) {
    return unverified(scenario, e.what());
  }
}

TimelinessVerdict check_timeliness(Scenario scenario, const TimelinessInputs& inputs,
                                   const Mdp& mdp, const PolicyTable& policy) {
  try {
    inputs.validate();
    if (auto v = worst_case_only(scenario, inputs)) return *v;
    return from_chain(scenario, inputs, steady_state(policy_transition_matrix(mdp, policy)),
                      policy);
  } catch (const ParameterError& e) {
    return unverified(scenario, e.what());
  }
}

ActionValues UpdateOperator::apply(const ActionValues& q) const {
  return ActionValues(q.n_states(), q.n_actions(), alpha_r + b_matrix * q.flat());
}

UpdateOperator build_update_operator(const Mdp& mdp, const PolicyTable& policy,
                                     double learning_rate) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw ModelError("policy shape does not match the MDP");
  }
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  const Eigen::Index dim = static_cast<Eigen::Index>(n_s) * n_a;
  const double alpha = learning_rate;
  const double gamma = mdp.discount();

  UpdateOperator op;
  op.b_matrix = (1.0 - alpha) * Eigen::MatrixXd::Identity(dim, dim);
  op.alpha_r = Eigen::VectorXd::Zero(dim);
  op.contraction_factor = 1.0 - alpha * (1.0 - gamma);
  for (StateIndex s = 0; s < n_s; ++s) {
    for (ActionIndex a = 0; a < n_a; ++a) {
      const Eigen::Index row = static_cast<Eigen::Index>(s) * n_a + a;
      op.alpha_r[row] = alpha * mdp.expected_reward(s, a);
      for (StateIndex next = 0; next < n_s; ++next) {
        const double p = mdp.transition(s, a, next);
        if (p == 0.0) continue;
        for (ActionIndex b = 0; b < n_a; ++b) {
          op.b_matrix(row, static_cast<Eigen::Index>(next) * n_a + b) +=
              alpha * gamma * p * policy(next, b);
        }
      }
    }
  }
  return op;
}

}  // namespace rlrv
