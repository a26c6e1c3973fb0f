#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rlrv/estimation.hpp"
#include "rlrv/mdp.hpp"

namespace rlrv {

enum class Scenario { NewPolicy, NewReward, NewEnvironment };

const char* to_string(Scenario s);

struct TimelinessInputs {
  double learning_rate = 0.75;
  double discount = 0.5;
  double convergence_eps = 0.05;
  double negligibility = 0.0;
  double r_min = 0.0;
  double r_max = 3.0;
  std::int64_t max_transitions = 100;

  /// 1 - alpha (1 - gamma).
  double contraction_factor() const { return 1.0 - learning_rate * (1.0 - discount); }
  /// Largest possible initial error (R_max - R_min) / (1 - gamma).
  double initial_error_bound() const { return (r_max - r_min) / (1.0 - discount); }

  /// Throws ParameterError when a field is out of range.
  void validate() const;
};

/// Number of full expected updates that shrink the initial error below eps.
/// Throws ParameterError when the contraction factor is not below 1.
std::int64_t compute_m_u(const TimelinessInputs& inputs);

struct SteadyState {
  Eigen::VectorXd probs;
  bool unique = true;
};

/// Stationary distribution of a row-stochastic chain by a direct linear solve,
/// so periodic chains are handled. For reducible chains `unique` is false and
/// some stationary distribution is returned.
SteadyState steady_state(const Eigen::MatrixXd& t_pi);

struct TimelinessBound {
  std::int64_t m_u = 0;
  std::int64_t m_t = 0;
  std::optional<std::int64_t> m_t_worst;
  /// Pairs with p(s) pi(s,a) > omega.
  std::vector<StateAction> omega_set;
  std::optional<StateAction> limiting_pair;
  std::string warning;
};

/// M_t = ceil(M_u * max over the omega set of 1 / (p(s) pi(s,a))).
/// Not applicable when the steady state is not unique.
Applicable<TimelinessBound> compute_m_t(std::int64_t m_u, const SteadyState& steady,
                                        const PolicyTable& policy, double omega);

/// ceil(M_u / omega); nullopt when omega <= 0.
std::optional<std::int64_t> worst_case_m_t(std::int64_t m_u, double omega);

struct TimelinessVerdict {
  Status status = Status::Unverified;
  Scenario scenario = Scenario::NewPolicy;
  std::string reason;
  std::optional<TimelinessBound> bound;
  /// The transition count compared with the limit.
  std::optional<std::int64_t> compared;
};

/// Satisfied iff transitions <= max_transitions.
TimelinessVerdict timeliness_verdict_from(std::int64_t transitions, std::int64_t max_transitions);

/// New policy or reward: the bound uses T-hat from the model. New environment:
/// only the worst case bound applies, and with omega = 0 nothing can be said.
TimelinessVerdict check_timeliness(Scenario scenario, const TimelinessInputs& inputs,
                                   const EstimatedModel& model, const PolicyTable& policy);

/// Same, with a known transition function.
TimelinessVerdict check_timeliness(Scenario scenario, const TimelinessInputs& inputs,
                                   const Mdp& mdp, const PolicyTable& policy);

/// Q_{k+1} = alpha_r + B Q_k over flat (s,a) vectors.
struct UpdateOperator {
  Eigen::MatrixXd b_matrix;
  Eigen::VectorXd alpha_r;
  double contraction_factor = 0.0;

  ActionValues apply(const ActionValues& q) const;
};

UpdateOperator build_update_operator(const Mdp& mdp, const PolicyTable& policy,
                                     double learning_rate);

}  // namespace rlrv
