#include "rlrv/harness.hpp"

#include <cmath>
#include <random>

namespace rlrv {

void PatrolConfig::validate() const {
  if (n_shifts < 1) throw ParameterError("patrol needs at least one shift");
  if (!(skip_probability >= 0.0 && skip_probability <= 1.0)) {
    throw ParameterError("skip probability must lie in [0, 1]");
  }
  for (double scale : reward_scale) {
    if (!(scale >= 0.0 && scale <= 3.0)) throw ParameterError("reward scales must lie in [0, 3]");
  }
  if (!(discount >= 0.0 && discount < 1.0)) throw ParameterError("discount must lie in [0, 1)");
}

Mdp build_patrol_mdp(const PatrolConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<double> arrival_reward(cfg.n_states());
  for (int t = 0; t < cfg.n_shifts; ++t) {
    for (int loc = 0; loc < kPatrolActions; ++loc) {
      std::uniform_real_distribution<double> draw(0.0, cfg.reward_scale[loc]);
      arrival_reward[patrol_state(t, loc)] = draw(rng);
    }
  }

  const double skip = cfg.skip_probability;
  const std::array<std::pair<int, double>, 3> advances{{{0, skip / 2}, {1, 1.0 - skip}, {2, skip / 2}}};
  Mdp mdp(cfg.n_states(), kPatrolActions, cfg.discount);
  for (StateIndex s = 0; s < cfg.n_states(); ++s) {
    for (ActionIndex a = 0; a < kPatrolActions; ++a) {
      for (const auto& [advance, prob] : advances) {
        if (prob == 0.0) continue;
        const StateIndex next = patrol_state((patrol_shift(s) + advance) % cfg.n_shifts, a);
        mdp.transition(s, a, next) += prob;
        mdp.reward(s, a, next) = arrival_reward[next];
      }
    }
  }
  return mdp;
}

PolicyTable patrol_schedule_policy(const PatrolConfig& cfg) {
  std::vector<ActionIndex> actions(cfg.n_states());
  for (StateIndex s = 0; s < cfg.n_states(); ++s) {
    const int t = patrol_shift(s);
    actions[s] = t <= 1 ? 1 : (t == 2 ? 2 : 0);
  }
  return PolicyTable::deterministic(actions, kPatrolActions);
}

namespace {

PolicyTable favouring(const PatrolConfig& cfg, ActionIndex favourite, double weight) {
  const double rest = (1.0 - weight) / (kPatrolActions - 1);
  PolicyTable policy(Eigen::MatrixXd::Constant(cfg.n_states(), kPatrolActions, rest));
  for (StateIndex s = 0; s < cfg.n_states(); ++s) policy(s, favourite) = weight;
  return policy;
}

}  // namespace

PolicyTable patrol_exploration_policy(const PatrolConfig& cfg) { return favouring(cfg, 1, 0.6); }

PolicyTable patrol_station_policy(const PatrolConfig& cfg) { return favouring(cfg, 2, 0.8); }

namespace {

/// Inverse-CDF draw from a probability row; falls back to the last positive
/// entry when round-off leaves u above the running sum.
int sample_index(const double* probs, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double total = 0.0;
  int last = 0;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    total += probs[i];
    last = i;
    if (u < total) return i;
  }
  return last;
}

}  // namespace

Trace run_policy(const Mdp& mdp, const PolicyTable& policy, std::int64_t n_transitions,
                 std::uint64_t seed, StateIndex initial_state) {
  if (n_transitions < 1) throw ParameterError("n_transitions must be at least 1");
  if (initial_state < 0 || initial_state >= mdp.n_states()) {
    throw ParameterError("initial state out of range");
  }
  mdp.validate();
  policy.validate();
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  // Row-major copy of pi so that each row is contiguous.
  std::vector<double> pi(static_cast<std::size_t>(n_s) * n_a);
  for (StateIndex s = 0; s < n_s; ++s) {
    for (ActionIndex a = 0; a < n_a; ++a) pi[static_cast<std::size_t>(s) * n_a + a] = policy(s, a);
  }
  const double* t = mdp.transition_data().data();

  std::mt19937_64 rng(seed);
  Trace trace{n_s, n_a, {}};
  trace.records.reserve(static_cast<std::size_t>(n_transitions));
  StateIndex s = initial_state;
  for (std::int64_t step = 0; step < n_transitions; ++step) {
    const ActionIndex a = sample_index(&pi[static_cast<std::size_t>(s) * n_a], n_a, rng);
    const StateIndex next =
        sample_index(t + (static_cast<std::size_t>(s) * n_a + a) * n_s, n_s, rng);
    trace.records.push_back({step, s, a, mdp.reward(s, a, next), next, std::nullopt});
    s = next;
  }
  return trace;
}

std::vector<TdPoint> td_evaluate(const Mdp& mdp, const PolicyTable& policy,
                                 const LearnerConfig& learner, std::int64_t n_transitions,
                                 const ActionValues& reference_q, StateIndex initial_state,
                                 const std::vector<bool>& mask) {
  if (!(learner.learning_rate >= 0.0 && learner.learning_rate <= 1.0)) {
    throw ParameterError("learning rate must lie in [0, 1]");
  }
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  std::vector<bool> measured = mask;
  if (measured.empty()) {
    measured.resize(static_cast<std::size_t>(n_s) * n_a);
    for (StateIndex s = 0; s < n_s; ++s) {
      for (ActionIndex a = 0; a < n_a; ++a) measured[s * n_a + a] = policy(s, a) > 0.0;
    }
  }
  if (measured.size() != static_cast<std::size_t>(n_s) * n_a) {
    throw ParameterError("mask must have one entry per state-action pair");
  }
  const auto norm = [&](const Eigen::VectorXd& diff) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) {
      if (measured[i]) worst = std::max(worst, std::abs(diff[i]));
    }
    return worst;
  };

  double q0 = 0.0;
  if (learner.initial_q) {
    q0 = *learner.initial_q;
  } else {
    q0 = mdp.reward_range().first / (1.0 - learner.discount);
  }
  ActionValues q(n_s, n_a, q0);

  std::vector<TdPoint> series;
  series.reserve(static_cast<std::size_t>(std::max<std::int64_t>(n_transitions, 0)) + 1);
  series.push_back({0, norm(q.flat() - reference_q.flat()), 0.0});
  if (n_transitions < 1) return series;

  // The trajectory is drawn up front; one extra step supplies the final a'.
  const Trace trace = run_policy(mdp, policy, n_transitions + 1, learner.rng_seed, initial_state);
  const double alpha = learner.learning_rate;
  for (std::int64_t k = 0; k < n_transitions; ++k) {
    const auto& now = trace.records[k];
    const auto& after = trace.records[k + 1];
    const double target = now.reward + learner.discount * q(after.state, after.action);
    const double old = q(now.state, now.action);
    q(now.state, now.action) = old + alpha * (target - old);
    const double moved = measured[now.state * n_a + now.action]
                             ? std::abs(q(now.state, now.action) - old)
                             : 0.0;
    series.push_back({k + 1, norm(q.flat() - reference_q.flat()), moved});
  }
  return series;
}

std::optional<std::int64_t> first_sustained_below(const std::vector<TdPoint>& series, double eps) {
  std::optional<std::int64_t> first;
  for (const auto& point : series) {
    if (point.delta_norm < eps) {
      if (!first) first = point.step;
    } else {
      first.reset();
    }
  }
  return first;
}

Mdp random_mdp(int n_states, int n_actions, std::uint64_t seed, double discount) {
  if (n_states < 1 || n_actions < 1) throw ParameterError("random MDP needs |S|, |A| >= 1");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit_gamma(1.0);  // Gamma(1) draws give Dirichlet(1)
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  Mdp mdp(n_states, n_actions, discount);
  for (StateIndex s = 0; s < n_states; ++s) {
    for (ActionIndex a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (StateIndex next = 0; next < n_states; ++next) {
        mdp.transition(s, a, next) = unit_gamma(rng);
        total += mdp.transition(s, a, next);
      }
      for (StateIndex next = 0; next < n_states; ++next) {
        mdp.transition(s, a, next) /= total;
        mdp.reward(s, a, next) = reward(rng);
      }
    }
  }
  return mdp;
}

}  // namespace rlrv
