#include "rlrv/estimation.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace rlrv {

EstimatedModel::EstimatedModel(int n_states, int n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      min_reward_(std::numeric_limits<double>::infinity()) {
  if (n_states <= 0 || n_actions <= 0) {
    throw ParameterError("estimated model needs at least one state and one action");
  }
  const auto pairs = static_cast<std::size_t>(n_states) * n_actions;
  pair_counts_.assign(pairs, 0);
  triple_counts_.assign(pairs * n_states, 0);
  reward_mean_.assign(pairs * n_states, 0.0);
  reward_samples_.resize(pairs * n_states);
  observed_.assign(n_states, false);
}

void EstimatedModel::ingest(const TransitionRecord& record) {
  const auto in_range = [](int i, int n) { return i >= 0 && i < n; };
  if (!in_range(record.state, n_states_) || !in_range(record.next_state, n_states_) ||
      !in_range(record.action, n_actions_) || !std::isfinite(record.reward)) {
    std::ostringstream msg;
    msg << "record at step " << record.step << " does not fit |S|=" << n_states_
        << ", |A|=" << n_actions_;
    throw InstrumentationFault(msg.str());
  }
  const std::size_t p = pair(record.state, record.action);
  const std::size_t t = triple(record.state, record.action, record.next_state);
  const bool was_min = pair_counts_[p] == min_visit_;
  ++pair_counts_[p];
  ++triple_counts_[t];
  reward_mean_[t] += (record.reward - reward_mean_[t]) / static_cast<double>(triple_counts_[t]);
  reward_samples_[t].push_back(record.reward);
  observed_[record.state] = true;
  observed_[record.next_state] = true;
  min_reward_ = std::min(min_reward_, record.reward);
  ++n_records_;
  if (was_min) {
    min_visit_ = *std::min_element(pair_counts_.begin(), pair_counts_.end());
  }
}

double EstimatedModel::t_hat(StateIndex s, ActionIndex a, StateIndex next) const {
  const auto n = count(s, a);
  return n == 0 ? 0.0 : static_cast<double>(count(s, a, next)) / static_cast<double>(n);
}

double EstimatedModel::expected_reward(StateIndex s, ActionIndex a) const {
  double total = 0.0;
  for (StateIndex next = 0; next < n_states_; ++next) {
    total += t_hat(s, a, next) * r_hat(s, a, next);
  }
  return total;
}

bool EstimatedModel::reward_is_constant(StateIndex s, ActionIndex a, StateIndex next) const {
  const auto& samples = reward_samples_[triple(s, a, next)];
  if (samples.empty()) return true;
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return *lo == *hi;
}

EstimatedModel build_model(std::span<const TransitionRecord> records, int n_states,
                           int n_actions) {
  EstimatedModel model(n_states, n_actions);
  for (const auto& record : records) model.ingest(record);
  return model;
}

EstimatedModel build_model(const Trace& trace) {
  return build_model(trace.records, trace.n_states, trace.n_actions);
}

std::vector<StateAction> uncovered_pairs(const EstimatedModel& model, const PolicyTable& policy) {
  if (policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions()) {
    throw ModelError("policy shape does not match the estimated model");
  }
  std::vector<StateAction> missing;
  for (StateIndex s = 0; s < model.n_states(); ++s) {
    if (!model.observed(s)) continue;
    for (ActionIndex a = 0; a < model.n_actions(); ++a) {
      if (policy(s, a) > 0.0 && model.count(s, a) == 0) missing.push_back({s, a});
    }
  }
  return missing;
}

namespace {

std::string describe_pairs(const std::vector<StateAction>& pairs) {
  std::ostringstream msg;
  msg << "min N(s,a)=0 on " << pairs.size() << " policy-relevant pair(s):";
  const std::size_t shown = std::min<std::size_t>(pairs.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) {
    msg << " (" << pairs[i].state << "," << pairs[i].action << ")";
  }
  if (shown < pairs.size()) msg << " ...";
  return msg.str();
}

void require_coverage(const EstimatedModel& model, const PolicyTable& policy) {
  if (model.n_records() == 0) {
    throw MissingDataError("min N(s,a)=0 (no transitions observed)", {});
  }
  auto missing = uncovered_pairs(model, policy);
  if (!missing.empty()) {
    std::string what = describe_pairs(missing);
    throw MissingDataError(std::move(what), std::move(missing));
  }
}

/// Observed states in index order and the inverse map (-1 when inactive).
struct ActiveSet {
  std::vector<StateIndex> states;
  std::vector<int> position;
};

ActiveSet active_set(const EstimatedModel& model) {
  ActiveSet set;
  set.position.assign(model.n_states(), -1);
  for (StateIndex s = 0; s < model.n_states(); ++s) {
    if (model.observed(s)) {
      set.position[s] = static_cast<int>(set.states.size());
      set.states.push_back(s);
    }
  }
  return set;
}

Eigen::VectorXd scatter(const ActiveSet& set, const Eigen::VectorXd& compact, int n_states) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_states);
  for (std::size_t i = 0; i < set.states.size(); ++i) full[set.states[i]] = compact[i];
  return full;
}

}  // namespace

OnPolicyModel on_policy_projection(const EstimatedModel& model, const PolicyTable& policy) {
  require_coverage(model, policy);
  const int n = model.n_states();
  OnPolicyModel out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n),
                    model.observed_states()};
  for (StateIndex s = 0; s < n; ++s) {
    if (!out.active[s]) continue;
    for (ActionIndex a = 0; a < model.n_actions(); ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      for (StateIndex next = 0; next < n; ++next) {
        const double p = model.t_hat(s, a, next);
        if (p == 0.0) continue;
        out.t_pi(s, next) += w * p;
        out.r_pi[s] += w * p * model.r_hat(s, a, next);
      }
    }
  }
  return out;
}

ValueVector estimate_value(const EstimatedModel& model, const PolicyTable& policy,
                           double discount) {
  const OnPolicyModel projected = on_policy_projection(model, policy);
  // Inactive rows are zero, so those states solve to V = 0 and covered rows
  // never lead into them.
  return solve_discounted_values(projected.t_pi, projected.r_pi, discount);
}

double relative_to_value(double x, double value) {
  if (std::abs(value) < 1e-12) {
    return x == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::abs(x) / std::abs(value);
}

void compute_relative_errors(ValueUncertainty& u) {
  const Eigen::Index n = u.v_hat.size();
  const Eigen::VectorXd sigma = u.sigma();
  u.bias_rel = Eigen::VectorXd::Zero(n);
  u.sigma_rel = Eigen::VectorXd::Zero(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    if (!u.active.empty() && !u.active[s]) continue;
    u.bias_rel[s] = relative_to_value(u.bias[s], u.v_hat[s]);
    u.sigma_rel[s] = relative_to_value(sigma[s], u.v_hat[s]);
  }
}

namespace {

/// Everything one bootstrap draw needs about a row (s,a) with pi(s,a) > 0.
struct BootstrapRow {
  int source;             // compact index of s
  double weight;          // pi(s,a)
  std::vector<double> concentration;  // N(s,a,j) + kappa over active j
  std::vector<double> reward;         // R-hat(s,a,j), pair mean where unobserved
  std::vector<int> resampled;         // active j whose reward samples vary
  StateIndex state;
  ActionIndex action;
};

double resampled_mean(std::span<const double> samples, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) total += samples[pick(rng)];
  return total / static_cast<double>(samples.size());
}

}  // namespace

ValueUncertainty estimate_bias_cov(const EstimatedModel& model, const PolicyTable& policy,
                                   double discount, int resamples, std::uint64_t rng_seed) {
  if (resamples < 100) throw ParameterError("bootstrap needs at least 100 resamples");
  if (!(discount >= 0.0 && discount < 1.0)) throw ParameterError("discount must lie in [0, 1)");
  require_coverage(model, policy);

  const int n_states = model.n_states();
  const ActiveSet set = active_set(model);
  const int n = static_cast<int>(set.states.size());
  const double kappa = 1.0 / n_states;

  std::vector<BootstrapRow> rows;
  for (int i = 0; i < n; ++i) {
    const StateIndex s = set.states[i];
    for (ActionIndex a = 0; a < model.n_actions(); ++a) {
      if (policy(s, a) == 0.0) continue;
      BootstrapRow row{i, policy(s, a), {}, {}, {}, s, a};
      const double pair_mean = model.expected_reward(s, a);
      row.concentration.resize(n);
      row.reward.resize(n);
      for (int j = 0; j < n; ++j) {
        const StateIndex next = set.states[j];
        const auto c = model.count(s, a, next);
        row.concentration[j] = static_cast<double>(c) + kappa;
        row.reward[j] = c > 0 ? model.r_hat(s, a, next) : pair_mean;
        if (c > 0 && !model.reward_is_constant(s, a, next)) row.resampled.push_back(j);
      }
      rows.push_back(std::move(row));
    }
  }

  // Point estimate on the same compact system.
  Eigen::MatrixXd t_hat = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r_hat = Eigen::VectorXd::Zero(n);
  for (const auto& row : rows) {
    for (int j = 0; j < n; ++j) {
      const double p = model.t_hat(row.state, row.action, set.states[j]);
      t_hat(row.source, j) += row.weight * p;
      r_hat[row.source] += row.weight * p * row.reward[j];
    }
  }
  const Eigen::VectorXd v_hat = solve_discounted_values(t_hat, r_hat, discount);

  std::mt19937_64 rng(rng_seed);
  Eigen::MatrixXd draws(resamples, n);
  std::vector<double> probs(n);
  std::vector<double> rewards;
  for (int k = 0; k < resamples; ++k) {
    Eigen::MatrixXd t_draw = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd r_draw = Eigen::VectorXd::Zero(n);
    for (const auto& row : rows) {
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        std::gamma_distribution<double> gamma(row.concentration[j], 1.0);
        probs[j] = gamma(rng);
        total += probs[j];
      }
      rewards = row.reward;
      for (int j : row.resampled) {
        rewards[j] = resampled_mean(model.reward_samples(row.state, row.action, set.states[j]), rng);
      }
      for (int j = 0; j < n; ++j) {
        const double p = probs[j] / total;
        t_draw(row.source, j) += row.weight * p;
        r_draw[row.source] += row.weight * p * rewards[j];
      }
    }
    draws.row(k) = solve_discounted_values(t_draw, r_draw, discount).transpose();
  }

  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(resamples - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();

  ValueUncertainty u;
  u.v_hat = scatter(set, v_hat, n_states);
  u.bias = scatter(set, mean.transpose() - v_hat, n_states);
  u.cov = Eigen::MatrixXd::Zero(n_states, n_states);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) u.cov(set.states[i], set.states[j]) = cov(i, j);
  }
  u.sample_count = resamples;
  u.active = model.observed_states();
  compute_relative_errors(u);
  return u;
}

Mdp estimated_mdp(const EstimatedModel& model, double discount) {
  Mdp mdp(model.n_states(), model.n_actions(), discount);
  std::vector<StateAction> missing;
  for (StateIndex s = 0; s < model.n_states(); ++s) {
    for (ActionIndex a = 0; a < model.n_actions(); ++a) {
      if (!model.observed(s)) {
        mdp.transition(s, a, s) = 1.0;
        continue;
      }
      if (model.count(s, a) == 0) {
        missing.push_back({s, a});
        continue;
      }
      for (StateIndex next = 0; next < model.n_states(); ++next) {
        mdp.transition(s, a, next) = model.t_hat(s, a, next);
        mdp.reward(s, a, next) = model.r_hat(s, a, next);
      }
    }
  }
  if (model.n_records() == 0) throw MissingDataError("min N(s,a)=0 (no transitions observed)", {});
  if (!missing.empty()) {
    std::string what = describe_pairs(missing);
    throw MissingDataError(std::move(what), std::move(missing));
  }
  return mdp;
}

PolicyTable estimate_policy_from_actions(const Trace& trace) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(trace.n_states, trace.n_actions);
  for (const auto& r : trace.records) counts(r.state, r.action) += 1.0;
  for (Eigen::Index s = 0; s < counts.rows(); ++s) {
    const double total = counts.row(s).sum();
    if (total == 0.0) {
      counts.row(s).setConstant(1.0 / trace.n_actions);
    } else {
      counts.row(s) /= total;
    }
  }
  return PolicyTable(std::move(counts));
}

}  // namespace rlrv
