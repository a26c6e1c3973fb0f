#include "rlrv/quality.hpp"

#include <cmath>
#include <sstream>

namespace rlrv {

void QualityThresholds::validate() const {
  if (!(max_bias_rel > 0.0) || !(max_sigma_rel > 0.0)) {
    throw ParameterError("quality thresholds must be strictly positive");
  }
}

QualityVerdict quality_verdict_from(const ValueUncertainty& u, const QualityThresholds& thresholds,
                                    std::int64_t step) {
  QualityVerdict verdict;
  verdict.checked_at_step = step;
  for (Eigen::Index s = 0; s < u.v_hat.size(); ++s) {
    if (!u.active.empty() && !u.active[s]) continue;
    const auto state = static_cast<StateIndex>(s);
    verdict.detail.push_back({state, u.bias_rel[s], u.sigma_rel[s]});
    if (verdict.worst_state_bias.state < 0 || u.bias_rel[s] > verdict.worst_state_bias.value) {
      verdict.worst_state_bias = {state, u.bias_rel[s]};
    }
    if (verdict.worst_state_sigma.state < 0 || u.sigma_rel[s] > verdict.worst_state_sigma.value) {
      verdict.worst_state_sigma = {state, u.sigma_rel[s]};
    }
  }
  if (verdict.detail.empty()) {
    verdict.reason = "no reachable state";
    return verdict;
  }
  const bool ok = verdict.max_bias_rel() < thresholds.max_bias_rel &&
                  verdict.max_sigma_rel() < thresholds.max_sigma_rel;
  verdict.status = ok ? Status::Satisfied : Status::Violated;
  if (!ok) {
    std::ostringstream msg;
    msg << "max bias_rel " << verdict.max_bias_rel() << " (state "
        << verdict.worst_state_bias.state << "), max sigma_rel " << verdict.max_sigma_rel()
        << " (state " << verdict.worst_state_sigma.state << ")";
    verdict.reason = msg.str();
  }
  return verdict;
}

QualityVerdict check_quality(const EstimatedModel& model, const PolicyTable& policy,
                             double discount, const QualityThresholds& thresholds,
                             int resamples, std::uint64_t seed) {
  thresholds.validate();
  try {
    const ValueUncertainty u = estimate_bias_cov(model, policy, discount, resamples, seed);
    return quality_verdict_from(u, thresholds, static_cast<std::int64_t>(model.n_records()));
  } catch (const MissingDataError& e) {
    QualityVerdict verdict;
    verdict.checked_at_step = static_cast<std::int64_t>(model.n_records());
    verdict.reason = e.what();
    return verdict;
  } catch (const ModelError& e) {
    QualityVerdict verdict;
    verdict.checked_at_step = static_cast<std::int64_t>(model.n_records());
    verdict.reason = e.what();
    return verdict;
  }
}

std::vector<std::int64_t> linear_checkpoints(std::int64_t length, std::int64_t check_every) {
  if (check_every < 1) throw ParameterError("check_every must be at least 1");
  std::vector<std::int64_t> out;
  for (std::int64_t n = check_every; n <= length; n += check_every) out.push_back(n);
  if (out.empty() || out.back() != length) out.push_back(length);
  return out;
}

std::vector<std::int64_t> geometric_checkpoints(std::int64_t length, std::int64_t first,
                                                double factor) {
  if (first < 1 || !(factor > 1.0)) throw ParameterError("geometric checkpoints need first >= 1, factor > 1");
  std::vector<std::int64_t> out;
  for (double n = static_cast<double>(first); n < static_cast<double>(length); n *= factor) {
    const auto step = static_cast<std::int64_t>(std::llround(n));
    if (out.empty() || step > out.back()) out.push_back(step);
  }
  if (out.empty() || out.back() != length) out.push_back(length);
  return out;
}

std::vector<QualityPoint> quality_series(const Trace& trace, const PolicyTable& policy,
                                         double discount, const QualityThresholds& thresholds,
                                         std::int64_t check_every, int resamples,
                                         std::uint64_t seed) {
  return quality_series(trace, policy, discount, thresholds,
                        linear_checkpoints(static_cast<std::int64_t>(trace.size()), check_every),
                        resamples, seed);
}

std::vector<QualityPoint> quality_series(const Trace& trace, const PolicyTable& policy,
                                         double discount, const QualityThresholds& thresholds,
                                         const std::vector<std::int64_t>& checkpoints,
                                         int resamples, std::uint64_t seed) {
  EstimatedModel model(trace.n_states, trace.n_actions);
  std::vector<QualityPoint> series;
  std::size_t next = 0;
  for (const std::int64_t checkpoint : checkpoints) {
    const auto stop = std::min(static_cast<std::size_t>(std::max<std::int64_t>(checkpoint, 0)),
                               trace.size());
    if (stop < next) throw ParameterError("checkpoints must be ascending");
    for (; next < stop; ++next) model.ingest(trace.records[next]);
    QualityVerdict verdict = check_quality(model, policy, discount, thresholds, resamples, seed);
    verdict.checked_at_step = static_cast<std::int64_t>(stop);
    series.push_back({static_cast<std::int64_t>(stop), std::move(verdict)});
  }
  return series;
}

std::optional<std::int64_t> first_satisfied_step(const std::vector<QualityPoint>& series) {
  for (const auto& point : series) {
    if (point.verdict.status == Status::Satisfied) return point.step;
  }
  return std::nullopt;
}

}  // namespace rlrv
