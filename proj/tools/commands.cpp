#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "rlrv/estimation.hpp"
#include "rlrv/trace_io.hpp"

namespace rlrv::cli {

namespace fs = std::filesystem;

int exit_code_for(Status status) {
  switch (status) {
    case Status::Satisfied:
      return kSatisfied;
    case Status::Violated:
      return kViolated;
    case Status::Unverified:
      return kUnverified;
  }
  return kBadInput;
}

Property parse_property(const std::string& name) {
  if (name == "quality") return Property::Quality;
  if (name == "optimality") return Property::Optimality;
  if (name == "timeliness") return Property::Timeliness;
  throw ConfigError("unknown property \"" + name + "\"");
}

Mdp build_environment(const RunConfig& cfg) {
  if (cfg.environment == Environment::Patrol) return build_patrol_mdp(cfg.patrol);
  return random_mdp(cfg.random_states, cfg.random_actions, cfg.environment_seed, cfg.discount);
}

PolicyTable resolve_policy(const RunConfig& cfg, const std::string& name, const Trace* trace) {
  const bool patrol = cfg.environment == Environment::Patrol;
  if (name == "estimated") {
    if (trace == nullptr) throw ConfigError("policy \"estimated\" needs a trace");
    return estimate_policy_from_actions(*trace);
  }
  if (name == "uniform" || (name == "exploration" && !patrol)) {
    return PolicyTable::uniform(cfg.n_states(), cfg.n_actions());
  }
  if (patrol && name == "exploration") return patrol_exploration_policy(cfg.patrol);
  if (patrol && name == "schedule") return patrol_schedule_policy(cfg.patrol);
  if (patrol && name == "station") return patrol_station_policy(cfg.patrol);
  throw ConfigError("policy \"" + name + "\" is not available for this environment");
}

namespace {

PolicyTable load_policy_file(const RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto rows = doc.at("policy").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != cfg.n_states()) {
      throw ConfigError("policy file needs one row per state");
    }
    PolicyTable policy(cfg.n_states(), cfg.n_actions());
    for (StateIndex s = 0; s < cfg.n_states(); ++s) {
      if (static_cast<int>(rows[s].size()) != cfg.n_actions()) {
        throw ConfigError("policy file needs one column per action");
      }
      for (ActionIndex a = 0; a < cfg.n_actions(); ++a) policy(s, a) = rows[s][a];
    }
    policy.validate();
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed policy file: ") + e.what());
  }
}

}  // namespace

PolicyTable monitored_policy(const RunConfig& cfg, const Trace* trace) {
  if (cfg.policy_file) return load_policy_file(cfg, *cfg.policy_file);
  return resolve_policy(cfg, cfg.policy, trace);
}

std::vector<std::int64_t> checkpoints_for(const RunConfig& cfg, std::int64_t length) {
  if (cfg.schedule == Schedule::Geometric) return geometric_checkpoints(length, cfg.check_every);
  return linear_checkpoints(length, cfg.check_every);
}

namespace {

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

TimelinessInputs timeliness_inputs(const RunConfig& cfg) {
  TimelinessInputs in;
  in.learning_rate = cfg.learning_rate;
  in.discount = cfg.discount;
  in.convergence_eps = cfg.convergence_eps;
  in.negligibility = cfg.negligibility;
  in.r_min = cfg.r_min;
  in.r_max = cfg.r_max;
  in.max_transitions = cfg.max_transitions;
  return in;
}

OptimalityConfig optimality_config(const RunConfig& cfg) {
  OptimalityConfig out;
  out.eta = cfg.eta;
  out.quality = cfg.quality;
  out.split = {cfg.calibration_fraction, cfg.split_seed()};
  out.resamples = cfg.resamples;
  out.seed = cfg.bootstrap_seed();
  out.sigma_multiplier = cfg.sigma_multiplier;
  return out;
}

void check_shape(const RunConfig& cfg, const Trace& trace) {
  if (trace.n_states != cfg.n_states() || trace.n_actions != cfg.n_actions()) {
    throw ConfigError("trace header (" + std::to_string(trace.n_states) + " states, " +
                      std::to_string(trace.n_actions) +
                      " actions) does not match the configured environment");
  }
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const TraceFormatError& e) {
    spdlog::error("malformed trace: {}", e.what());
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
  } catch (const std::ios_base::failure& e) {
    spdlog::error("I/O error: {}", e.what());
  }
  return kBadInput;
}

std::ofstream open_csv(const fs::path& path, const char* header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << header << '\n';
  return out;
}

}  // namespace

int run_simulate(const RunConfig& cfg, const fs::path& out_path) {
  return guarded([&] {
    const Mdp mdp = build_environment(cfg);
    const PolicyTable policy = monitored_policy(cfg);
    spdlog::info("simulating {} transitions ({} states, {} actions)", cfg.n_transitions,
                 mdp.n_states(), mdp.n_actions());
    const Trace trace = run_policy(mdp, policy, cfg.n_transitions, cfg.simulation_seed());
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_trace_file(out_path, trace);
    write_truth_file(truth_path(out_path), mdp);
    spdlog::info("wrote {} and {}", out_path.string(), truth_path(out_path).string());
    return static_cast<int>(kSatisfied);
  });
}

namespace {

Status monitor_quality(const RunConfig& cfg, const Trace& trace, std::ostream& out) {
  const PolicyTable policy = monitored_policy(cfg, &trace);
  const auto series =
      quality_series(trace, policy, cfg.discount, cfg.quality,
                     checkpoints_for(cfg, static_cast<std::int64_t>(trace.size())), cfg.resamples,
                     cfg.bootstrap_seed());
  for (const auto& p : series) {
    out << "step=" << p.step << " status=" << to_string(p.verdict.status);
    if (p.verdict.status != Status::Unverified) {
      out << " max_bias_rel=" << num(p.verdict.max_bias_rel())
          << " max_sigma_rel=" << num(p.verdict.max_sigma_rel());
    }
    if (!p.verdict.reason.empty()) out << " reason=\"" << p.verdict.reason << "\"";
    out << '\n';
  }
  return series.back().verdict.status;
}

Status monitor_optimality(const RunConfig& cfg, const Trace& trace, std::ostream& out) {
  const PolicyTable policy = monitored_policy(cfg, &trace);
  const auto series =
      optimality_series(trace, policy, cfg.discount, optimality_config(cfg),
                        checkpoints_for(cfg, static_cast<std::int64_t>(trace.size())));
  for (const auto& p : series) {
    out << "step=" << p.step << " status=" << to_string(p.verdict.status)
        << " condition=" << (p.verdict.condition_holds ? "true" : "false");
    if (p.verdict.bounds) {
      const auto& b = *p.verdict.bounds;
      double lo = 1.0;
      double hi = 1.0;
      for (std::size_t s = 0; s < b.active.size(); ++s) {
        if (!b.active[s]) continue;
        lo = std::min(lo, b.eta_lower[s]);
        hi = std::min(hi, b.eta_upper[s]);
      }
      out << " min_eta_lower=" << num(lo) << " min_eta_upper=" << num(hi);
    }
    if (!p.verdict.reason.empty()) out << " reason=\"" << p.verdict.reason << "\"";
    out << '\n';
  }
  return series.back().verdict.status;
}

Status monitor_timeliness(const RunConfig& cfg, const Trace& trace, std::ostream& out) {
  const PolicyTable policy = resolve_policy(cfg, cfg.timeliness_policy, &trace);
  const TimelinessInputs inputs = timeliness_inputs(cfg);
  EstimatedModel model(trace.n_states, trace.n_actions);
  std::size_t next = 0;
  Status last = Status::Unverified;
  for (const std::int64_t checkpoint : checkpoints_for(cfg, static_cast<std::int64_t>(trace.size()))) {
    for (; next < static_cast<std::size_t>(checkpoint); ++next) model.ingest(trace.records[next]);
    const TimelinessVerdict v = check_timeliness(cfg.scenario, inputs, model, policy);
    out << "step=" << checkpoint << " status=" << to_string(v.status)
        << " scenario=" << to_string(v.scenario);
    if (v.bound) {
      out << " m_u=" << v.bound->m_u << " m_t=" << v.bound->m_t;
      if (v.bound->m_t_worst) out << " m_t_worst=" << *v.bound->m_t_worst;
      out << " max_transitions=" << cfg.max_transitions;
    }
    if (!v.reason.empty()) out << " reason=\"" << v.reason << "\"";
    out << '\n';
    last = v.status;
  }
  return last;
}

}  // namespace

int run_monitor(const RunConfig& cfg, const fs::path& trace_path, Property property,
                std::ostream& out) {
  return guarded([&] {
    const Trace trace = read_trace_file(trace_path);
    check_shape(cfg, trace);
    Status final_status = Status::Unverified;
    switch (property) {
      case Property::Quality:
        final_status = monitor_quality(cfg, trace, out);
        break;
      case Property::Optimality:
        final_status = monitor_optimality(cfg, trace, out);
        break;
      case Property::Timeliness:
        final_status = monitor_timeliness(cfg, trace, out);
        break;
    }
    out.flush();
    return exit_code_for(final_status);
  });
}

namespace {

void report_quality(const RunConfig& cfg, const Trace& trace, const PolicyTable& policy,
                    const std::vector<std::int64_t>& checkpoints, const std::optional<Mdp>& truth,
                    const fs::path& out_dir) {
  auto fig1 = open_csv(out_dir / "fig1_bias_sigma.csv", "step,max_bias_rel,max_sigma_rel,status");
  std::ofstream fig2;
  std::optional<ValueVector> v_true;
  if (truth) {
    fig2 = open_csv(out_dir / "fig2_relative_error.csv", "step,state,v_true,v_hat,relative_error");
    v_true = value_of_policy(*truth, policy);
  }
  EstimatedModel model(trace.n_states, trace.n_actions);
  std::size_t next = 0;
  for (const std::int64_t checkpoint : checkpoints) {
    for (; next < static_cast<std::size_t>(checkpoint); ++next) model.ingest(trace.records[next]);
    const QualityVerdict v = check_quality(model, policy, cfg.discount, cfg.quality,
                                           cfg.resamples, cfg.bootstrap_seed());
    fig1 << checkpoint << ',';
    if (v.status == Status::Unverified) {
      fig1 << ",,";
    } else {
      fig1 << num(v.max_bias_rel()) << ',' << num(v.max_sigma_rel()) << ',';
    }
    fig1 << to_string(v.status) << '\n';
    if (!v_true || v.status == Status::Unverified) continue;
    const ValueVector v_hat = estimate_value(model, policy, cfg.discount);
    for (StateIndex s = 0; s < model.n_states(); ++s) {
      if (!model.observed(s)) continue;
      fig2 << checkpoint << ',' << s << ',' << num((*v_true)[s]) << ',' << num(v_hat[s]) << ','
           << num(relative_to_value((*v_true)[s] - v_hat[s], v_hat[s])) << '\n';
    }
  }
}

void report_optimality(const RunConfig& cfg, const Trace& trace, const PolicyTable& policy,
                       const std::vector<std::int64_t>& checkpoints, const fs::path& out_dir) {
  auto fig3 = open_csv(out_dir / "fig3_eta_bounds.csv",
                       "step,state,eta_lower,eta_upper,condition,status");
  for (const auto& p : optimality_series(trace, policy, cfg.discount, optimality_config(cfg),
                                         checkpoints)) {
    const char* condition = p.verdict.condition_holds ? "true" : "false";
    const char* status = to_string(p.verdict.status);
    if (!p.verdict.bounds) {
      fig3 << p.step << ",,,," << condition << ',' << status << '\n';
      continue;
    }
    const auto& b = *p.verdict.bounds;
    for (std::size_t s = 0; s < b.active.size(); ++s) {
      if (!b.active[s]) continue;
      fig3 << p.step << ',' << s << ',' << num(b.eta_lower[s]) << ',' << num(b.eta_upper[s]) << ','
           << condition << ',' << status << '\n';
    }
  }
}

void report_td(const RunConfig& cfg, const Trace& trace, const std::optional<Mdp>& truth,
               const fs::path& out_dir) {
  const PolicyTable policy = resolve_policy(cfg, cfg.timeliness_policy, &trace);
  const EstimatedModel model = build_model(trace);

  std::optional<Mdp> td_mdp = truth;
  if (!td_mdp) {
    try {
      td_mdp = estimated_mdp(model, cfg.discount);
    } catch (const MissingDataError& e) {
      spdlog::warn("skipping fig4: no sidecar and the estimated MDP is incomplete ({})", e.what());
      return;
    }
  }
  const TimelinessVerdict v = check_timeliness(Scenario::NewPolicy, timeliness_inputs(cfg), model, policy);
  const std::string m_t = v.bound ? std::to_string(v.bound->m_t) : std::string();

  // Error measured on the pairs the bound covers.
  std::vector<bool> mask;
  const SteadyState steady = steady_state(policy_transition_matrix(*td_mdp, policy));
  if (steady.unique) {
    mask.assign(static_cast<std::size_t>(td_mdp->n_states()) * td_mdp->n_actions(), false);
    for (StateIndex s = 0; s < td_mdp->n_states(); ++s) {
      for (ActionIndex a = 0; a < td_mdp->n_actions(); ++a) {
        mask[s * td_mdp->n_actions() + a] = steady.probs[s] * policy(s, a) > cfg.negligibility;
      }
    }
  }

  const ActionValues reference = action_value_of_policy(*td_mdp, policy);
  auto fig4 = open_csv(out_dir / "fig4_delta_norm.csv", "step,initial_state,delta_norm,epsilon,m_t");
  for (StateIndex s0 = 0; s0 < td_mdp->n_states(); ++s0) {
    LearnerConfig learner{cfg.learning_rate, cfg.discount, std::nullopt,
                          cfg.learner_seed() + static_cast<std::uint64_t>(s0)};
    for (const auto& point :
         td_evaluate(*td_mdp, policy, learner, cfg.td_transitions, reference, s0, mask)) {
      fig4 << point.step << ',' << s0 << ',' << num(point.delta_norm) << ','
           << num(cfg.convergence_eps) << ',' << m_t << '\n';
    }
  }
}

}  // namespace

int run_report(const RunConfig& cfg, const fs::path& trace_path, const fs::path& out_dir) {
  return guarded([&] {
    const Trace trace = read_trace_file(trace_path);
    check_shape(cfg, trace);
    fs::create_directories(out_dir);

    std::optional<Mdp> truth;
    const fs::path sidecar = truth_path(trace_path);
    if (fs::exists(sidecar)) {
      truth = read_truth_file(sidecar);
      if (truth->n_states() != trace.n_states || truth->n_actions() != trace.n_actions) {
        throw ConfigError("sidecar does not match the trace header");
      }
    } else {
      spdlog::warn("no ground-truth sidecar at {}; skipping fig2", sidecar.string());
    }

    const PolicyTable policy = monitored_policy(cfg, &trace);
    const auto checkpoints = checkpoints_for(cfg, static_cast<std::int64_t>(trace.size()));
    report_quality(cfg, trace, policy, checkpoints, truth, out_dir);
    report_optimality(cfg, trace, policy, checkpoints, out_dir);
    report_td(cfg, trace, truth, out_dir);
    spdlog::info("wrote report to {}", out_dir.string());
    return static_cast<int>(kSatisfied);
  });
}

}  // namespace rlrv::cli
