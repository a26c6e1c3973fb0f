#include "rlrv/trace_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rlrv {

using ordered_json = nlohmann::ordered_json;

TraceFormatError::TraceFormatError(const std::string& what, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

void write_trace(std::ostream& out, const Trace& trace) {
  ordered_json header;
  header["n_states"] = trace.n_states;
  header["n_actions"] = trace.n_actions;
  header["format_version"] = kTraceFormatVersion;
  out << header.dump() << '\n';
  for (const auto& r : trace.records) {
    ordered_json row;
    row["step"] = r.step;
    row["s"] = r.state;
    row["a"] = r.action;
    row["r"] = r.reward;
    row["sp"] = r.next_state;
    if (r.episode_id) row["ep"] = *r.episode_id;
    out << row.dump() << '\n';
  }
}

void write_trace_file(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_trace(out, trace);
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

template <class T>
T field(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw TraceFormatError(std::string("missing field \"") + key + "\"", line);
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw TraceFormatError(std::string("\"") + key + "\" must be an integer", line);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw TraceFormatError(std::string("\"") + key + "\" must be a number", line);
    }
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw TraceFormatError(std::string("bad value for \"") + key + "\"", line);
  }
}

}  // namespace

Trace read_trace(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  Trace trace;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw TraceFormatError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw TraceFormatError("expected a JSON object", line_no);

    if (!have_header) {
      trace.n_states = field<int>(obj, "n_states", line_no);
      trace.n_actions = field<int>(obj, "n_actions", line_no);
      const auto version = obj.find("format_version");
      if (version == obj.end() || !version->is_string() ||
          version->get<std::string>() != kTraceFormatVersion) {
        throw TraceFormatError("unsupported or missing format_version", line_no);
      }
      if (trace.n_states < 1 || trace.n_actions < 1) {
        throw TraceFormatError("n_states and n_actions must be positive", line_no);
      }
      have_header = true;
      continue;
    }

    TransitionRecord r;
    r.step = field<std::int64_t>(obj, "step", line_no);
    r.state = field<int>(obj, "s", line_no);
    r.action = field<int>(obj, "a", line_no);
    r.reward = field<double>(obj, "r", line_no);
    r.next_state = field<int>(obj, "sp", line_no);
    if (obj.contains("ep")) r.episode_id = field<std::int64_t>(obj, "ep", line_no);

    if (r.state < 0 || r.state >= trace.n_states || r.next_state < 0 ||
        r.next_state >= trace.n_states) {
      throw TraceFormatError("state index out of range", line_no);
    }
    if (r.action < 0 || r.action >= trace.n_actions) {
      throw TraceFormatError("action index out of range", line_no);
    }
    if (!trace.records.empty() && r.step <= trace.records.back().step) {
      throw TraceFormatError("steps must be strictly increasing", line_no);
    }
    trace.records.push_back(r);
  }
  if (!have_header) throw TraceFormatError("missing header", line_no == 0 ? 1 : line_no);
  return trace;
}

Trace read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError("cannot open " + path.string(), 0);
  return read_trace(in);
}

std::filesystem::path truth_path(const std::filesystem::path& trace_path) {
  return std::filesystem::path(trace_path.string() + ".truth.json");
}

void write_truth_file(const std::filesystem::path& path, const Mdp& mdp) {
  ordered_json doc;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["discount"] = mdp.discount();
  doc["transition"] = mdp.transition_data();
  doc["reward"] = mdp.reward_data();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump() << '\n';
}

Mdp read_truth_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    Mdp mdp(doc.at("n_states").get<int>(), doc.at("n_actions").get<int>(),
            doc.at("discount").get<double>());
    const auto t = doc.at("transition").get<std::vector<double>>();
    const auto r = doc.at("reward").get<std::vector<double>>();
    if (t.size() != mdp.transition_data().size() || r.size() != t.size()) {
      throw ModelError("sidecar tensors have the wrong size");
    }
    std::size_t i = 0;
    for (StateIndex s = 0; s < mdp.n_states(); ++s) {
      for (ActionIndex a = 0; a < mdp.n_actions(); ++a) {
        for (StateIndex next = 0; next < mdp.n_states(); ++next, ++i) {
          mdp.transition(s, a, next) = t[i];
          mdp.reward(s, a, next) = r[i];
        }
      }
    }
    mdp.validate();
    return mdp;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed sidecar: ") + e.what());
  }
}

}  // namespace rlrv
