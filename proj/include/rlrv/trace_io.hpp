#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rlrv/mdp.hpp"
#include "rlrv/trace.hpp"

namespace rlrv {

/// Malformed trace input; line() is 1-based (0 when not tied to a line).
class TraceFormatError : public Error {
 public:
  TraceFormatError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kTraceFormatVersion = "1";

/// JSON Lines: a header {"n_states","n_actions","format_version"} followed by
/// one {"step","s","a","r","sp"[,"ep"]} object per transition.
void write_trace(std::ostream& out, const Trace& trace);
void write_trace_file(const std::filesystem::path& path, const Trace& trace);

/// Validates the header, index bounds and strictly increasing steps.
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::filesystem::path& path);

/// Ground-truth sidecar stored next to a trace as <trace>.truth.json.
std::filesystem::path truth_path(const std::filesystem::path& trace_path);
void write_truth_file(const std::filesystem::path& path, const Mdp& mdp);
Mdp read_truth_file(const std::filesystem::path& path);

}  // namespace rlrv
