#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rlrv/common.hpp"

namespace rlrv {

/// One observed transition {s, a, r, s'} at step n.
struct TransitionRecord {
  std::int64_t step = 0;
  StateIndex state = 0;
  ActionIndex action = 0;
  double reward = 0.0;
  StateIndex next_state = 0;
  std::optional<std::int64_t> episode_id;

  friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

struct Trace {
  int n_states = 0;
  int n_actions = 0;
  std::vector<TransitionRecord> records;

  std::size_t size() const { return records.size(); }

  /// First `count` records as a new trace.
  Trace prefix(std::size_t count) const {
    Trace out{n_states, n_actions, {}};
    out.records.assign(records.begin(),
                       records.begin() + static_cast<std::ptrdiff_t>(std::min(count, records.size())));
    return out;
  }

  friend bool operator==(const Trace&, const Trace&) = default;
};

}  // namespace rlrv
