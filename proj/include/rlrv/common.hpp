#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rlrv {

using StateIndex = int;
using ActionIndex = int;

struct StateAction {
  StateIndex state = 0;
  ActionIndex action = 0;

  friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model or policy violates one of its structural invariants.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition does not hold (e.g. negative rewards where the
/// optimality bounds require R >= 0).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A transition record does not fit the declared state/action space.
class InstrumentationFault : public Error {
 public:
  using Error::Error;
};

/// Some (s,a) pairs that the analysis needs have never been observed.
class MissingDataError : public Error {
 public:
  MissingDataError(std::string what, std::vector<StateAction> pairs)
      : Error(std::move(what)), pairs_(std::move(pairs)) {}

  const std::vector<StateAction>& pairs() const { return pairs_; }

 private:
  std::vector<StateAction> pairs_;
};

/// Returned instead of a value when a procedure's applicability condition
/// fails. Unlike an Error this is an expected outcome: monitors map it to an
/// Unverified verdict.
struct NotApplicable {
  std::string reason;
};

template <class T>
using Applicable = std::variant<T, NotApplicable>;

/// Three-valued monitor outcome.
enum class Status { Unverified, Violated, Satisfied };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Unverified:
      return "Unverified";
    case Status::Violated:
      return "Violated";
    case Status::Satisfied:
      return "Satisfied";
  }
  return "?";
}

/// ceil() for quantities that count transitions or updates. Values within a
/// relative 1e-9 of an integer are treated as that integer, so that e.g.
/// 11 / 0.1 yields 110 and not 111.
inline std::int64_t ceil_count(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::ceil(x));
}

}  // namespace rlrv
