#pragma once

#include <stdexcept>
#include <string>

namespace wfl {

/// Configuration outside the feasible region (delay, power, participation).
class InfeasibleConfig : public std::runtime_error {
 public:
  explicit InfeasibleConfig(const std::string& what) : std::runtime_error(what) {}
};

/// A trial stopped because a runtime contract was violated, e.g. an observed
/// gradient exceeded the task's gradient-norm bound.
class TrialAborted : public std::runtime_error {
 public:
  explicit TrialAborted(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wfl
