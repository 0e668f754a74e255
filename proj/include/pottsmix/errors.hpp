#pragma once

#include <stdexcept>
#include <string>

namespace pottsmix {

// Bad arguments or malformed input (the CLI maps these to exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A torus with L < 3 would have parallel edges.
class DegenerateTorusError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// An exhaustive computation would exceed its configured size budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant failed; this always indicates a bug.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A root search whose bracket does not straddle a sign change.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReducibleChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonReversibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MixingCapExceeded : public std::runtime_error {
 public:
  MixingCapExceeded(long cap, double last_distance)
      : std::runtime_error("mixing time exceeds cap " + std::to_string(cap) +
                           " (last d(t) = " + std::to_string(last_distance) + ")"),
        cap(cap),
        last_distance(last_distance) {}
  long cap;
  double last_distance;
};

}  // namespace pottsmix
