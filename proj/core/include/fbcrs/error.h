#pragma once

#include <stdexcept>
#include <string>

namespace fbcrs {

// Malformed input: bad probabilities, out-of-range indices, domain
// violations of closed-form functions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Well-formed input that admits no solution: unreachable service targets,
// plans that break their feasibility constraints.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A guarantee that must hold by construction was observed to fail at
// runtime (supply overdraw, broken induction hypothesis).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The simplex hit its iteration cap or lost numerical feasibility.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fbcrs
