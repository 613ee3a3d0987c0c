#pragma once

#include <stdexcept>
#include <string>

namespace biftune {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// State left the admissible set (x <= 0 for first-order loops, the origin
// for oscillator loops, nonpositive chart inputs).
struct DomainViolation : Error {
  explicit DomainViolation(const std::string& what) : Error(what) {}
};

// A step produced NaN or Inf.
struct NonFiniteState : Error {
  explicit NonFiniteState(const std::string& what) : Error(what) {}
};

// Required step fell below 1e-14 * |t1 - t0|.
struct StepUnderflow : Error {
  explicit StepUnderflow(const std::string& what) : Error(what) {}
};

// Supplied Jacobian disagrees with finite differences of the vector field.
struct JacobianMismatch : Error {
  explicit JacobianMismatch(const std::string& what) : Error(what) {}
};

// Chart not admissible for the system, or a trajectory tagged with the
// wrong chart was passed to an analysis routine.
struct ChartMismatch : Error {
  explicit ChartMismatch(const std::string& what) : Error(what) {}
};

// g(mu0) is not in the image of f: no equilibrium amplitude exists.
struct NotInImage : Error {
  explicit NotInImage(const std::string& what) : Error(what) {}
};

// Theorem hypotheses fail and the caller asked for them to be enforced.
struct HypothesisViolation : Error {
  explicit HypothesisViolation(const std::string& what) : Error(what) {}
};

// Storage-function search could not certify feasibility.
struct Infeasible : Error {
  explicit Infeasible(const std::string& what) : Error(what) {}
};

// Step budget (max_steps) exhausted before reaching t1.
struct StepBudgetExceeded : Error {
  explicit StepBudgetExceeded(const std::string& what) : Error(what) {}
};

// Bad scenario configuration or CLI arguments.
struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(what) {}
};

}  // namespace biftune
