#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sngm {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input: bad config values, dimension mismatches, violated
// preconditions. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced while updating model state, or a runtime bound
// violation that invalidates a run. The CLI maps this to exit code 2.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::uint64_t step)
      : Error(what), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_ = 0;
};

// A budget prescription whose feasibility precondition fails. Carries the
// smallest budget for which the prescription would become feasible.
class PlanInfeasibleError : public ValidationError {
 public:
  PlanInfeasibleError(const std::string& what, double min_admissible_budget)
      : ValidationError(what), min_admissible_budget_(min_admissible_budget) {}
  double min_admissible_budget() const { return min_admissible_budget_; }

 private:
  double min_admissible_budget_ = 0.0;
};

}  // namespace sngm
