#pragma once

#include <stdexcept>
#include <string>

namespace sasim {

/// Failure categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind {
  contract_violation,
  singular_composition,
  propagation_diverged,
  propagation_invalid,
  initialization,
  build,
  event,
  solve,
  non_convergence,
  fit,
  step_underflow,
  case_parse,
  case_reference,
  case_mismatch,
  comparison,
  io,
  missing_prerequisite,
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code used by the CLI for an error of the given kind.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when series propagation produces a non-finite or exploding coefficient.
class PropagationDiverged : public Error {
 public:
  PropagationDiverged(std::size_t order, const std::string& what)
      : Error(ErrorKind::propagation_diverged, what), order_(order) {}
  std::size_t order() const noexcept { return order_; }

 private:
  std::size_t order_;
};

/// Raised when the network/device fixed point is not reached within the iteration budget.
class NonConvergence : public Error {
 public:
  NonConvergence(double mismatch, int iterations, const std::string& what)
      : Error(ErrorKind::non_convergence, what), mismatch_(mismatch), iterations_(iterations) {}
  double mismatch() const noexcept { return mismatch_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double mismatch_;
  int iterations_;
};

/// Raised by the sparse solver; carries a condition-number estimate when one is available.
class SolveError : public Error {
 public:
  SolveError(double condition_estimate, const std::string& what)
      : Error(ErrorKind::solve, what), condition_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace sasim
