#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace corrdet {

// Bad user input: negative spacing, malformed layouts, non-divisor cluster sizes.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input is well formed but outside the region where the operation is defined
// (SNR >= 1 for the optimal correlation, A = 0 for optimal spacing, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// a = 1 everywhere: the stabilizing Riccati solution does not exist.
class SingularRegimeError : public DomainError {
 public:
  using DomainError::DomainError;
};

// An iterative solver failed to reach its tolerance.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, double last_residual,
                 std::vector<double> history = {})
      : std::runtime_error(what),
        last_residual_(last_residual),
        history_(std::move(history)) {}

  double last_residual() const noexcept { return last_residual_; }
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  double last_residual_;
  std::vector<double> history_;
};

// No sign change found while bracketing a root.  Carries the (a, g(a)) scan
// so the caller can see what was evaluated.
class RootNotFound : public NumericFailure {
 public:
  RootNotFound(const std::string& what, std::vector<double> grid,
               std::vector<double> values)
      : NumericFailure(what, 0.0),
        grid_(std::move(grid)),
        values_(std::move(values)) {}

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

// A self-check on internally built matrices failed.  Indicates a bug, not bad input.
class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace corrdet
