#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace partrace {

/// Base class for violated numerical contracts. The CLI maps every subclass
/// to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input failed a precondition that is checked numerically, e.g. a
/// deflation basis whose columns are not orthonormal.
class ContractViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An iterative method hit its iteration cap.
class ConvergenceFailure : public NumericalError {
 public:
  ConvergenceFailure(const std::string& what, std::int64_t index, double last_value)
      : NumericalError(what), index_(index), last_value_(last_value) {}

  /// First unconverged eigenpair index, or -1 when not applicable.
  std::int64_t index() const noexcept { return index_; }
  /// Last observed residual / change.
  double last_value() const noexcept { return last_value_; }

 private:
  std::int64_t index_;
  double last_value_;
};

/// A QR factorization inside block Lanczos produced a (numerically) singular
/// R factor and the breakdown policy asked to abort.
class DegenerateKrylov : public NumericalError {
 public:
  DegenerateKrylov(const std::string& what, std::int64_t depth, std::int64_t column)
      : NumericalError(what), depth_(depth), column_(column) {}

  std::int64_t depth() const noexcept { return depth_; }
  std::int64_t column() const noexcept { return column_; }

 private:
  std::int64_t depth_;
  std::int64_t column_;
};

/// A scalar function was evaluated outside its domain.
class DomainError : public NumericalError {
 public:
  DomainError(const std::string& what, double argument)
      : NumericalError(what), argument_(argument) {}

  double argument() const noexcept { return argument_; }

 private:
  double argument_;
};

}  // namespace partrace
