#pragma once

#include <Eigen/Dense>

#include <span>

namespace partrace {

/// exp(log_scale) * mat, with mat kept near unit Frobenius norm.
///
/// Normalization multiplies by powers of two only, so it is exact and the
/// represented value never changes. A zero matrix keeps log_scale = 0.
struct LogScaledMatrix {
  Eigen::MatrixXd mat;
  double log_scale = 0.0;

  LogScaledMatrix() = default;
  LogScaledMatrix(Eigen::MatrixXd m, double log_scale);

  /// Brings ||mat||_F into [0.5, 1).
  void normalize();

  /// mat * exp(log_scale - target). May underflow to zero, never overflows
  /// when target >= log_scale + log ||mat||.
  Eigen::MatrixXd at_scale(double target) const;
  /// Plain value; overflows for extreme scales.
  Eigen::MatrixXd value() const { return at_scale(0.0); }

  /// log |tr|, or -inf for a zero trace.
  double log_abs_trace() const;
  /// mat / tr(mat): the scale cancels. Throws DomainError on zero trace.
  Eigen::MatrixXd trace_normalized() const;

  bool is_zero() const { return mat.size() == 0 || mat.isZero(0.0); }

  LogScaledMatrix& operator+=(const LogScaledMatrix& other);
  /// Multiplies by a finite real factor.
  LogScaledMatrix& operator*=(double factor);

  friend LogScaledMatrix operator+(LogScaledMatrix a, const LogScaledMatrix& b) { return a += b; }
};

/// Sum evaluated at the largest scale among the terms.
LogScaledMatrix sum(std::span<const LogScaledMatrix> terms);

/// Arithmetic mean of the terms (empty span rejected).
LogScaledMatrix mean(std::span<const LogScaledMatrix> terms);

}  // namespace partrace
