#pragma once

#include "partrace/linop.hpp"
#include "partrace/log_scaled.hpp"
#include "partrace/spinsys.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace partrace {

inline constexpr Eigen::Index kOracleMaxDim = 4096;

/// H as a dense matrix, built by applying it to identity blocks. Throws
/// std::length_error above max_dim.
Eigen::MatrixXd dense_matrix(const LinOp& h, Eigen::Index max_dim = kOracleMaxDim);

struct DenseThermal {
  /// exp(-beta H) as exp(log_scale) * mat, with log_scale = -beta lambda_min
  /// before normalization.
  LogScaledMatrix state;
  /// ln Z = ln tr exp(-beta H).
  double log_z = 0.0;
};

DenseThermal dense_thermal(const LinOp& h, double beta);

/// Literal block trace: out(i, j) = sum_b A(i d_b + b, j d_b + b).
Eigen::MatrixXd dense_partial_trace(const Eigen::MatrixXd& a, const BipartiteSplit& split);

/// Full eigendecomposition of H with per-eigenvector partial traces, so
/// reduced states for many betas cost O(d_t d_s^2) each.
class DenseSpectrum {
 public:
  DenseSpectrum(const LinOp& h, const BipartiteSplit& split);
  DenseSpectrum(const Eigen::MatrixXd& h, const BipartiteSplit& split);

  const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return vectors_; }

  /// tr_b exp(-beta H) in log-scaled form.
  LogScaledMatrix thermal_partial_trace(double beta) const;
  /// Normalized reduced density matrix; beta = +inf averages the ground space.
  Eigen::MatrixXd reduced_density(double beta, double degeneracy_tol = 1e-9) const;
  /// Dimension of the ground eigenspace.
  Eigen::Index ground_degeneracy(double degeneracy_tol = 1e-9) const;

 private:
  BipartiteSplit split_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd vectors_;
  std::vector<Eigen::MatrixXd> traces_;
};

struct VarianceProfileRow {
  double beta = 0.0;
  Eigen::Index k = 0;
  /// ln of 2 sum_{i>k} sigma_i^2 / Z^2; -inf when the sum is empty.
  double log_bound = 0.0;
  double bound = 0.0;
};

/// Deflated variance bound of the normalized thermal state for every
/// (beta, k), where sigma_i = exp(-beta lambda_i) in decreasing order.
std::vector<VarianceProfileRow> variance_profile(const LinOp& h, std::span<const double> betas,
                                                 std::span<const Eigen::Index> ks);
std::vector<VarianceProfileRow> variance_profile(const Eigen::VectorXd& eigenvalues,
                                                 std::span<const double> betas,
                                                 std::span<const Eigen::Index> ks);

}  // namespace partrace
