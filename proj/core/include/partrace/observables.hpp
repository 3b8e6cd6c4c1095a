#pragma once

#include <Eigen/Dense>

#include <vector>

namespace partrace {

/// Reduced density matrix with a cached, clamped eigendecomposition.
///
/// Negative eigenvalues (sampling noise) are set to zero and the rest
/// renormalized to unit sum; the removed negative mass is kept in
/// clamped_mass(). The raw matrix is only symmetrized.
class DensityMatrix {
 public:
  /// Throws std::invalid_argument unless rho is square, finite and has
  /// |tr(rho) - 1| <= 1e-10.
  explicit DensityMatrix(const Eigen::MatrixXd& rho);

  const Eigen::MatrixXd& matrix() const noexcept { return rho_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }

  /// Clamped, renormalized eigenvalues, ascending.
  const Eigen::VectorXd& eigenvalues() const noexcept { return p_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return u_; }
  /// Smallest eigenvalue before clamping.
  double min_raw_eigenvalue() const noexcept { return min_raw_; }
  /// Sum of |p| over the negative raw eigenvalues.
  double clamped_mass() const noexcept { return clamped_mass_; }

  /// U diag(p) U^T with the clamped eigenvalues.
  Eigen::MatrixXd clamped() const;

 private:
  Eigen::MatrixXd rho_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd p_;
  double min_raw_ = 0.0;
  double clamped_mass_ = 0.0;
};

/// -sum p ln p in nats, with 0 ln 0 = 0.
double von_neumann_entropy(const DensityMatrix& rho);

struct EntanglementSpectrum {
  /// -ln p for every p above the floor, ascending.
  std::vector<double> levels;
  /// Eigenvalues at or below the floor.
  Eigen::Index clamped = 0;
};

EntanglementSpectrum entanglement_spectrum(const DensityMatrix& rho, double floor = 1e-15);

/// tr(H_s rho) on the raw matrix.
double internal_energy(const DensityMatrix& rho, const Eigen::MatrixXd& h_s);

/// Passive energy sum_i p_i(desc) eps_i(asc).
double passive_energy(const DensityMatrix& rho, const Eigen::MatrixXd& h_s);

/// tr(H_s rho_c) - passive energy, both on the clamped state, so the result
/// is non-negative up to rounding.
double ergotropy(const DensityMatrix& rho, const Eigen::MatrixXd& h_s);

}  // namespace partrace
