#include "partrace/observables.hpp"

#include "partrace/errors.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace partrace {
namespace {

void check_hs(const DensityMatrix& rho, const Eigen::MatrixXd& h_s) {
  if (h_s.rows() != rho.dim() || h_s.cols() != rho.dim()) {
    std::ostringstream msg;
    msg << "subsystem Hamiltonian is " << h_s.rows() << "x" << h_s.cols() << ", density matrix is "
        << rho.dim() << "x" << rho.dim();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

DensityMatrix::DensityMatrix(const Eigen::MatrixXd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw std::invalid_argument("DensityMatrix: not square");
  if (!rho.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
  const double tr = rho.trace();
  if (std::abs(tr - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "DensityMatrix: trace is " << tr << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
  rho_ = 0.5 * (rho + rho.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho_);
  if (eig.info() != Eigen::Success) throw NumericalError("DensityMatrix: eigendecomposition failed");
  u_ = eig.eigenvectors();
  p_ = eig.eigenvalues();
  min_raw_ = p_.minCoeff();
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (p_(i) < 0) {
      clamped_mass_ -= p_(i);
      p_(i) = 0.0;
    }
  }
  p_ /= p_.sum();
}

Eigen::MatrixXd DensityMatrix::clamped() const { return u_ * p_.asDiagonal() * u_.transpose(); }

double von_neumann_entropy(const DensityMatrix& rho) {
  double s = 0.0;
  for (double p : rho.eigenvalues()) {
    if (p > 0) s -= p * std::log(p);
  }
  return s;
}

EntanglementSpectrum entanglement_spectrum(const DensityMatrix& rho, double floor) {
  EntanglementSpectrum out;
  const Eigen::VectorXd& p = rho.eigenvalues();
  // Ascending p means descending levels; walk backwards.
  for (Eigen::Index i = p.size() - 1; i >= 0; --i) {
    if (p(i) > floor) {
      out.levels.push_back(-std::log(p(i)));
    } else {
      ++out.clamped;
    }
  }
  return out;
}

double internal_energy(const DensityMatrix& rho, const Eigen::MatrixXd& h_s) {
  check_hs(rho, h_s);
  return (h_s.cwiseProduct(rho.matrix().transpose())).sum();
}

double passive_energy(const DensityMatrix& rho, const Eigen::MatrixXd& h_s) {
  check_hs(rho, h_s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (h_s + h_s.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& eps = eig.eigenvalues();
  const Eigen::VectorXd& p = rho.eigenvalues();
  const Eigen::Index n = p.size();
  double e = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) e += p(n - 1 - i) * eps(i);
  return e;
}

double ergotropy(const DensityMatrix& rho, const Eigen::MatrixXd& h_s) {
  check_hs(rho, h_s);
  const double energy = (h_s.cwiseProduct(rho.clamped().transpose())).sum();
  return energy - passive_energy(rho, h_s);
}

}  // namespace partrace
