#pragma once

// Brute-force references used only by tests. Nothing here calls the code
// under test.

#include "partrace/spinsys.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace partrace::testing {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

// Single-site operator embedded at `site` (site 0 leftmost).
inline Eigen::MatrixXd embed(const Eigen::MatrixXd& op, int site, int n) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (int s = 0; s < n; ++s) out = kron(out, s == site ? op : Eigen::MatrixXd::Identity(2, 2));
  return out;
}

inline Eigen::MatrixXd pauli_x() { return (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished(); }
// i sigma^y, which is real; sigma^y sigma^y = -(i sigma^y)(i sigma^y).
inline Eigen::MatrixXd i_pauli_y() { return (Eigen::MatrixXd(2, 2) << 0, 1, -1, 0).finished(); }
inline Eigen::MatrixXd pauli_z() { return (Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished(); }

// H by explicit Kronecker products of Pauli matrices.
inline Eigen::MatrixXd kron_hamiltonian(const CouplingSpec& spec) {
  const int n = spec.n_sites;
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (const auto& c : spec.jx) h += c.value * embed(pauli_x(), c.i, n) * embed(pauli_x(), c.j, n);
  for (const auto& c : spec.jy) h -= c.value * embed(i_pauli_y(), c.i, n) * embed(i_pauli_y(), c.j, n);
  for (const auto& c : spec.jz) h += c.value * embed(pauli_z(), c.i, n) * embed(pauli_z(), c.j, n);
  for (int s = 0; s < n; ++s) h += 0.5 * spec.field_h * embed(pauli_z(), s, n);
  return h;
}

// Literal sum over the (b) index.
inline Eigen::MatrixXd block_trace(const Eigen::MatrixXd& a, Eigen::Index d_s, Eigen::Index d_b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d_s, d_s);
  for (Eigen::Index i = 0; i < d_s; ++i) {
    for (Eigen::Index j = 0; j < d_s; ++j) {
      for (Eigen::Index b = 0; b < d_b; ++b) out(i, j) += a(i * d_b + b, j * d_b + b);
    }
  }
  return out;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  }
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_orthonormal(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

inline Eigen::MatrixXd sym_function(const Eigen::MatrixXd& a, double (*f)(double, double), double param) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::VectorXd fv = eig.eigenvalues().unaryExpr([&](double x) { return f(x, param); });
  return eig.eigenvectors() * fv.asDiagonal() * eig.eigenvectors().transpose();
}

inline double exp_minus(double x, double beta) { return std::exp(-beta * x); }

// Normalized reduced state of exp(-beta H) via an independent dense path.
inline Eigen::MatrixXd reduced_thermal(const Eigen::MatrixXd& h, double beta, Eigen::Index d_s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const double lmin = eig.eigenvalues()(0);
  Eigen::VectorXd w = (-beta * (eig.eigenvalues().array() - lmin)).exp().matrix();
  const Eigen::MatrixXd rho = eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::MatrixXd r = block_trace(rho, d_s, h.rows() / d_s);
  return r / r.trace();
}

}  // namespace partrace::testing
