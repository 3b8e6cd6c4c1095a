#include "partrace/oracle.hpp"

#include "partrace/errors.hpp"
#include "partrace/ptrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace partrace {
namespace {

void guard(Eigen::Index dim, Eigen::Index max_dim) {
  if (dim > max_dim) {
    std::ostringstream msg;
    msg << "dense oracle refused: dimension " << dim << " exceeds the limit " << max_dim;
    throw std::length_error(msg.str());
  }
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("dense oracle: eigendecomposition failed");
  return eig;
}

// log sum_i exp(x_i) over the given values.
double log_sum_exp(const Eigen::ArrayXd& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double top = x.maxCoeff();
  return top + std::log((x - top).exp().sum());
}

}  // namespace

Eigen::MatrixXd dense_matrix(const LinOp& h, Eigen::Index max_dim) {
  guard(h.dim(), max_dim);
  const Eigen::Index n = h.dim();
  Eigen::MatrixXd out(n, n);
  constexpr Eigen::Index kChunk = 64;
  for (Eigen::Index c = 0; c < n; c += kChunk) {
    const Eigen::Index w = std::min(kChunk, n - c);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, w);
    for (Eigen::Index j = 0; j < w; ++j) e(c + j, j) = 1.0;
    out.middleCols(c, w) = h(e);
  }
  return out;
}

DenseThermal dense_thermal(const LinOp& h, double beta) {
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("dense_thermal: beta must be finite and non-negative");
  const auto eig = eigen_of(dense_matrix(h));
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmin = lambda(0);
  const Eigen::ArrayXd expo = -beta * (lambda.array() - lmin);
  const Eigen::MatrixXd& s = eig.eigenvectors();
  Eigen::MatrixXd mat = s * expo.exp().matrix().asDiagonal() * s.transpose();
  DenseThermal out;
  out.state = LogScaledMatrix(std::move(mat), -beta * lmin);
  out.log_z = -beta * lmin + log_sum_exp(expo);
  return out;
}

Eigen::MatrixXd dense_partial_trace(const Eigen::MatrixXd& a, const BipartiteSplit& split) {
  if (a.rows() != split.d_t() || a.cols() != split.d_t()) {
    throw std::invalid_argument("dense_partial_trace: matrix does not match the split");
  }
  const Eigen::Index d_s = split.d_s();
  const Eigen::Index d_b = split.d_b();
  Eigen::MatrixXd out(d_s, d_s);
  for (Eigen::Index i = 0; i < d_s; ++i) {
    for (Eigen::Index j = 0; j < d_s; ++j) out(i, j) = a.block(i * d_b, j * d_b, d_b, d_b).trace();
  }
  return out;
}

DenseSpectrum::DenseSpectrum(const LinOp& h, const BipartiteSplit& split)
    : DenseSpectrum(dense_matrix(h), split) {}

DenseSpectrum::DenseSpectrum(const Eigen::MatrixXd& h, const BipartiteSplit& split) : split_(split) {
  guard(h.rows(), kOracleMaxDim);
  if (h.rows() != split.d_t()) throw std::invalid_argument("DenseSpectrum: matrix does not match the split");
  const auto eig = eigen_of(h);
  lambda_ = eig.eigenvalues();
  vectors_ = eig.eigenvectors();
  traces_.reserve(static_cast<std::size_t>(lambda_.size()));
  for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
    const Eigen::VectorXd v = vectors_.col(i);
    traces_.push_back(partial_trace_rank1(v, split_));
  }
}

LogScaledMatrix DenseSpectrum::thermal_partial_trace(double beta) const {
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("thermal_partial_trace: beta must be finite and non-negative");
  const double lmin = lambda_(0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(split_.d_s(), split_.d_s());
  for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
    acc += std::exp(-beta * (lambda_(i) - lmin)) * traces_[static_cast<std::size_t>(i)];
  }
  return LogScaledMatrix(std::move(acc), -beta * lmin);
}

Eigen::Index DenseSpectrum::ground_degeneracy(double degeneracy_tol) const {
  const double window = degeneracy_tol * std::max(1.0, std::abs(lambda_(0)));
  Eigen::Index g = 0;
  while (g < lambda_.size() && lambda_(g) - lambda_(0) <= window) ++g;
  return g;
}

Eigen::MatrixXd DenseSpectrum::reduced_density(double beta, double degeneracy_tol) const {
  if (std::isinf(beta) && beta > 0) {
    const Eigen::Index g = ground_degeneracy(degeneracy_tol);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(split_.d_s(), split_.d_s());
    for (Eigen::Index i = 0; i < g; ++i) acc += traces_[static_cast<std::size_t>(i)];
    return acc / static_cast<double>(g);
  }
  return thermal_partial_trace(beta).trace_normalized();
}

std::vector<VarianceProfileRow> variance_profile(const Eigen::VectorXd& eigenvalues,
                                                 std::span<const double> betas,
                                                 std::span<const Eigen::Index> ks) {
  Eigen::VectorXd lambda = eigenvalues;
  std::sort(lambda.data(), lambda.data() + lambda.size());
  const Eigen::Index n = lambda.size();
  std::vector<VarianceProfileRow> rows;
  for (double beta : betas) {
    if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("variance_profile: beta must be finite and non-negative");
    const Eigen::ArrayXd expo = -beta * lambda.array();
    const double log_z = log_sum_exp(expo);
    for (Eigen::Index k : ks) {
      if (k < 0 || k > n) throw std::invalid_argument("variance_profile: k out of range");
      VarianceProfileRow row;
      row.beta = beta;
      row.k = k;
      const Eigen::ArrayXd tail = 2.0 * expo.tail(n - k);
      row.log_bound = std::log(2.0) + log_sum_exp(tail) - 2.0 * log_z;
      row.bound = std::exp(row.log_bound);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<VarianceProfileRow> variance_profile(const LinOp& h, std::span<const double> betas,
                                                 std::span<const Eigen::Index> ks) {
  const auto eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense_matrix(h), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("variance_profile: eigendecomposition failed");
  return variance_profile(eig.eigenvalues(), betas, ks);
}

}  // namespace partrace
