#include "partrace/linop.hpp"

#include <stdexcept>
#include <string>

namespace partrace {

LinOp::LinOp(Eigen::Index dim, ApplyFn apply, double norm_bound)
    : dim_(dim), apply_(std::move(apply)), norm_bound_(norm_bound) {
  if (dim < 0) throw std::invalid_argument("LinOp: negative dimension");
  if (!apply_) throw std::invalid_argument("LinOp: empty apply function");
}

LinOp LinOp::from_sparse(SparseMatrix matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("LinOp::from_sparse: matrix is not square");
  }
  double bound = 0.0;
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
    double row_sum = 0.0;
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) row_sum += std::abs(it.value());
    bound = std::max(bound, row_sum);
  }
  auto shared = std::make_shared<const SparseMatrix>(std::move(matrix));
  LinOp op(
      shared->rows(),
      [shared](const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) {
        y.noalias() = (*shared) * x;
      },
      bound);
  op.sparse_ = std::move(shared);
  return op;
}

LinOp LinOp::from_dense(Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("LinOp::from_dense: matrix is not square");
  }
  const double bound = matrix.cwiseAbs().rowwise().sum().maxCoeff();
  auto shared = std::make_shared<const Eigen::MatrixXd>(std::move(matrix));
  return LinOp(
      shared->rows(),
      [shared](const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) {
        y.noalias() = (*shared) * x;
      },
      bound);
}

LinOp LinOp::diagonal(Eigen::VectorXd diag) {
  const double bound = diag.size() > 0 ? diag.cwiseAbs().maxCoeff() : 0.0;
  auto shared = std::make_shared<const Eigen::VectorXd>(std::move(diag));
  return LinOp(
      shared->size(),
      [shared](const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) {
        y = shared->asDiagonal() * x;
      },
      bound);
}

LinOp LinOp::identity(Eigen::Index dim) {
  return LinOp(
      dim,
      [](const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) { y = x; },
      1.0);
}

void LinOp::apply(const Eigen::Ref<const Eigen::MatrixXd>& x,
                  Eigen::Ref<Eigen::MatrixXd> y) const {
  if (x.rows() != dim_ || y.rows() != dim_ || x.cols() != y.cols()) {
    throw std::invalid_argument("LinOp::apply: dimension mismatch (operator dim " +
                                std::to_string(dim_) + ", input rows " +
                                std::to_string(x.rows()) + ")");
  }
  apply_(x, y);
  counter_->fetch_add(static_cast<std::uint64_t>(x.cols()), std::memory_order_relaxed);
}

Eigen::MatrixXd LinOp::operator()(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  Eigen::MatrixXd y(dim_, x.cols());
  apply(x, y);
  return y;
}

std::uint64_t LinOp::applies() const noexcept {
  return counter_->load(std::memory_order_relaxed);
}

void LinOp::reset_applies() const noexcept { counter_->store(0, std::memory_order_relaxed); }

LinOp LinOp::shifted(double c) const {
  LinOp base = *this;
  return LinOp(
      dim_,
      [base, c](const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) {
        base.apply_(x, y);
        y += c * x;
      },
      norm_bound_ + std::abs(c));
}

LinOp LinOp::scaled(double alpha) const {
  LinOp base = *this;
  return LinOp(
      dim_,
      [base, alpha](const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) {
        base.apply_(x, y);
        y *= alpha;
      },
      norm_bound_ * std::abs(alpha));
}

}  // namespace partrace
