#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>

namespace partrace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A real symmetric operator accessed only through block products.
///
/// Copies share the underlying operator and its apply counter, so a copy
/// handed to a worker thread reports into the same tally. `apply` is const
/// and safe to call concurrently once the operator is built.
class LinOp {
 public:
  using ApplyFn = std::function<void(const Eigen::Ref<const Eigen::MatrixXd>&,
                                     Eigen::Ref<Eigen::MatrixXd>)>;

  LinOp() = default;
  LinOp(Eigen::Index dim, ApplyFn apply, double norm_bound);

  static LinOp from_sparse(SparseMatrix matrix);
  static LinOp from_dense(Eigen::MatrixXd matrix);
  static LinOp diagonal(Eigen::VectorXd diag);
  static LinOp identity(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return dim_; }

  /// y = A x. Counts one apply per column of x.
  void apply(const Eigen::Ref<const Eigen::MatrixXd>& x,
             Eigen::Ref<Eigen::MatrixXd> y) const;
  Eigen::MatrixXd operator()(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  /// Upper bound on the spectral norm (max absolute row sum where known).
  double norm_bound() const noexcept { return norm_bound_; }

  /// Explicit storage, if the operator was assembled; nullptr otherwise.
  const SparseMatrix* sparse() const noexcept { return sparse_.get(); }

  /// Number of single-vector applies since construction or the last reset.
  std::uint64_t applies() const noexcept;
  void reset_applies() const noexcept;

  /// A + c I with an independent apply counter.
  LinOp shifted(double c) const;
  /// alpha A with an independent apply counter.
  LinOp scaled(double alpha) const;

 private:
  Eigen::Index dim_ = 0;
  ApplyFn apply_;
  double norm_bound_ = 0.0;
  std::shared_ptr<const SparseMatrix> sparse_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_ =
      std::make_shared<std::atomic<std::uint64_t>>(0);
};

}  // namespace partrace
