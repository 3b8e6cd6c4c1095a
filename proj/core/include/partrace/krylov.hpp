#pragma once

#include "partrace/linop.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace partrace {

/// Orthonormal eigenvector block Q (d_t x k) with eigenvalues in
/// nondecreasing order and the residual norms ||H q_i - lambda_i q_i||.
struct DeflationBasis {
  Eigen::MatrixXd q;
  Eigen::VectorXd lambda;
  Eigen::VectorXd residual_norms;

  Eigen::Index size() const noexcept { return q.cols(); }
  bool empty() const noexcept { return q.cols() == 0; }

  /// k = 0 basis for an operator of dimension `dim`.
  static DeflationBasis none(Eigen::Index dim);
};

struct EigenSolverOptions {
  /// Residual tolerance relative to the spectral norm estimate.
  double tol = 1e-13;
  int max_iterations = 2000;
  /// Guard vectors carried beyond k; 0 picks clamp(k, 4, 16).
  Eigen::Index guard = 0;
  /// Degree of the Chebyshev filter applied per iteration.
  int filter_degree = 20;
  std::uint64_t seed = 0x2545f4914f6cdd1dULL;
  /// Operators up to this dimension are diagonalized densely.
  Eigen::Index dense_cutoff = 256;
};

/// The k algebraically smallest eigenpairs of h.
///
/// Chebyshev-filtered subspace iteration on k + guard vectors: each sweep
/// damps the spectrum above the current largest Ritz value with a scaled
/// Chebyshev polynomial, re-orthonormalizes, applies H once and does an
/// explicit Rayleigh-Ritz step. Converged leading pairs are locked. Working
/// on a block recovers degenerate eigenvalues without relying on rounding
/// noise. Residuals are always from explicit applies.
///
/// Throws ConvergenceFailure naming the first unconverged index.
DeflationBasis lowest_eigenpairs(const LinOp& h, Eigen::Index k,
                                 const EigenSolverOptions& options = {});

/// Symmetric block tridiagonal Lanczos matrix
///
///   T = [ M_0  B_0^T              ]
///       [ B_0  M_1   B_1^T        ]
///       [      B_1   ...          ]
///
/// with b x b blocks. off_blocks[j] = V_{j+1}^T H V_j is the R factor of the
/// QR step that produced V_{j+1}; r0 is the R factor of the start block.
struct BlockTridiagonal {
  std::vector<Eigen::MatrixXd> diag_blocks;
  std::vector<Eigen::MatrixXd> off_blocks;
  Eigen::MatrixXd r0;

  Eigen::Index block_size() const noexcept { return r0.rows(); }
  Eigen::Index depth() const noexcept { return static_cast<Eigen::Index>(diag_blocks.size()); }

  /// Dense (t b) x (t b) matrix.
  Eigen::MatrixXd assemble() const;
  /// Leading `depth` block rows/columns.
  BlockTridiagonal leading(Eigen::Index depth) const;
};

/// Text dump of T: a header line "block_tridiagonal b t", then r0, then for
/// each j the block "M j" followed by (for j < t-1) "B j", each as b rows of
/// b whitespace-separated values in %.17g.
void write_tridiagonal(const BlockTridiagonal& trid, std::ostream& out);

enum class BreakdownPolicy {
  /// Replace a dependent direction by a random vector orthogonal to Q, every
  /// previous block and the rest of the new block, with a zero coupling row.
  /// Keeps T = V^T H V and the polynomial exactness of the quadrature. Once
  /// the whole complement of Q is spanned, leftover slots become zero
  /// columns and the recurrence stops after that block.
  kReplace,
  /// Throw DegenerateKrylov.
  kAbort,
};

struct LanczosOptions {
  /// Reorthogonalize every new block against all previous blocks.
  bool reorthogonalize = false;
  BreakdownPolicy breakdown = BreakdownPolicy::kReplace;
  /// A QR column is dependent when its diagonal R entry falls below
  /// breakdown_tol * ||X||_F.
  double breakdown_tol = 1e-10;
  /// A whole block is treated as an invariant subspace when ||X||_F falls
  /// below exhaustion_tol * ||H V_j||_F.
  double exhaustion_tol = 1e-12;
  std::uint64_t seed = 0x853c49e6748fea9bULL;
};

/// Block Lanczos recurrence with explicit deflation against Q.
///
/// The recurrence is independent of the matrix function, so a single
/// instance can be extended incrementally and its leading blocks reused for
/// every depth and every function. The LinOp and the deflation matrix must
/// outlive the object.
class BlockLanczos {
 public:
  BlockLanczos(const LinOp& h, const Eigen::Ref<const Eigen::MatrixXd>& z,
               const Eigen::MatrixXd& q_defl, LanczosOptions options = {});

  /// Runs the recurrence until T has `depth` diagonal blocks, or until the
  /// Krylov space is exhausted. Costs b applies of H per new block.
  void extend(Eigen::Index depth);

  const BlockTridiagonal& tridiagonal() const noexcept { return trid_; }
  Eigen::Index depth() const noexcept { return trid_.depth(); }
  bool exhausted() const noexcept { return exhausted_; }
  /// Number of QR columns replaced after a breakdown.
  Eigen::Index replaced_columns() const noexcept { return replaced_; }

  /// [V_0, ..., V_{t-1}] as one d_t x (t b) matrix.
  Eigen::MatrixXd basis() const;
  /// ||V^T V - D||_F over the current basis, D = I except for zero columns.
  double orthogonality_loss() const;
  /// ||V^T Q||_F over the current basis.
  double deflation_leak() const;

 private:
  void step();
  Eigen::MatrixXd orthonormalize(Eigen::MatrixXd& x, double reference_norm, Eigen::Index depth);
  bool random_direction(const Eigen::MatrixXd& block_so_far, Eigen::Index filled,
                        Eigen::Ref<Eigen::VectorXd> out);

  const LinOp* h_;
  const Eigen::MatrixXd* q_;
  LanczosOptions options_;
  std::vector<Eigen::MatrixXd> v_;
  Eigen::MatrixXd pending_;
  double pending_reference_ = 0.0;
  BlockTridiagonal trid_;
  bool exhausted_ = false;
  bool space_full_ = false;
  Eigen::Index replaced_ = 0;
  std::uint64_t draws_ = 0;
};

/// Convenience wrapper: one recurrence of depth t started from z.
BlockTridiagonal block_lanczos_defl(const LinOp& h, const Eigen::Ref<const Eigen::MatrixXd>& z,
                                    const DeflationBasis& q_defl, Eigen::Index depth,
                                    bool reorthogonalize = false);

using ScalarFunction = std::function<double(double)>;

/// Caches the eigendecomposition of T so the block Gauss quadrature
/// R_0^T E_1^T f(T) E_1 R_0 can be re-evaluated cheaply for many f.
class SpectralQuadrature {
 public:
  explicit SpectralQuadrature(const BlockTridiagonal& trid);

  /// Throws DomainError if f is not finite at an eigenvalue of T.
  Eigen::MatrixXd evaluate(const ScalarFunction& f) const;
  /// f(x) = exp(-beta (x - shift)), evaluated without forming f(T).
  Eigen::MatrixXd evaluate_exp(double beta, double shift) const;

  const Eigen::VectorXd& ritz_values() const noexcept { return theta_; }
  Eigen::Index block_size() const noexcept { return weights_.rows(); }

 private:
  Eigen::MatrixXd weighted(const Eigen::VectorXd& fvals) const;

  Eigen::VectorXd theta_;
  Eigen::MatrixXd weights_;  // R_0^T E_1^T S, b x (t b)
};

/// R_0^T E_1^T f(T) E_1 R_0 via a dense eigendecomposition of T.
Eigen::MatrixXd matfun_quadrature(const BlockTridiagonal& trid, const ScalarFunction& f);

struct DepthOptions {
  double rel_tol = 1e-10;
  Eigen::Index max_depth = 512;
  LanczosOptions lanczos;
};

struct DepthChoice {
  Eigen::Index depth = 1;
  double last_change = 0.0;
};

/// Doubles t until the quadrature for exp(-beta (x - lambda_shift)) changes
/// by at most rel_tol * ||Z^T Z||_F between t and 2t, for every beta given.
/// lambda_shift is the lowest deflated eigenvalue (or the lowest Ritz value
/// when k = 0), so the tolerance is relative to ||f(H)|| ||Z||^2. Returns the
/// smaller depth of the converged pair.
DepthChoice choose_depth(const LinOp& h, const DeflationBasis& q_defl,
                         const Eigen::Ref<const Eigen::MatrixXd>& z_pilot,
                         std::span<const double> betas, const DepthOptions& options = {});

DepthChoice choose_depth(const LinOp& h, const DeflationBasis& q_defl,
                         const Eigen::Ref<const Eigen::MatrixXd>& z_pilot, double beta_max,
                         const DepthOptions& options = {});

}  // namespace partrace
