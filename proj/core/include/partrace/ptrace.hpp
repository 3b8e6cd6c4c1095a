#pragma once

#include "partrace/krylov.hpp"
#include "partrace/linop.hpp"
#include "partrace/log_scaled.hpp"
#include "partrace/probes.hpp"
#include "partrace/spinsys.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace partrace {

/// weight * tr_b(x x^T): entry (i, j) is the dot product of chunks i and j.
Eigen::MatrixXd partial_trace_rank1(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const BipartiteSplit& split, double weight = 1.0);

/// sum_i weights(i) tr_b(x_i x_i^T) over the columns of x.
Eigen::MatrixXd partial_trace_lowrank(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights,
                                      const BipartiteSplit& split);

/// Stochastic estimate of a partial trace with its per-sample pieces.
///
/// mean = defl_term + average(rem_samples). The mean is symmetrized; the
/// Frobenius norm of the removed skew part relative to ||mean|| is kept in
/// `asymmetry`.
struct PartialTraceEstimate {
  LogScaledMatrix defl_term;
  std::vector<LogScaledMatrix> rem_samples;
  LogScaledMatrix mean;
  /// Entrywise jackknife standard error at scale mean.log_scale. NaN if m < 2.
  Eigen::MatrixXd std_error;
  double asymmetry = 0.0;

  Eigen::Index k = 0;
  Eigen::Index m = 0;
  Eigen::Index depth = 0;
  std::uint64_t seed = 0;
  double beta = std::numeric_limits<double>::quiet_NaN();
  /// Operator applies spent by this estimate.
  std::uint64_t matvecs = 0;

  /// Unnormalized mean as a plain matrix (may overflow for extreme scales).
  Eigen::MatrixXd value() const { return mean.value(); }
  /// mean / tr(mean).
  Eigen::MatrixXd rho() const;
  /// Normalized estimate with sample j left out.
  std::vector<Eigen::MatrixXd> leave_one_out_rho() const;
  /// Jackknife standard error of rho(); NaN if m < 2.
  Eigen::MatrixXd rho_std_error() const;
};

/// Assembles mean, std_error and asymmetry from defl_term and rem_samples.
void finalize_estimate(PartialTraceEstimate& est);

/// (1/m) sum_i Y_i^T A Y_i with Y_i = I (x) v_i. Costs m d_s applies.
PartialTraceEstimate estimate_plain(const LinOp& a, const BipartiteSplit& split,
                                    const ProbeConfig& probes);

/// Deflated estimator with an orthonormal Q: the exact term
/// tr_b(Q Q^T A Q Q^T) plus samples of Y^T A Y - Y^T X Theta X^T Y, where
/// Q^T A Q = S Theta S^T and X = Q S. Costs k + m d_s applies. Throws
/// ContractViolation if ||Q^T Q - I||_F > 1e-8.
PartialTraceEstimate estimate_deflated_dense(const LinOp& a, const Eigen::MatrixXd& q,
                                             const BipartiteSplit& split,
                                             const ProbeConfig& probes);

/// (1/2)(W^T A Z + Z^T A W) with Z = (I - QQ^T)Y and W = (I + QQ^T)Y. Equals
/// Y^T A Y - Y^T QQ^T A QQ^T Y with less cancellation when Q is not an
/// invariant subspace. Costs b applies.
Eigen::MatrixXd residual_quadratic_general_q(const LinOp& a, const Eigen::MatrixXd& q,
                                             const Eigen::Ref<const Eigen::MatrixXd>& y);

/// Like estimate_deflated_dense but with residual samples in the W/Z form.
PartialTraceEstimate estimate_general_q(const LinOp& a, const Eigen::MatrixXd& q,
                                        const BipartiteSplit& split, const ProbeConfig& probes);

struct RangeResult {
  Eigen::MatrixXd q;
  Eigen::Index requested = 0;
  /// Fewer than `requested` columns survived the rank test.
  bool rank_deficient = false;
};

/// Orthonormal basis of range(A Omega) for a d_t x k Gaussian Omega, via
/// column-pivoted QR; directions below 1e-10 relative are dropped.
RangeResult randomized_range(const LinOp& a, Eigen::Index k, std::uint64_t seed);

struct GroundStateRho {
  Eigen::MatrixXd rho;
  /// Number of basis vectors within the degeneracy tolerance of lambda_1.
  Eigen::Index degeneracy = 0;
  /// Every basis vector was degenerate, so the ground space may be larger.
  bool possibly_truncated = false;
};

/// The beta -> infinity limit: the average of tr_b(q_i q_i^T) over the
/// eigenvectors with lambda_i - lambda_1 <= tol * max(1, |lambda_1|).
GroundStateRho ground_state_rho(const DeflationBasis& basis, const BipartiteSplit& split,
                                double tol = 1e-9);

struct ThermalOptions {
  DepthOptions depth;
  /// Skip depth selection and use this depth when positive.
  Eigen::Index fixed_depth = 0;
  bool reorthogonalize = false;
  /// Test hook: abort instead of replacing dependent Lanczos directions.
  BreakdownPolicy breakdown = BreakdownPolicy::kReplace;
};

struct ThermalResult {
  std::vector<PartialTraceEstimate> estimates;  // one per beta, in input order
  Eigen::Index depth = 0;
  /// Energy shift lambda_shift used inside exp(-beta (x - lambda_shift)).
  double shift = 0.0;
  double depth_change = 0.0;
  std::uint64_t pilot_matvecs = 0;
  /// Exactly m t d_s unless the Krylov space was exhausted early.
  std::uint64_t estimator_matvecs = 0;
  Eigen::Index replaced_columns = 0;
  bool exhausted = false;
};

/// Partial traces of exp(-beta H) for every beta in `betas`, deflated with
/// `basis`. Each probe runs one Lanczos recurrence whose quadrature is then
/// re-evaluated for all betas. Betas must be finite and non-negative;
/// beta = 0 returns the exact d_b I.
ThermalResult estimate_thermal(const LinOp& h, const BipartiteSplit& split,
                               const DeflationBasis& basis, std::span<const double> betas,
                               const ProbeConfig& probes, const ThermalOptions& options = {});

/// ||Q^T Q - I||_F.
double orthonormality_defect(const Eigen::MatrixXd& q);

}  // namespace partrace
