#include "partrace/ptrace.hpp"

#include "partrace/errors.hpp"
#include "partrace/jackknife.hpp"
#include "partrace/parallel.hpp"
#include "partrace/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace partrace {
namespace {

void check_length(Eigen::Index rows, const BipartiteSplit& split, const char* who) {
  if (rows != split.d_t()) {
    std::ostringstream msg;
    msg << who << ": expected length " << split.d_t() << ", got " << rows;
    throw std::invalid_argument(msg.str());
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

double common_scale(const PartialTraceEstimate& est) {
  double scale = -std::numeric_limits<double>::infinity();
  if (!est.defl_term.is_zero()) scale = est.defl_term.log_scale;
  for (const auto& r : est.rem_samples) {
    if (!r.is_zero()) scale = std::max(scale, r.log_scale);
  }
  return std::isfinite(scale) ? scale : 0.0;
}

Eigen::MatrixXd at_scale_or_zero(const LogScaledMatrix& x, double scale, Eigen::Index d) {
  if (x.mat.size() == 0) return Eigen::MatrixXd::Zero(d, d);
  return x.at_scale(scale);
}

}  // namespace

Eigen::MatrixXd partial_trace_rank1(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const BipartiteSplit& split, double weight) {
  check_length(x.size(), split, "partial_trace_rank1");
  const Eigen::Map<const Eigen::MatrixXd> chunks(x.data(), split.d_b(), split.d_s());
  return weight * (chunks.transpose() * chunks);
}

Eigen::MatrixXd partial_trace_lowrank(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights,
                                      const BipartiteSplit& split) {
  check_length(x.rows(), split, "partial_trace_lowrank");
  if (weights.size() != x.cols()) throw std::invalid_argument("partial_trace_lowrank: weight count mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(split.d_s(), split.d_s());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Eigen::VectorXd col = x.col(c);
    out += partial_trace_rank1(col, split, weights(c));
  }
  return out;
}

double orthonormality_defect(const Eigen::MatrixXd& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - Eigen::MatrixXd::Identity(q.cols(), q.cols())).norm();
}

void finalize_estimate(PartialTraceEstimate& est) {
  const Eigen::Index d = est.defl_term.mat.rows() > 0 ? est.defl_term.mat.rows()
                                                       : est.rem_samples.front().mat.rows();
  const double scale = common_scale(est);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : est.rem_samples) acc += at_scale_or_zero(r, scale, d);
  acc /= static_cast<double>(est.rem_samples.size());
  acc += at_scale_or_zero(est.defl_term, scale, d);

  const double nrm = acc.norm();
  const Eigen::MatrixXd sym = symmetrized(acc);
  est.asymmetry = nrm > 0 ? (acc - sym).norm() / nrm : 0.0;
  est.mean = LogScaledMatrix(sym, scale);
  est.m = static_cast<Eigen::Index>(est.rem_samples.size());

  if (est.rem_samples.size() < 2) {
    est.std_error = Eigen::MatrixXd::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
    return;
  }
  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(est.rem_samples.size());
  for (const auto& r : est.rem_samples) samples.push_back(at_scale_or_zero(r, est.mean.log_scale, d));
  est.std_error = jackknife_stderr(std::span<const Eigen::MatrixXd>(samples));
}

Eigen::MatrixXd PartialTraceEstimate::rho() const { return mean.trace_normalized(); }

std::vector<Eigen::MatrixXd> PartialTraceEstimate::leave_one_out_rho() const {
  const std::size_t count = rem_samples.size();
  if (count < 2) throw std::invalid_argument("leave_one_out_rho: at least two samples are required");
  const Eigen::Index d = mean.mat.rows();
  const double scale = common_scale(*this);
  std::vector<Eigen::MatrixXd> rem;
  rem.reserve(count);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : rem_samples) {
    rem.push_back(at_scale_or_zero(r, scale, d));
    total += rem.back();
  }
  const Eigen::MatrixXd defl = at_scale_or_zero(defl_term, scale, d);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(count);
  for (const auto& r : rem) {
    Eigen::MatrixXd b = symmetrized(defl + (total - r) / static_cast<double>(count - 1));
    const double tr = b.trace();
    if (tr == 0.0 || !std::isfinite(tr)) throw DomainError("leave_one_out_rho: zero trace", tr);
    out.push_back(b / tr);
  }
  return out;
}

Eigen::MatrixXd PartialTraceEstimate::rho_std_error() const {
  const Eigen::Index d = mean.mat.rows();
  if (rem_samples.size() < 2) {
    return Eigen::MatrixXd::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
  }
  const auto loo = leave_one_out_rho();
  return jackknife_from_replicates(std::span<const Eigen::MatrixXd>(loo));
}

namespace {

struct DeflationTerms {
  Eigen::MatrixXd x;       // Q S
  Eigen::VectorXd theta;   // eigenvalues of Q^T A Q
};

DeflationTerms deflation_terms(const LinOp& a, const Eigen::MatrixXd& q) {
  const double defect = orthonormality_defect(q);
  if (defect > 1e-8) {
    std::ostringstream msg;
    msg << "deflation basis is not orthonormal: ||Q^T Q - I||_F = " << defect;
    throw ContractViolation(msg.str());
  }
  DeflationTerms out;
  if (q.cols() == 0) {
    out.x = q;
    out.theta = Eigen::VectorXd(0);
    return out;
  }
  const Eigen::MatrixXd aq = a(q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(q.transpose() * aq));
  if (eig.info() != Eigen::Success) throw NumericalError("deflation: eigendecomposition of Q^T A Q failed");
  out.x = q * eig.eigenvectors();
  out.theta = eig.eigenvalues();
  return out;
}

template <class SampleFn>
PartialTraceEstimate run_samples(const LinOp& a, const BipartiteSplit& split,
                                 const ProbeConfig& probes, Eigen::MatrixXd defl,
                                 Eigen::Index k, std::uint64_t start_applies, SampleFn&& sample) {
  PartialTraceEstimate est;
  est.defl_term = LogScaledMatrix(std::move(defl), 0.0);
  est.rem_samples.resize(static_cast<std::size_t>(probes.m));
  parallel_for(static_cast<std::size_t>(probes.m), probes.parallel_width, [&](std::size_t i) {
    const Eigen::VectorXd v = draw_probe(probes, split.d_b(), static_cast<Eigen::Index>(i));
    est.rem_samples[i] = LogScaledMatrix(sample(v), 0.0);
  });
  est.k = k;
  est.seed = probes.seed;
  est.matvecs = a.applies() - start_applies;
  finalize_estimate(est);
  return est;
}

}  // namespace

PartialTraceEstimate estimate_plain(const LinOp& a, const BipartiteSplit& split,
                                    const ProbeConfig& probes) {
  return estimate_deflated_dense(a, Eigen::MatrixXd(split.d_t(), 0), split, probes);
}

PartialTraceEstimate estimate_deflated_dense(const LinOp& a, const Eigen::MatrixXd& q,
                                             const BipartiteSplit& split,
                                             const ProbeConfig& probes) {
  probes.validate();
  check_length(a.dim(), split, "estimate_deflated_dense");
  check_length(q.rows(), split, "estimate_deflated_dense");
  const std::uint64_t start = a.applies();
  const DeflationTerms terms = deflation_terms(a, q);
  Eigen::MatrixXd defl = partial_trace_lowrank(terms.x, terms.theta, split);
  return run_samples(a, split, probes, std::move(defl), q.cols(), start, [&](const Eigen::VectorXd& v) {
    const Eigen::MatrixXd ay = a(probe_block(v, split.d_s()));
    Eigen::MatrixXd b = probe_contract(v, ay);
    if (terms.x.cols() > 0) {
      const Eigen::MatrixXd yx = probe_contract(v, terms.x);
      b -= yx * terms.theta.asDiagonal() * yx.transpose();
    }
    return b;
  });
}

Eigen::MatrixXd residual_quadratic_general_q(const LinOp& a, const Eigen::MatrixXd& q,
                                             const Eigen::Ref<const Eigen::MatrixXd>& y) {
  if (q.rows() != a.dim() || y.rows() != a.dim()) {
    throw std::invalid_argument("residual_quadratic_general_q: dimension mismatch");
  }
  Eigen::MatrixXd z = y;
  Eigen::MatrixXd w = y;
  if (q.cols() > 0) {
    const Eigen::MatrixXd qy = q * (q.transpose() * y);
    z -= qy;
    w += qy;
  }
  const Eigen::MatrixXd waz = w.transpose() * a(z);
  return symmetrized(waz);
}

PartialTraceEstimate estimate_general_q(const LinOp& a, const Eigen::MatrixXd& q,
                                        const BipartiteSplit& split, const ProbeConfig& probes) {
  probes.validate();
  check_length(a.dim(), split, "estimate_general_q");
  check_length(q.rows(), split, "estimate_general_q");
  const std::uint64_t start = a.applies();
  const DeflationTerms terms = deflation_terms(a, q);
  Eigen::MatrixXd defl = partial_trace_lowrank(terms.x, terms.theta, split);
  return run_samples(a, split, probes, std::move(defl), q.cols(), start, [&](const Eigen::VectorXd& v) {
    return residual_quadratic_general_q(a, q, probe_block(v, split.d_s()));
  });
}

RangeResult randomized_range(const LinOp& a, Eigen::Index k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("randomized_range: k must be at least 1");
  if (k > a.dim()) throw std::invalid_argument("randomized_range: k exceeds the dimension");
  auto rng = make_stream(seed, 0);
  const Eigen::MatrixXd omega = gaussian_matrix(a.dim(), k, rng);
  const Eigen::MatrixXd sample = a(omega);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sample);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  RangeResult out;
  out.requested = k;
  out.rank_deficient = rank < k;
  out.q = qr.householderQ() * Eigen::MatrixXd::Identity(a.dim(), rank);
  return out;
}

GroundStateRho ground_state_rho(const DeflationBasis& basis, const BipartiteSplit& split, double tol) {
  if (basis.empty()) throw std::invalid_argument("ground_state_rho: needs at least one eigenvector");
  check_length(basis.q.rows(), split, "ground_state_rho");
  const double lambda1 = basis.lambda(0);
  const double window = tol * std::max(1.0, std::abs(lambda1));
  GroundStateRho out;
  out.rho = Eigen::MatrixXd::Zero(split.d_s(), split.d_s());
  for (Eigen::Index i = 0; i < basis.size() && basis.lambda(i) - lambda1 <= window; ++i) {
    const Eigen::VectorXd qi = basis.q.col(i);
    out.rho += partial_trace_rank1(qi, split);
    ++out.degeneracy;
  }
  out.rho /= static_cast<double>(out.degeneracy);
  out.rho = symmetrized(out.rho);
  out.possibly_truncated = out.degeneracy == basis.size() && basis.size() < split.d_t();
  return out;
}

}  // namespace partrace
