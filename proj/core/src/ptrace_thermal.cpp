#include "partrace/errors.hpp"
#include "partrace/parallel.hpp"
#include "partrace/ptrace.hpp"
#include "partrace/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace partrace {
namespace {

// Stream index for the depth-selection pilot, disjoint from sample indices.
constexpr Eigen::Index kPilotStream = std::numeric_limits<Eigen::Index>::max();

}  // namespace

ThermalResult estimate_thermal(const LinOp& h, const BipartiteSplit& split,
                               const DeflationBasis& basis, std::span<const double> betas,
                               const ProbeConfig& probes, const ThermalOptions& options) {
  probes.validate();
  if (betas.empty()) throw std::invalid_argument("estimate_thermal: no beta values");
  for (double beta : betas) {
    if (std::isnan(beta) || beta < 0) throw std::invalid_argument("estimate_thermal: beta must be non-negative");
    if (!std::isfinite(beta)) {
      throw std::invalid_argument("estimate_thermal: infinite beta needs the ground-state path");
    }
  }
  if (h.dim() != split.d_t() || basis.q.rows() != split.d_t()) {
    throw std::invalid_argument("estimate_thermal: operator, basis and split disagree on d_t");
  }
  const double defect = orthonormality_defect(basis.q);
  if (defect > 1e-8) {
    std::ostringstream msg;
    msg << "deflation basis is not orthonormal: ||Q^T Q - I||_F = " << defect;
    throw ContractViolation(msg.str());
  }

  const Eigen::Index k = basis.size();
  const Eigen::Index d_s = split.d_s();
  const Eigen::Index d_b = split.d_b();
  const auto m = static_cast<std::size_t>(probes.m);
  const Eigen::MatrixXd& q = basis.q;

  ThermalResult result;
  LanczosOptions lanczos = options.depth.lanczos;
  lanczos.reorthogonalize = options.reorthogonalize;
  lanczos.breakdown = options.breakdown;

  auto start_block = [&](Eigen::Index index) {
    Eigen::MatrixXd z = probe_block(draw_probe(probes, d_b, index), d_s);
    if (k > 0) z -= q * (q.transpose() * z);
    return z;
  };

  std::vector<std::optional<SpectralQuadrature>> quads(m);
  const bool full = k == split.d_t();
  if (!full) {
    const std::uint64_t before_pilot = h.applies();
    if (options.fixed_depth > 0) {
      result.depth = options.fixed_depth;
    } else {
      DepthOptions depth_opts = options.depth;
      depth_opts.lanczos = lanczos;
      const DepthChoice choice = choose_depth(h, basis, start_block(kPilotStream), betas, depth_opts);
      result.depth = choice.depth;
      result.depth_change = choice.last_change;
    }
    result.pilot_matvecs = h.applies() - before_pilot;

    std::vector<Eigen::Index> replaced(m, 0);
    std::vector<char> exhausted(m, 0);
    const std::uint64_t before = h.applies();
    parallel_for(m, probes.parallel_width, [&](std::size_t i) {
      LanczosOptions own = lanczos;
      own.seed = mix64(lanczos.seed ^ mix64(probes.seed + i));
      BlockLanczos recurrence(h, start_block(static_cast<Eigen::Index>(i)), q, own);
      recurrence.extend(result.depth);
      quads[i].emplace(recurrence.tridiagonal());
      replaced[i] = recurrence.replaced_columns();
      exhausted[i] = recurrence.exhausted() ? 1 : 0;
    });
    result.estimator_matvecs = h.applies() - before;
    for (std::size_t i = 0; i < m; ++i) {
      result.replaced_columns += replaced[i];
      result.exhausted = result.exhausted || exhausted[i];
    }
  }

  if (k > 0) {
    result.shift = basis.lambda(0);
  } else {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& quad : quads) {
      if (quad->ritz_values().size() > 0) lo = std::min(lo, quad->ritz_values().minCoeff());
    }
    result.shift = std::isfinite(lo) ? lo : 0.0;
  }

  std::vector<Eigen::MatrixXd> eig_traces;
  eig_traces.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXd qi = q.col(i);
    eig_traces.push_back(partial_trace_rank1(qi, split));
  }

  result.estimates.reserve(betas.size());
  for (double beta : betas) {
    PartialTraceEstimate est;
    if (beta == 0.0) {
      // exp(0) = I, so tr_b is d_b I with no sampling error.
      est.defl_term = LogScaledMatrix(static_cast<double>(split.d_b()) * Eigen::MatrixXd::Identity(d_s, d_s), 0.0);
      est.rem_samples.assign(m, LogScaledMatrix(Eigen::MatrixXd::Zero(d_s, d_s), 0.0));
      est.k = k;
      est.depth = result.depth;
      est.seed = probes.seed;
      est.beta = beta;
      est.matvecs = result.estimator_matvecs;
      finalize_estimate(est);
      result.estimates.push_back(std::move(est));
      continue;
    }
    const double log_scale = -beta * result.shift;
    Eigen::MatrixXd defl = Eigen::MatrixXd::Zero(d_s, d_s);
    for (Eigen::Index i = 0; i < k; ++i) {
      defl += std::exp(-beta * (basis.lambda(i) - result.shift)) * eig_traces[static_cast<std::size_t>(i)];
    }
    est.defl_term = LogScaledMatrix(std::move(defl), log_scale);
    est.rem_samples.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (full) {
        est.rem_samples.emplace_back(Eigen::MatrixXd::Zero(d_s, d_s), 0.0);
      } else {
        est.rem_samples.emplace_back(quads[i]->evaluate_exp(beta, result.shift), log_scale);
      }
    }
    est.k = k;
    est.depth = result.depth;
    est.seed = probes.seed;
    est.beta = beta;
    est.matvecs = result.estimator_matvecs;
    finalize_estimate(est);
    result.estimates.push_back(std::move(est));
  }
  return result;
}

}  // namespace partrace
