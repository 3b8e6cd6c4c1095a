#include "partrace/errors.hpp"
#include "partrace/krylov.hpp"
#include "partrace/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace partrace {

DeflationBasis DeflationBasis::none(Eigen::Index dim) {
  DeflationBasis b;
  b.q = Eigen::MatrixXd(dim, 0);
  b.lambda = Eigen::VectorXd(0);
  b.residual_norms = Eigen::VectorXd(0);
  return b;
}

Eigen::MatrixXd BlockTridiagonal::assemble() const {
  const Eigen::Index b = block_size();
  const Eigen::Index t = depth();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t * b, t * b);
  for (Eigen::Index j = 0; j < t; ++j) {
    out.block(j * b, j * b, b, b) = diag_blocks[static_cast<std::size_t>(j)];
    if (j + 1 < t) {
      const Eigen::MatrixXd& off = off_blocks[static_cast<std::size_t>(j)];
      out.block((j + 1) * b, j * b, b, b) = off;
      out.block(j * b, (j + 1) * b, b, b) = off.transpose();
    }
  }
  return out;
}

BlockTridiagonal BlockTridiagonal::leading(Eigen::Index depth_wanted) const {
  if (depth_wanted < 0 || depth_wanted > depth()) {
    throw std::invalid_argument("BlockTridiagonal::leading: depth out of range");
  }
  BlockTridiagonal out;
  out.r0 = r0;
  out.diag_blocks.assign(diag_blocks.begin(), diag_blocks.begin() + depth_wanted);
  const Eigen::Index n_off = std::max<Eigen::Index>(depth_wanted - 1, 0);
  out.off_blocks.assign(off_blocks.begin(), off_blocks.begin() + n_off);
  return out;
}

void write_tridiagonal(const BlockTridiagonal& trid, std::ostream& out) {
  const Eigen::Index b = trid.block_size();
  auto dump = [&](const Eigen::MatrixXd& m) {
    char buf[32];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  };
  out << "block_tridiagonal " << b << ' ' << trid.depth() << '\n';
  out << "R0\n";
  dump(trid.r0);
  for (Eigen::Index j = 0; j < trid.depth(); ++j) {
    out << "M " << j << '\n';
    dump(trid.diag_blocks[static_cast<std::size_t>(j)]);
    if (j + 1 < trid.depth()) {
      out << "B " << j << '\n';
      dump(trid.off_blocks[static_cast<std::size_t>(j)]);
    }
  }
}

BlockLanczos::BlockLanczos(const LinOp& h, const Eigen::Ref<const Eigen::MatrixXd>& z,
                           const Eigen::MatrixXd& q_defl, LanczosOptions options)
    : h_(&h), q_(&q_defl), options_(options) {
  if (z.rows() != h.dim()) throw std::invalid_argument("BlockLanczos: start block has wrong length");
  if (q_defl.rows() != h.dim()) throw std::invalid_argument("BlockLanczos: deflation basis has wrong length");
  if (z.cols() < 1) throw std::invalid_argument("BlockLanczos: empty start block");
  if (!z.allFinite()) throw std::invalid_argument("BlockLanczos: start block is not finite");
  const double z_norm = z.norm();
  if (z_norm == 0.0) throw std::invalid_argument("BlockLanczos: start block is zero");

  Eigen::MatrixXd x = z;
  if (q_->cols() > 0) x -= (*q_) * (q_->transpose() * x);
  trid_.r0 = orthonormalize(x, z_norm, 0);
  if (!exhausted_) v_.push_back(std::move(x));
}

Eigen::MatrixXd BlockLanczos::orthonormalize(Eigen::MatrixXd& x, double reference_norm,
                                             Eigen::Index depth) {
  const Eigen::Index b = x.cols();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(b, b);
  const double x_norm = x.norm();
  const bool whole_block_gone = x_norm <= options_.exhaustion_tol * reference_norm;
  const double col_tol = options_.breakdown_tol * x_norm;

  std::vector<Eigen::Index> dependent;
  for (Eigen::Index c = 0; c < b; ++c) {
    if (whole_block_gone) {
      dependent.push_back(c);
      continue;
    }
    Eigen::VectorXd u = x.col(c);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index p = 0; p < c; ++p) {
        if (std::find(dependent.begin(), dependent.end(), p) != dependent.end()) continue;
        const double coef = x.col(p).dot(u);
        r(p, c) += coef;
        u -= coef * x.col(p);
      }
    }
    const double nu = u.norm();
    if (nu < col_tol || nu == 0.0) {
      dependent.push_back(c);
      continue;
    }
    r(c, c) = nu;
    x.col(c) = u / nu;
  }

  if (dependent.empty()) return r;
  if (options_.breakdown == BreakdownPolicy::kAbort) {
    std::ostringstream msg;
    msg << "block Lanczos: rank-deficient QR at depth " << depth << ", column " << dependent.front()
        << " (block norm " << x_norm << ")";
    throw DegenerateKrylov(msg.str(), depth, dependent.front());
  }

  // Good columns first, then fill dependent slots with fresh directions that
  // are orthogonal to everything, so their coupling rows in R are zero.
  Eigen::MatrixXd filled(x.rows(), b);
  Eigen::Index n_filled = 0;
  for (Eigen::Index c = 0; c < b; ++c) {
    if (std::find(dependent.begin(), dependent.end(), c) == dependent.end()) {
      filled.col(n_filled++) = x.col(c);
    }
  }
  const bool any_good = static_cast<Eigen::Index>(dependent.size()) < b;
  for (Eigen::Index c : dependent) {
    r.row(c).setZero();
    Eigen::VectorXd w(x.rows());
    if (!space_full_ && random_direction(filled, n_filled, w)) {
      x.col(c) = w;
      filled.col(n_filled++) = w;
      ++replaced_;
      continue;
    }
    if (!any_good) {
      exhausted_ = true;
      return r;
    }
    // No room left: the slot becomes a zero column, which decouples in T.
    space_full_ = true;
    x.col(c).setZero();
  }
  return r;
}

bool BlockLanczos::random_direction(const Eigen::MatrixXd& block_so_far, Eigen::Index filled,
                                    Eigen::Ref<Eigen::VectorXd> out) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    auto rng = make_stream(options_.seed, draws_++);
    Eigen::VectorXd w = gaussian_matrix(out.size(), 1, rng);
    for (int pass = 0; pass < 2; ++pass) {
      if (q_->cols() > 0) w -= (*q_) * (q_->transpose() * w);
      for (const Eigen::MatrixXd& vb : v_) w -= vb * (vb.transpose() * w);
      if (filled > 0) {
        const auto cols = block_so_far.leftCols(filled);
        w -= cols * (cols.transpose() * w);
      }
    }
    const double nw = w.norm();
    if (nw > 1e-8 * std::sqrt(static_cast<double>(out.size()))) {
      out = w / nw;
      return true;
    }
  }
  return false;
}

void BlockLanczos::step() {
  const Eigen::Index j = depth();
  if (j > 0) {
    Eigen::MatrixXd next = std::move(pending_);
    Eigen::MatrixXd r = orthonormalize(next, pending_reference_, j);
    if (exhausted_) return;
    trid_.off_blocks.push_back(std::move(r));
    v_.push_back(std::move(next));
  }

  const Eigen::MatrixXd& vj = v_.back();
  Eigen::MatrixXd x = (*h_)(vj);
  const double hv_norm = x.norm();
  if (j > 0) x.noalias() -= v_[static_cast<std::size_t>(j - 1)] * trid_.off_blocks.back().transpose();
  Eigen::MatrixXd m = vj.transpose() * x;
  m = 0.5 * (m + m.transpose()).eval();
  x.noalias() -= vj * m;
  if (q_->cols() > 0) x.noalias() -= (*q_) * (q_->transpose() * x);
  if (options_.reorthogonalize) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const Eigen::MatrixXd& vb : v_) x.noalias() -= vb * (vb.transpose() * x);
      if (q_->cols() > 0) x.noalias() -= (*q_) * (q_->transpose() * x);
    }
  }
  trid_.diag_blocks.push_back(std::move(m));
  pending_ = std::move(x);
  pending_reference_ = hv_norm;
  if (space_full_) exhausted_ = true;
}

void BlockLanczos::extend(Eigen::Index depth_wanted) {
  while (!exhausted_ && depth() < depth_wanted) step();
}

Eigen::MatrixXd BlockLanczos::basis() const {
  const Eigen::Index n = h_->dim();
  const Eigen::Index b = trid_.block_size();
  const Eigen::Index t = depth();
  Eigen::MatrixXd out(n, t * b);
  for (Eigen::Index j = 0; j < t; ++j) out.middleCols(j * b, b) = v_[static_cast<std::size_t>(j)];
  return out;
}

double BlockLanczos::orthogonality_loss() const {
  const Eigen::MatrixXd v = basis();
  Eigen::VectorXd expected(v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) expected(c) = v.col(c).isZero(0.0) ? 0.0 : 1.0;
  return (v.transpose() * v - Eigen::MatrixXd(expected.asDiagonal())).norm();
}

double BlockLanczos::deflation_leak() const {
  if (q_->cols() == 0) return 0.0;
  return (basis().transpose() * (*q_)).norm();
}

BlockTridiagonal block_lanczos_defl(const LinOp& h, const Eigen::Ref<const Eigen::MatrixXd>& z,
                                    const DeflationBasis& q_defl, Eigen::Index depth,
                                    bool reorthogonalize) {
  if (depth < 1) throw std::invalid_argument("block_lanczos_defl: depth must be at least 1");
  LanczosOptions options;
  options.reorthogonalize = reorthogonalize;
  BlockLanczos lanczos(h, z, q_defl.q, options);
  lanczos.extend(depth);
  return lanczos.tridiagonal();
}

SpectralQuadrature::SpectralQuadrature(const BlockTridiagonal& trid) {
  const Eigen::Index b = trid.block_size();
  if (trid.depth() == 0) {
    theta_ = Eigen::VectorXd(0);
    weights_ = Eigen::MatrixXd::Zero(b, 0);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(trid.assemble());
  if (eig.info() != Eigen::Success) throw NumericalError("quadrature: eigendecomposition of T failed");
  theta_ = eig.eigenvalues();
  weights_ = trid.r0.transpose() * eig.eigenvectors().topRows(b);
}

Eigen::MatrixXd SpectralQuadrature::weighted(const Eigen::VectorXd& fvals) const {
  Eigen::MatrixXd out = weights_ * fvals.asDiagonal() * weights_.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd SpectralQuadrature::evaluate(const ScalarFunction& f) const {
  Eigen::VectorXd fvals(theta_.size());
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    fvals(i) = f(theta_(i));
    if (!std::isfinite(fvals(i))) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "quadrature: f is undefined at eigenvalue " << theta_(i) << " of T";
      throw DomainError(msg.str(), theta_(i));
    }
  }
  return weighted(fvals);
}

Eigen::MatrixXd SpectralQuadrature::evaluate_exp(double beta, double shift) const {
  Eigen::VectorXd fvals = (-beta * (theta_.array() - shift)).exp().matrix();
  return weighted(fvals);
}

Eigen::MatrixXd matfun_quadrature(const BlockTridiagonal& trid, const ScalarFunction& f) {
  return SpectralQuadrature(trid).evaluate(f);
}

DepthChoice choose_depth(const LinOp& h, const DeflationBasis& q_defl,
                         const Eigen::Ref<const Eigen::MatrixXd>& z_pilot,
                         std::span<const double> betas, const DepthOptions& options) {
  if (!(options.rel_tol > 0)) throw std::invalid_argument("choose_depth: rel_tol must be positive");
  if (betas.empty()) throw std::invalid_argument("choose_depth: no beta values");
  for (double beta : betas) {
    if (!(beta >= 0) || !std::isfinite(beta)) {
      throw std::invalid_argument("choose_depth: beta must be finite and non-negative");
    }
  }

  BlockLanczos lanczos(h, z_pilot, q_defl.q, options.lanczos);
  const BlockTridiagonal& full = lanczos.tridiagonal();
  const double scale = (full.r0.transpose() * full.r0).norm();
  if (scale == 0.0) return {1, 0.0};

  auto quadratures = [&](Eigen::Index t, double shift) {
    SpectralQuadrature quad(full.leading(std::min(t, lanczos.depth())));
    std::vector<Eigen::MatrixXd> out;
    out.reserve(betas.size());
    for (double beta : betas) out.push_back(quad.evaluate_exp(beta, shift));
    return out;
  };

  double last_change = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 1; 2 * t <= options.max_depth; t *= 2) {
    lanczos.extend(2 * t);
    double shift = 0.0;
    if (!q_defl.empty()) {
      shift = q_defl.lambda(0);
    } else {
      shift = SpectralQuadrature(full).ritz_values().minCoeff();
    }
    const auto coarse = quadratures(t, shift);
    const auto fine = quadratures(2 * t, shift);
    last_change = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      last_change = std::max(last_change, (fine[i] - coarse[i]).norm() / scale);
    }
    if (last_change <= options.rel_tol) return {std::min(t, lanczos.depth()), last_change};
    if (lanczos.exhausted() && lanczos.depth() <= t) return {lanczos.depth(), 0.0};
  }
  throw ConvergenceFailure("choose_depth: no stagnation up to depth " +
                               std::to_string(options.max_depth) + " (last relative change " +
                               std::to_string(last_change) + ")",
                           -1, last_change);
}

DepthChoice choose_depth(const LinOp& h, const DeflationBasis& q_defl,
                         const Eigen::Ref<const Eigen::MatrixXd>& z_pilot, double beta_max,
                         const DepthOptions& options) {
  const double betas[] = {beta_max};
  return choose_depth(h, q_defl, z_pilot, std::span<const double>(betas), options);
}

}  // namespace partrace
