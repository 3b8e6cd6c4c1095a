#include "partrace/errors.hpp"
#include "partrace/krylov.hpp"
#include "partrace/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace partrace {
namespace {

void fix_signs(Eigen::MatrixXd& q) {
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    Eigen::Index at = 0;
    q.col(c).cwiseAbs().maxCoeff(&at);
    if (q(at, c) < 0) q.col(c) *= -1.0;
  }
}

DeflationBasis dense_lowest(const LinOp& h, Eigen::Index k) {
  const Eigen::Index n = h.dim();
  Eigen::MatrixXd a = h(Eigen::MatrixXd::Identity(n, n));
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("lowest_eigenpairs: dense eigensolver failed");
  DeflationBasis out;
  out.q = eig.eigenvectors().leftCols(k);
  fix_signs(out.q);
  out.lambda = eig.eigenvalues().head(k);
  out.residual_norms = (a * out.q - out.q * out.lambda.asDiagonal()).colwise().norm().transpose();
  return out;
}

// Upper bound on the spectrum from a short Lanczos run: theta_max + |beta_last|.
double upper_bound(const LinOp& h, std::mt19937_64& rng) {
  const Eigen::Index n = h.dim();
  const int steps = static_cast<int>(std::min<Eigen::Index>(n, 24));
  Eigen::VectorXd v = gaussian_matrix(n, 1, rng);
  v.normalize();
  Eigen::VectorXd v_prev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd alpha(steps), beta(steps);
  double b_prev = 0.0;
  int done = 0;
  for (int j = 0; j < steps; ++j) {
    Eigen::VectorXd w = h(v);
    alpha(j) = w.dot(v);
    w -= alpha(j) * v + b_prev * v_prev;
    beta(j) = w.norm();
    ++done;
    if (beta(j) < 1e-12 * std::abs(alpha(j)) || beta(j) == 0.0) break;
    v_prev = v;
    v = w / beta(j);
    b_prev = beta(j);
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(done, done);
  for (int j = 0; j < done; ++j) {
    t(j, j) = alpha(j);
    if (j + 1 < done) t(j, j + 1) = t(j + 1, j) = beta(j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t, Eigen::EigenvaluesOnly);
  double bound = eig.eigenvalues().maxCoeff() + std::abs(beta(done - 1));
  if (h.norm_bound() > 0) bound = std::min(bound, h.norm_bound());
  return bound;
}

// Orthonormal columns from y, orthogonal to `locked`; vanished directions are
// replaced by random ones.
Eigen::MatrixXd orthonormalize_against(const Eigen::MatrixXd& locked, Eigen::MatrixXd y,
                                       std::mt19937_64& rng) {
  const Eigen::Index n = y.rows();
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd u = y.col(c);
      const double before = u.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (locked.cols() > 0) u -= locked * (locked.transpose() * u);
        if (c > 0) u -= y.leftCols(c) * (y.leftCols(c).transpose() * u);
      }
      const double after = u.norm();
      if (after > 1e-10 * before && after > 0.0) {
        y.col(c) = u / after;
        break;
      }
      if (attempt > 4) throw NumericalError("lowest_eigenpairs: cannot complete the search block");
      y.col(c) = gaussian_matrix(n, 1, rng);
    }
  }
  return y;
}

}  // namespace

DeflationBasis lowest_eigenpairs(const LinOp& h, Eigen::Index k, const EigenSolverOptions& options) {
  const Eigen::Index n = h.dim();
  if (k < 0 || k > n) throw std::invalid_argument("lowest_eigenpairs: k must lie in [0, dim]");
  if (!(options.tol > 0)) throw std::invalid_argument("lowest_eigenpairs: tol must be positive");
  if (options.filter_degree < 1) throw std::invalid_argument("lowest_eigenpairs: filter_degree must be positive");
  if (k == 0) return DeflationBasis::none(n);

  const Eigen::Index guard = options.guard > 0 ? options.guard : std::clamp<Eigen::Index>(k, 4, 16);
  const Eigen::Index s = k + guard;
  if (n <= options.dense_cutoff || 2 * s >= n) return dense_lowest(h, k);

  auto rng = make_stream(options.seed, 0);
  const double upper = upper_bound(h, rng);

  Eigen::MatrixXd x = orthonormalize_against(Eigen::MatrixXd(n, 0), gaussian_matrix(n, s, rng), rng);
  Eigen::MatrixXd ax = h(x);
  Eigen::VectorXd theta;
  Eigen::VectorXd res;
  Eigen::Index locked = 0;

  auto rayleigh_ritz = [&](Eigen::Index from) {
    const Eigen::Index w = s - from;
    Eigen::MatrixXd g = x.rightCols(w).transpose() * ax.rightCols(w);
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(g);
    if (rr.info() != Eigen::Success) throw NumericalError("lowest_eigenpairs: Rayleigh-Ritz failed");
    x.rightCols(w) = x.rightCols(w) * rr.eigenvectors();
    ax.rightCols(w) = ax.rightCols(w) * rr.eigenvectors();
    theta.conservativeResize(s);
    theta.tail(w) = rr.eigenvalues();
  };
  theta.resize(s);
  rayleigh_ritz(0);

  double scale = std::max(std::abs(upper), std::abs(theta(0)));
  Eigen::Index first_bad = 0;
  double last_residual = 0.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Keep all pairs sorted; an active Ritz value can undercut a locked one.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
    for (Eigen::Index i = 0; i < s; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return theta(a) < theta(b); });
    {
      Eigen::MatrixXd xs(n, s), axs(n, s);
      Eigen::VectorXd ts(s);
      for (Eigen::Index i = 0; i < s; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(i)];
        xs.col(i) = x.col(src);
        axs.col(i) = ax.col(src);
        ts(i) = theta(src);
      }
      x = std::move(xs);
      ax = std::move(axs);
      theta = std::move(ts);
    }

    res = (ax - x * theta.asDiagonal()).colwise().norm().transpose();
    scale = std::max({scale, std::abs(theta(0)), std::abs(theta(s - 1))});
    const double thresh = options.tol * scale;
    locked = 0;
    while (locked < k && res(locked) <= thresh) ++locked;
    if (locked == k) {
      DeflationBasis out;
      out.q = x.leftCols(k);
      // Signs fixed on copies of converged vectors; residuals are sign-free.
      fix_signs(out.q);
      out.lambda = theta.head(k);
      out.residual_norms = res.head(k);
      return out;
    }
    first_bad = locked;
    last_residual = res(locked);

    // Filter interval [cut, upper] is damped; values near theta_0 are kept.
    const double cut = theta(s - 1);
    const double low = theta(0);
    const Eigen::Index active = s - locked;
    Eigen::MatrixXd y0 = x.rightCols(active);
    if (upper - cut > 1e-12 * scale && cut > low) {
      const double e = 0.5 * (upper - cut);
      const double c = 0.5 * (upper + cut);
      double sigma = e / (low - c);
      const double sigma1 = sigma;
      Eigen::MatrixXd y = (ax.rightCols(active) - c * y0) * (sigma1 / e);
      for (int d = 2; d <= options.filter_degree; ++d) {
        const double sigma2 = 1.0 / (2.0 / sigma1 - sigma);
        Eigen::MatrixXd ynew = (h(y) - c * y) * (2.0 * sigma2 / e) - (sigma * sigma2) * y0;
        y0 = std::move(y);
        y = std::move(ynew);
        sigma = sigma2;
      }
      y0 = std::move(y);
    }
    const Eigen::MatrixXd fixed = x.leftCols(locked);
    x.rightCols(active) = orthonormalize_against(fixed, std::move(y0), rng);
    ax.rightCols(active) = h(x.rightCols(active));
    rayleigh_ritz(locked);
  }

  std::ostringstream msg;
  msg << "lowest_eigenpairs: eigenpair " << first_bad << " not converged after " << options.max_iterations
      << " iterations (residual " << last_residual << ")";
  throw ConvergenceFailure(msg.str(), first_bad, last_residual);
}

}  // namespace partrace
