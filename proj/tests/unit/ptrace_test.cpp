#include "oracles.hpp"

#include "partrace/errors.hpp"
#include "partrace/jackknife.hpp"
#include "partrace/log_scaled.hpp"
#include "partrace/oracle.hpp"
#include "partrace/probes.hpp"
#include "partrace/ptrace.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace partrace {
namespace {

using testing::block_trace;

ProbeConfig probes(Eigen::Index m, std::uint64_t seed,
                   ProbeDistribution d = ProbeDistribution::kGaussian, int width = 1) {
  ProbeConfig p;
  p.m = m;
  p.seed = seed;
  p.distribution = d;
  p.parallel_width = width;
  return p;
}

TEST(PartialTraceRank1, Examples) {
  const BipartiteSplit split = BipartiteSplit::from_dims(2, 2);
  Eigen::MatrixXd e1 = partial_trace_rank1(Eigen::Vector4d(1, 0, 0, 0), split);
  EXPECT_EQ(e1, (Eigen::MatrixXd(2, 2) << 1, 0, 0, 0).finished());
  Eigen::MatrixXd g = partial_trace_rank1(Eigen::Vector4d(1, 2, 3, 4), split);
  EXPECT_EQ(g, (Eigen::MatrixXd(2, 2) << 5, 11, 11, 25).finished());
  EXPECT_THROW(partial_trace_rank1(Eigen::Vector3d(1, 2, 3), split), std::invalid_argument);
}

TEST(PartialTraceRank1, MatchesDenseOracleAndTrace) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 8);
  Eigen::VectorXd x(32);
  for (Eigen::Index i = 0; i < 32; ++i) x(i) = n(rng);
  const Eigen::MatrixXd r = partial_trace_rank1(x, split, 0.7);
  EXPECT_LT((r - block_trace(0.7 * x * x.transpose(), 4, 8)).norm(), 1e-13);
  EXPECT_NEAR(r.trace(), 0.7 * x.squaredNorm(), 1e-12);
}

TEST(Probes, DeterministicAndSphereNorm) {
  const ProbeConfig g = probes(3, 42);
  EXPECT_EQ(draw_probe(g, 16, 2), draw_probe(g, 16, 2));
  EXPECT_NE(draw_probe(g, 16, 1), draw_probe(g, 16, 2));
  const ProbeConfig s = probes(3, 42, ProbeDistribution::kSphere);
  EXPECT_NEAR(draw_probe(s, 16, 0).squaredNorm(), 16.0, 1e-12);
  EXPECT_THROW(parse_distribution("uniform"), std::invalid_argument);
  EXPECT_EQ(parse_distribution("sphere"), ProbeDistribution::kSphere);
}

TEST(Probes, BlockLayout) {
  const Eigen::MatrixXd y = probe_block(Eigen::Vector2d(3, 4), 2);
  Eigen::MatrixXd expected(4, 2);
  expected << 3, 0, 4, 0, 0, 3, 0, 4;
  EXPECT_EQ(y, expected);
}

TEST(EstimatePlain, IdentityWithSphereProbesIsExact) {
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 8);
  const PartialTraceEstimate est =
      estimate_plain(LinOp::identity(32), split, probes(5, 9, ProbeDistribution::kSphere));
  EXPECT_LT((est.value() - 8.0 * Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
  EXPECT_EQ(est.matvecs, 5u * 4u);
}

TEST(EstimatePlain, RankOneExpectation) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Eigen::VectorXd x(16);
  for (Eigen::Index i = 0; i < 16; ++i) x(i) = n(rng);
  const BipartiteSplit split = BipartiteSplit::from_dims(2, 8);
  const PartialTraceEstimate est =
      estimate_plain(LinOp::from_dense(x * x.transpose()), split, probes(2000, 17));
  const Eigen::MatrixXd target = block_trace(x * x.transpose(), 2, 8);
  const Eigen::MatrixXd se = est.std_error * std::exp(est.mean.log_scale);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) EXPECT_LE(std::abs(est.value()(i, j) - target(i, j)), 3 * se(i, j));
  }
}

TEST(EstimatePlain, UnbiasedOnRandomMatrix) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd a = testing::random_symmetric(16, rng);
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 4);
  const PartialTraceEstimate est = estimate_plain(LinOp::from_dense(a), split, probes(400, 23));
  const Eigen::MatrixXd target = block_trace(a, 4, 4);
  const Eigen::MatrixXd se = est.std_error * std::exp(est.mean.log_scale);
  EXPECT_LE(((est.value() - target).array().abs() / (se.array() + 1e-12)).maxCoeff(), 4.0);
}

TEST(EstimateDeflated, ExactWhenRangeCovered) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd q = testing::random_orthonormal(32, 3, rng);
  const Eigen::MatrixXd a = q * Eigen::Vector3d(2.0, -1.0, 0.5).asDiagonal() * q.transpose();
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 8);
  const PartialTraceEstimate est = estimate_deflated_dense(LinOp::from_dense(a), q, split, probes(6, 1));
  for (const auto& r : est.rem_samples) EXPECT_LE(r.value().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((est.value() - block_trace(a, 4, 8)).norm(), 1e-12);
  EXPECT_EQ(est.matvecs, 3u + 6u * 4u);
}

TEST(EstimateDeflated, EmptyBasisEqualsPlain) {
  std::mt19937_64 rng(8);
  const LinOp a = LinOp::from_dense(testing::random_symmetric(16, rng));
  const BipartiteSplit split = BipartiteSplit::from_dims(2, 8);
  const PartialTraceEstimate p = estimate_plain(a, split, probes(7, 99));
  const PartialTraceEstimate d = estimate_deflated_dense(a, Eigen::MatrixXd(16, 0), split, probes(7, 99));
  EXPECT_EQ(p.value(), d.value());
}

TEST(EstimateDeflated, RejectsNonOrthonormalBasis) {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd q = testing::random_orthonormal(16, 2, rng);
  q.col(0) *= 1.01;
  EXPECT_THROW(estimate_deflated_dense(LinOp::identity(16), q, BipartiteSplit::from_dims(2, 8), probes(2, 1)),
               ContractViolation);
}

TEST(EstimateDeflated, VarianceBelowResidualBound) {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd a = testing::random_symmetric(64, rng);
  const Eigen::MatrixXd q = testing::random_orthonormal(64, 8, rng);
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 16);
  const Eigen::MatrixXd p = q * q.transpose();
  const double bound = 2.0 * (a - p * a * p).squaredNorm();
  const PartialTraceEstimate est = estimate_deflated_dense(LinOp::from_dense(a), q, split, probes(400, 4));
  // Per-sample entry variance, each entry bounded by the total.
  Eigen::MatrixXd mean_r = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& r : est.rem_samples) mean_r += r.value();
  mean_r /= 400.0;
  double var = 0.0;
  for (const auto& r : est.rem_samples) var += (r.value() - mean_r).squaredNorm();
  var /= 399.0;
  EXPECT_LE(var, 1.2 * bound);
}

TEST(EstimateDeflated, LinearityWithSharedSeed) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd a = testing::random_symmetric(32, rng);
  const Eigen::MatrixXd b = testing::random_symmetric(32, rng);
  const Eigen::MatrixXd q = testing::random_orthonormal(32, 4, rng);
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 8);
  const double alpha = 0.6, gamma = -1.7;
  const auto ea = estimate_deflated_dense(LinOp::from_dense(a), q, split, probes(5, 3)).value();
  const auto eb = estimate_deflated_dense(LinOp::from_dense(b), q, split, probes(5, 3)).value();
  const auto ec = estimate_deflated_dense(LinOp::from_dense(alpha * a + gamma * b), q, split, probes(5, 3)).value();
  EXPECT_LE((ec - alpha * ea - gamma * eb).cwiseAbs().maxCoeff(), 1e-12 * (ea.norm() + eb.norm()));
}

TEST(EstimateDeflated, FullDeflationTraceIsExact) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd a = testing::random_symmetric(16, rng);
  const Eigen::MatrixXd q = testing::random_orthonormal(16, 16, rng);
  const auto est = estimate_deflated_dense(LinOp::from_dense(a), q, BipartiteSplit::from_dims(2, 8), probes(3, 1));
  EXPECT_NEAR(est.value().trace(), a.trace(), 1e-12 * a.norm());
}

TEST(EstimateDeflated, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(13);
  const LinOp a = LinOp::from_dense(testing::random_symmetric(32, rng));
  const Eigen::MatrixXd q = testing::random_orthonormal(32, 3, rng);
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 8);
  const auto one = estimate_deflated_dense(a, q, split, probes(9, 5, ProbeDistribution::kGaussian, 1));
  const auto four = estimate_deflated_dense(a, q, split, probes(9, 5, ProbeDistribution::kGaussian, 4));
  EXPECT_EQ(one.mean.mat, four.mean.mat);
  EXPECT_EQ(one.mean.log_scale, four.mean.log_scale);
  EXPECT_EQ(one.std_error, four.std_error);
}

TEST(ResidualGeneralQ, EmptyBasisIsQuadraticForm) {
  std::mt19937_64 rng(14);
  const Eigen::MatrixXd a = testing::random_symmetric(16, rng);
  const Eigen::MatrixXd y = testing::random_orthonormal(16, 2, rng) * 3.0;
  const Eigen::MatrixXd r = residual_quadratic_general_q(LinOp::from_dense(a), Eigen::MatrixXd(16, 0), y);
  EXPECT_LT((r - y.transpose() * a * y).norm(), 1e-12);
}

TEST(ResidualGeneralQ, InvariantSubspaceMatchesProjectedForm) {
  std::mt19937_64 rng(15);
  const Eigen::MatrixXd a = testing::random_symmetric(24, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::MatrixXd q = eig.eigenvectors().leftCols(5);
  const Eigen::MatrixXd y = testing::random_orthonormal(24, 3, rng);
  const Eigen::MatrixXd z = y - q * (q.transpose() * y);
  const Eigen::MatrixXd r = residual_quadratic_general_q(LinOp::from_dense(a), q, y);
  EXPECT_LT((r - z.transpose() * a * z).norm(), 1e-12);
}

TEST(ResidualGeneralQ, MatchesDirectDifference) {
  std::mt19937_64 rng(16);
  const Eigen::MatrixXd a = testing::random_symmetric(32, rng);
  const Eigen::MatrixXd q = testing::random_orthonormal(32, 6, rng);
  const Eigen::MatrixXd y = testing::random_orthonormal(32, 4, rng);
  const Eigen::MatrixXd p = q * q.transpose();
  const Eigen::MatrixXd direct = y.transpose() * a * y - y.transpose() * p * a * p * y;
  const Eigen::MatrixXd r = residual_quadratic_general_q(LinOp::from_dense(a), q, y);
  EXPECT_LT((r - direct).norm(), 1e-10 * direct.norm());
}

TEST(RandomizedRange, IdentityAndLowRank) {
  const RangeResult id = randomized_range(LinOp::identity(20), 5, 1);
  EXPECT_EQ(id.q.cols(), 5);
  EXPECT_FALSE(id.rank_deficient);
  EXPECT_LT((id.q.transpose() * id.q - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-13);

  std::mt19937_64 rng(17);
  const Eigen::MatrixXd u = testing::random_orthonormal(40, 3, rng);
  const Eigen::MatrixXd a = u * Eigen::Vector3d(3, 2, 1).asDiagonal() * u.transpose();
  const RangeResult r = randomized_range(LinOp::from_dense(a), 6, 2);
  EXPECT_TRUE(r.rank_deficient);
  ASSERT_EQ(r.q.cols(), 3);
  const Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(u.transpose() * r.q).singularValues();
  EXPECT_GE(cosines.minCoeff(), 1.0 - 1e-8);
}

TEST(RandomizedRange, ThermalOperatorSanityBound) {
  const LinOp h = build_hamiltonian(with_field(chain_xx(8, 1.0, false), 0.3));
  const Eigen::MatrixXd a = dense_thermal(h, 1.0).state.mat;
  const Eigen::Index k = 12;
  const RangeResult r = randomized_range(LinOp::from_dense(a), k, 5);
  const Eigen::MatrixXd p = r.q * r.q.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const Eigen::Index n = a.rows();
  const double best = eig.eigenvalues().head(n - k).norm();
  EXPECT_LE((a - p * a * p).norm(), 10.0 * best + 1e-12);
}

TEST(Jackknife, Examples) {
  const std::vector<Eigen::MatrixXd> same(4, Eigen::MatrixXd::Constant(2, 2, 3.0));
  EXPECT_EQ(jackknife_stderr(std::span<const Eigen::MatrixXd>(same)), Eigen::MatrixXd::Zero(2, 2));
  const std::vector<double> two{1.5, 4.0};
  EXPECT_NEAR(jackknife_stderr(std::span<const double>(two)), 1.25, 1e-15);
  const std::vector<double> one{1.0};
  EXPECT_THROW(jackknife_stderr(std::span<const double>(one)), std::invalid_argument);

  std::mt19937_64 rng(18);
  std::normal_distribution<double> g;
  std::vector<double> xs(100);
  for (double& x : xs) x = g(rng);
  double mean = 0, ss = 0;
  for (double x : xs) mean += x;
  mean /= 100;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double classical = std::sqrt(ss / 99.0) / 10.0;
  const double jk = jackknife_stderr(std::span<const double>(xs));
  EXPECT_GE(jk, 0.7 * classical);
  EXPECT_LE(jk, 1.3 * classical);
  EXPECT_NEAR(jk, classical, 1e-12);
}

TEST(LogScaled, NormalizationIsExactAndSumsAlign) {
  Eigen::MatrixXd m(2, 2);
  m << 3e200, 1e199, 1e199, 5e199;
  const LogScaledMatrix a(m, 10.0);
  EXPECT_GE(a.mat.norm(), 1e-3);
  EXPECT_LE(a.mat.norm(), 1e3);
  EXPECT_NEAR(a.log_abs_trace(), std::log(3.5e200) + 10.0, 1e-12);
  EXPECT_LT((a.trace_normalized() - m / m.trace()).norm(), 1e-15);

  const LogScaledMatrix tiny(Eigen::MatrixXd::Identity(2, 2), -800.0);
  const LogScaledMatrix big(Eigen::MatrixXd::Identity(2, 2), -799.0);
  const LogScaledMatrix s = tiny + big;
  EXPECT_NEAR(s.log_abs_trace(), std::log(2.0 * (1.0 + std::exp(1.0))) - 800.0, 1e-12);
  const std::vector<LogScaledMatrix> terms{tiny, big};
  EXPECT_NEAR(mean(terms).log_abs_trace(), std::log(1.0 + std::exp(1.0)) - 800.0, 1e-12);
}

TEST(GroundStateRho, AveragesDegenerateSpace) {
  DeflationBasis b;
  b.q = Eigen::MatrixXd::Identity(4, 3);
  b.lambda = Eigen::Vector3d(-1.0, -1.0, 0.5);
  const GroundStateRho g = ground_state_rho(b, BipartiteSplit::from_dims(2, 2));
  EXPECT_EQ(g.degeneracy, 2);
  EXPECT_FALSE(g.possibly_truncated);
  EXPECT_LT((g.rho - (Eigen::MatrixXd(2, 2) << 1, 0, 0, 0).finished()).norm(), 1e-15);
}

class ThermalTest : public ::testing::Test {
 protected:
  LinOp h = build_hamiltonian(with_field(chain_xx(8, 1.0, false), 0.3));
  BipartiteSplit split{8, 2};
  DenseSpectrum oracle{h, split};
};

TEST_F(ThermalTest, BetaZeroWithSphereProbesIsMaximallyMixed) {
  const double betas[] = {0.0};
  const ThermalResult r = estimate_thermal(h, split, DeflationBasis::none(256), betas,
                                           probes(3, 1, ProbeDistribution::kSphere));
  EXPECT_LT((r.estimates[0].rho() - 0.25 * Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-13);
  EXPECT_NEAR(r.estimates[0].value().trace(), 256.0, 1e-9);
}

TEST_F(ThermalTest, LargeBetaConvergesToGroundState) {
  const DeflationBasis q = lowest_eigenpairs(h, 4);
  const double gap = q.lambda(1) - q.lambda(0);
  ASSERT_GT(gap, 1e-3);
  const double betas[] = {40.0 / gap};
  const ThermalResult r = estimate_thermal(h, split, q, betas, probes(4, 2));
  const Eigen::VectorXd q1 = q.q.col(0);
  EXPECT_LT((r.estimates[0].rho() - partial_trace_rank1(q1, split)).norm(), 1e-8);
}

TEST_F(ThermalTest, MatchesOracleWithinJackknifeErrors) {
  const DeflationBasis q = lowest_eigenpairs(h, 8);
  const double betas[] = {0.1, 1.0, 10.0};
  const ThermalResult r = estimate_thermal(h, split, q, betas, probes(5, 3));
  for (const auto& est : r.estimates) {
    const Eigen::MatrixXd err = (est.rho() - oracle.reduced_density(est.beta)).cwiseAbs();
    const Eigen::MatrixXd allowed = 4.0 * est.rho_std_error().array() + 1e-12;
    EXPECT_TRUE((err.array() <= allowed.array()).all()) << "beta " << est.beta << "\n" << err << "\n" << allowed;
  }
}

TEST_F(ThermalTest, MatvecCountAndDeterminism) {
  const DeflationBasis q = lowest_eigenpairs(h, 8);
  const double betas[] = {1.0, 10.0};
  const ThermalResult a = estimate_thermal(h, split, q, betas, probes(6, 4, ProbeDistribution::kGaussian, 1));
  EXPECT_EQ(a.estimator_matvecs, static_cast<std::uint64_t>(6 * a.depth * 4));
  const ThermalResult b = estimate_thermal(h, split, q, betas, probes(6, 4, ProbeDistribution::kGaussian, 3));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.estimates[i].mean.mat, b.estimates[i].mean.mat);
}

TEST_F(ThermalTest, ShiftInvariance) {
  const LinOp hc = h.shifted(7.5);
  const DeflationBasis q = lowest_eigenpairs(h, 4);
  DeflationBasis qc = q;
  qc.lambda.array() += 7.5;
  const double betas[] = {0.5, 5.0};
  ThermalOptions opts;
  opts.fixed_depth = 20;
  opts.reorthogonalize = true;
  const ThermalResult a = estimate_thermal(h, split, q, betas, probes(3, 6), opts);
  const ThermalResult b = estimate_thermal(hc, split, qc, betas, probes(3, 6), opts);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT((a.estimates[i].rho() - b.estimates[i].rho()).norm(), 1e-12);
}

TEST_F(ThermalTest, FullDeflationIsExact) {
  const DeflationBasis q = lowest_eigenpairs(h, 256);
  const double betas[] = {0.3, 3.0};
  const ThermalResult r = estimate_thermal(h, split, q, betas, probes(2, 1));
  EXPECT_EQ(r.estimator_matvecs, 0u);
  for (const auto& est : r.estimates) EXPECT_LT((est.rho() - oracle.reduced_density(est.beta)).norm(), 1e-10);
}

TEST_F(ThermalTest, RejectsBadInput) {
  const double neg[] = {-1.0};
  EXPECT_THROW(estimate_thermal(h, split, DeflationBasis::none(256), neg, probes(2, 1)), std::invalid_argument);
  DeflationBasis bad = lowest_eigenpairs(h, 2);
  bad.q.col(0) += bad.q.col(1);
  const double one[] = {1.0};
  EXPECT_THROW(estimate_thermal(h, split, bad, one, probes(2, 1)), ContractViolation);
}

TEST_F(ThermalTest, StatisticalVarianceReductionFromDeflation) {
  const DeflationBasis q = lowest_eigenpairs(h, 8);
  const double betas[] = {5.0};
  int better = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto plain = estimate_thermal(h, split, DeflationBasis::none(256), betas, probes(8, 1000 + rep));
    const auto defl = estimate_thermal(h, split, q, betas, probes(8, 1000 + rep));
    if (defl.estimates[0].rho_std_error().norm() <= plain.estimates[0].rho_std_error().norm()) ++better;
  }
  EXPECT_GE(better, 48);
}

}  // namespace
}  // namespace partrace
