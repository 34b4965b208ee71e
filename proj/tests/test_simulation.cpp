#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "lowrankcov/errors.hpp"
#include "lowrankcov/estimators.hpp"
#include "lowrankcov/simulation.hpp"
#include "oracles.hpp"

namespace {

using lrc::KernelSpec;
using lrc::ModelSpec;
using lrc::RngPolicy;
using lrc::SampleSet;

KernelSpec on_basis(double lambda, int basis_index, int l_max) {
  Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l_max);
  row(0, basis_index - 1) = 1.0;
  return KernelSpec::from_rows(Eigen::VectorXd::Constant(1, lambda), row);
}

TEST(ModelSpec, RequiresPositiveSigma) {
  EXPECT_THROW(ModelSpec(KernelSpec::zero(2), 0.0), lrc::DomainError);
  EXPECT_THROW(ModelSpec(KernelSpec::zero(2), -1.0), lrc::DomainError);
  EXPECT_DOUBLE_EQ(ModelSpec(KernelSpec::zero(2), 0.5).sigma2(), 0.25);
}

TEST(CovarianceAtLevel, ZeroKernelIsIdentity) {
  const auto b = lrc::covariance_at_level(ModelSpec(KernelSpec::zero(5), 1.0), 3);
  EXPECT_EQ(b.entries(), Eigen::MatrixXd::Identity(3, 3));
}

TEST(CovarianceAtLevel, RankOneOnFirstBasisFunction) {
  const auto b = lrc::covariance_at_level(ModelSpec(on_basis(2.0, 1, 3), 1.0), 2);
  Eigen::Matrix2d expected;
  expected << 3, 0, 0, 1;
  EXPECT_EQ(b.entries(), Eigen::MatrixXd(expected));
}

TEST(CovarianceAtLevel, SpectrumIsShiftedKernelSpectrum) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const KernelSpec k = oracle::random_spec(rng, 3, 10, 6);
    const double sigma = 0.7;
    const auto b = lrc::covariance_at_level(ModelSpec(k, sigma), 8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.entries());
    std::vector<double> expected(8, sigma * sigma);
    for (int m = 0; m < 3; ++m) expected[static_cast<std::size_t>(5 + m)] += k.eigenvalues()(2 - m);
    std::sort(expected.begin(), expected.end());
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(es.eigenvalues()(j), expected[static_cast<std::size_t>(j)], 1e-12);
    EXPECT_GE(es.eigenvalues().minCoeff(), sigma * sigma - 1e-10);
  }
}

TEST(CovarianceAtLevel, LevelBeyondHorizonThrows) {
  EXPECT_THROW(lrc::covariance_at_level(ModelSpec(KernelSpec::zero(3), 1.0), 4), lrc::BoundsError);
}

TEST(PsdSqrt, SquaresBackToCovariance) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const KernelSpec k = oracle::random_spec(rng, 2, 9, 9);
    const auto b = lrc::covariance_at_level(ModelSpec(k, 0.3), 9);
    const Eigen::MatrixXd root = lrc::psd_sqrt(b);
    EXPECT_LE((root * root - b.entries()).norm(), 1e-9 * b.entries().norm());
    EXPECT_EQ(root, root.transpose());
  }
}

TEST(RngPolicy, SubstreamsAreDeterministicAndDistinct) {
  const RngPolicy a(42), b(42), c(43);
  EXPECT_EQ(a.substream_seed(7), b.substream_seed(7));
  EXPECT_NE(a.substream_seed(7), c.substream_seed(7));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(a.substream_seed(i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(a.child(3).master_seed(), a.substream_seed(3));
}

TEST(SampleCoeffs, SingleRowIsFiniteAndReproducible) {
  const ModelSpec model(on_basis(1.0, 2, 4), 1.0);
  const SampleSet a = lrc::sample_coeffs(model, 1, 4, RngPolicy(5), 9);
  const SampleSet b = lrc::sample_coeffs(model, 1, 4, RngPolicy(5), 9);
  ASSERT_EQ(a.n(), 1);
  ASSERT_EQ(a.level(), 4);
  EXPECT_TRUE(a.coeffs.allFinite());
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_EQ(a.seed.master_seed, 5u);
  EXPECT_EQ(a.seed.stream, 9u);
  EXPECT_EQ(a.seed.derived_seed, RngPolicy(5).substream_seed(9));
  const SampleSet c = lrc::sample_coeffs(model, 1, 4, RngPolicy(5), 10);
  EXPECT_NE(a.coeffs, c.coeffs);
}

TEST(SampleCoeffs, MomentsOfZeroKernel) {
  const int n = 100000;
  const SampleSet s = lrc::sample_coeffs(ModelSpec(KernelSpec::zero(4), 1.0), n, 4, RngPolicy(99));
  const Eigen::RowVectorXd mean = s.coeffs.colwise().mean();
  const Eigen::MatrixXd cov = (s.coeffs.transpose() * s.coeffs) / n;
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 0.015);
  EXPECT_LE((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleCoeffs, MomentsOfRankTwoKernel) {
  std::mt19937_64 rng(31);
  const KernelSpec k = oracle::random_spec(rng, 2, 5, 5);
  const ModelSpec model(k, 0.8);
  const int n = 100000;
  const SampleSet s = lrc::sample_coeffs(model, n, 5, RngPolicy(100));
  const Eigen::MatrixXd b = lrc::covariance_at_level(model, 5).entries();
  const Eigen::MatrixXd cov = (s.coeffs.transpose() * s.coeffs) / n;
  // Entry (j,k) has variance (B_jj B_kk + B_jk^2)/n; allow 4 standard errors.
  for (int j = 0; j < 5; ++j) {
    for (int m = 0; m < 5; ++m) {
      const double se = std::sqrt((b(j, j) * b(m, m) + b(j, m) * b(j, m)) / n);
      EXPECT_NEAR(cov(j, m), b(j, m), 4 * se) << j << "," << m;
    }
    EXPECT_NEAR(s.coeffs.col(j).mean(), 0.0, 4 * std::sqrt(b(j, j) / n));
  }
}

TEST(SamplePaths, NoiselessLimitRecoversSignalCoefficients) {
  // With sigma tiny the integrated coefficients equal sqrt(lambda) xi times
  // the left-Riemann sums of phi e_k, which converge at rate 1/grid.
  const KernelSpec k = lrc::make_hard_kernel(2, 1.0, 2.0);
  const ModelSpec model(k, 1e-9);
  const int grid = 4096;
  const SampleSet s = lrc::sample_paths_and_integrate(model, 200, 4, grid, RngPolicy(8));
  const Eigen::RowVectorXd phi = k.eigvec_coeffs().row(0).leftCols(4);
  for (int i = 0; i < s.n(); ++i) {
    const Eigen::RowVectorXd x = s.coeffs.row(i);
    const double amp = x.dot(phi);  // sqrt(lambda) xi up to discretisation
    EXPECT_LE((x - amp * phi).cwiseAbs().maxCoeff(), 10.0 * (1.0 + std::abs(amp)) / grid) << i;
  }
}

TEST(SamplePaths, CovarianceMatchesCoefficientSampler) {
  std::mt19937_64 rng(41);
  const KernelSpec k = oracle::random_spec(rng, 2, 4, 4);
  const ModelSpec model(k, 1.0);
  const int reps = 10000;
  const SampleSet s = lrc::sample_paths_and_integrate(model, reps, 4, 4096, RngPolicy(77));
  const Eigen::MatrixXd cov = (s.coeffs.transpose() * s.coeffs) / reps;
  const Eigen::MatrixXd b = lrc::covariance_at_level(model, 4).entries();
  EXPECT_LE((cov - b).cwiseAbs().maxCoeff(), 0.05 + 4.0 / 4096 + 4 * std::sqrt(2.0) * b.maxCoeff() / std::sqrt(reps));
}

TEST(SamplePaths, ReproducibleAndValidatesGrid) {
  const ModelSpec model(KernelSpec::zero(3), 1.0);
  const SampleSet a = lrc::sample_paths_and_integrate(model, 3, 3, 256, RngPolicy(1), 4);
  const SampleSet b = lrc::sample_paths_and_integrate(model, 3, 3, 256, RngPolicy(1), 4);
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_THROW(lrc::sample_paths_and_integrate(model, 3, 3, 255, RngPolicy(1)), lrc::DomainError);
}

TEST(SampleTrajectory, HorizonMayExceedKernelRepresentation) {
  const ModelSpec model(lrc::make_hard_kernel(2, 1.0, 1.0), 1.0);
  const Eigen::VectorXd x = lrc::sample_trajectory_coeffs(model, 50, RngPolicy(2));
  EXPECT_EQ(x.size(), 50);
  EXPECT_TRUE(x.allFinite());
  EXPECT_EQ(x, lrc::sample_trajectory_coeffs(model, 50, RngPolicy(2)));
}

TEST(SplitHalves, PartitionsRowsExactly) {
  const SampleSet s = lrc::sample_coeffs(ModelSpec(KernelSpec::zero(3), 1.0), 7, 3, RngPolicy(3));
  const auto [first, second] = lrc::split_halves(s);
  ASSERT_EQ(first.n(), 4);
  ASSERT_EQ(second.n(), 3);
  EXPECT_EQ(first.coeffs, s.coeffs.topRows(4));
  EXPECT_EQ(second.coeffs, s.coeffs.bottomRows(3));
}

TEST(SampleSet, TruncationKeepsLeadingColumns) {
  const SampleSet s = lrc::sample_coeffs(ModelSpec(KernelSpec::zero(5), 1.0), 4, 5, RngPolicy(3));
  EXPECT_EQ(s.truncated(2).coeffs, s.coeffs.leftCols(2));
  EXPECT_THROW(s.truncated(6), lrc::BoundsError);
  EXPECT_THROW(s.rows(3, 2), lrc::BoundsError);
}

}  // namespace
