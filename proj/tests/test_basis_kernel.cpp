#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lowrankcov/basis.hpp"
#include "lowrankcov/errors.hpp"
#include "lowrankcov/kernel.hpp"
#include "oracles.hpp"

namespace {

using lrc::KernelSpec;
using lrc::SymKernelMatrix;

KernelSpec single(double lambda, int basis_index, int l_max) {
  Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, l_max);
  row(0, basis_index - 1) = 1.0;
  return KernelSpec::from_rows(Eigen::VectorXd::Constant(1, lambda), row);
}

TEST(CosineBasis, FirstFunctionsHaveClosedForm) {
  EXPECT_DOUBLE_EQ(lrc::cosine::eval(1, 0.3), 1.0);
  EXPECT_NEAR(lrc::cosine::eval(2, 0.25), std::sqrt(2.0) * std::cos(M_PI * 0.25), 1e-15);
  EXPECT_NEAR(lrc::cosine::eval(4, 0.1), std::sqrt(2.0) * std::cos(3 * M_PI * 0.1), 1e-15);
}

TEST(CosineBasis, OrthonormalUnderMidpointQuadrature) {
  for (int j = 1; j <= 12; ++j) {
    for (int k = 1; k <= 12; ++k) {
      EXPECT_NEAR(lrc::cosine::midpoint_inner(j, k), j == k ? 1.0 : 0.0, 1e-8) << j << "," << k;
    }
  }
}

TEST(CosineBasis, LeftGridTableMatchesPointwiseEvaluation) {
  const Eigen::MatrixXd t = lrc::cosine::left_grid_table(5, 64);
  ASSERT_EQ(t.rows(), 64);
  ASSERT_EQ(t.cols(), 5);
  for (int j = 0; j < 64; j += 7)
    for (int k = 1; k <= 5; ++k) EXPECT_NEAR(t(j, k - 1), lrc::cosine::eval(k, j / 64.0), 1e-14);
}

TEST(SymKernelMatrix, StoredExactlySymmetric) {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 5);
  const SymKernelMatrix m(a);
  EXPECT_EQ(m.entries(), m.entries().transpose());
  EXPECT_DOUBLE_EQ(m.squared_norm(), m.entries().squaredNorm());
}

TEST(SymKernelMatrix, InnerProductUsesCommonBlock) {
  const SymKernelMatrix a = SymKernelMatrix::identity(2);
  const SymKernelMatrix b = SymKernelMatrix::identity(4);
  EXPECT_DOUBLE_EQ(lrc::inner(a, b), 2.0);
  EXPECT_EQ(a.padded(4).level(), 4);
  EXPECT_EQ(b.leading(3).entries(), Eigen::MatrixXd::Identity(3, 3));
}

TEST(KernelSpec, RejectsNearDependentRows) {
  Eigen::MatrixXd rows(2, 3);
  rows << 1, 0, 0, 1, 1e-10, 0;
  EXPECT_THROW(KernelSpec::from_rows(Eigen::Vector2d(1, 1), rows), lrc::DomainError);
}

TEST(KernelSpec, OrthonormalisesRawRowsAndSortsEigenvalues) {
  Eigen::MatrixXd rows(2, 3);
  rows << 1, 1, 0, 0, 1, 1;
  const KernelSpec k = KernelSpec::from_rows(Eigen::Vector2d(0.5, 2.0), rows);
  const Eigen::MatrixXd gram = k.eigvec_coeffs() * k.eigvec_coeffs().transpose();
  EXPECT_TRUE(gram.isApprox(Eigen::Matrix2d::Identity(), 1e-12));
  EXPECT_GE(k.eigenvalues()(0), k.eigenvalues()(1));
  EXPECT_DOUBLE_EQ(k.lambda_max(), 2.0);
}

TEST(KernelSpec, RejectsNonPositiveEigenvalues) {
  Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, 2);
  row(0, 0) = 1;
  EXPECT_THROW(KernelSpec::from_rows(Eigen::VectorXd::Constant(1, 0.0), row), lrc::DomainError);
  EXPECT_THROW(KernelSpec::from_rows(Eigen::VectorXd::Constant(1, -1.0), row), lrc::DomainError);
}

TEST(KernelSpec, LambdaMaxIsTopEigenvalueOfFullMatrix) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const KernelSpec k = oracle::random_spec(rng, 3, 9, 6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lrc::project_kernel(k, 9).entries());
    EXPECT_NEAR(es.eigenvalues().maxCoeff(), k.lambda_max(), 1e-12);
  }
}

TEST(ProjectKernel, RankOneOnFirstBasisFunction) {
  const SymKernelMatrix p = lrc::project_kernel(single(2.0, 1, 3), 3);
  Eigen::Matrix3d expected = Eigen::Matrix3d::Zero();
  expected(0, 0) = 2.0;
  EXPECT_EQ(p.entries(), Eigen::MatrixXd(expected));
}

TEST(ProjectKernel, OutOfRangeLevelThrows) {
  const KernelSpec k = single(1.0, 1, 4);
  EXPECT_THROW(lrc::project_kernel(k, 0), lrc::BoundsError);
  EXPECT_THROW(lrc::project_kernel(k, 5), lrc::BoundsError);
}

TEST(ProjectKernel, FullLevelPreservesNorm) {
  std::mt19937_64 rng(3);
  const KernelSpec k = oracle::random_spec(rng, 2, 8, 8);
  EXPECT_NEAR(lrc::project_kernel(k, 8).squared_norm(), k.squared_norm(), 1e-12);
  EXPECT_EQ(lrc::projection_bias2(k, 8), 0.0);
}

TEST(ProjectKernel, PythagorasAndPsdOverRandomSpecs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int r = 1 + trial % 4;
    const KernelSpec k = oracle::random_spec(rng, r, 12, 10);
    for (int l = 1; l <= 12; ++l) {
      const SymKernelMatrix p = lrc::project_kernel(k, l);
      const double tail = oracle::tail_bias2(k, l);
      EXPECT_NEAR(k.squared_norm(), p.squared_norm() + tail, 1e-10);
      EXPECT_NEAR(lrc::projection_bias2(k, l), tail, 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.entries());
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * k.lambda_max());
      const auto rank = (es.eigenvalues().array() > 1e-10 * k.lambda_max()).count();
      EXPECT_LE(rank, std::min(r, l));
    }
  }
}

TEST(HardKernel, NormalisedWithExpectedCoefficientShape) {
  const KernelSpec k = lrc::make_hard_kernel(1, 1.0, 1.0);
  ASSERT_EQ(k.l_max(), 2);
  const Eigen::RowVectorXd row = k.eigvec_coeffs().row(0);
  EXPECT_NEAR(row.norm(), 1.0, 1e-12);
  EXPECT_NEAR(row(1) / row(0), std::pow(2.0, -1.5), 1e-14);
}

TEST(HardKernel, BiasMatchesTailSumTwoWays) {
  const KernelSpec k = lrc::make_hard_kernel(4, 1.0, 1.0);
  const double direct = oracle::tail_bias2(k, 4);
  const double difference = k.squared_norm() - lrc::project_kernel(k, 4).squared_norm();
  EXPECT_NEAR(direct, difference, 1e-12);
  EXPECT_NEAR(lrc::projection_bias2(k, 4), direct, 1e-14);
}

TEST(HardKernel, BiasOfOrderLevelToMinusTwoS) {
  // The rank-one bias is lambda^2 (1 - (sum_{k<=l} c_k^2)^2). With
  // c_k^2 proportional to k^-(2s+2) on [1,l] and k^-(2s+1) on (l,2l], the tail
  // mass is of order l^-2s, so bias * l^2s stays bounded away from zero.
  for (double s : {0.5, 1.0, 2.0}) {
    for (int l : {4, 16, 64}) {
      double head = 0.0, tail = 0.0;
      for (int k = 1; k <= l; ++k) head += std::pow(k, -2 * s - 2);
      for (int k = l + 1; k <= 2 * l; ++k) tail += std::pow(k, -2 * s - 1);
      const double w = tail / (head + tail);
      const double expected = 1.0 - (1.0 - w) * (1.0 - w);
      const KernelSpec k = lrc::make_hard_kernel(l, s, 3.0);
      const double bias = lrc::projection_bias2(k, l);
      EXPECT_NEAR(bias, 9.0 * expected, 1e-12 * 9.0);
      // Conservative floor for the normalised bias.
      EXPECT_GE(bias / (9.0 * std::pow(l, -2 * s)), 0.05 / (2 * s + 1)) << "s=" << s << " l=" << l;
    }
  }
}

TEST(HardKernel, SobolevNormBoundedAcrossLevels) {
  // Weighted squared coefficients are k^-2 on [1,l] and k^-1 on (l,2l], so
  // the unnormalised sum stays below zeta(2) + log 2 + 1.
  const double bound = std::sqrt(M_PI * M_PI / 6.0 + std::log(2.0) + 1.0);
  for (double s : {0.5, 1.0, 2.0}) {
    for (int l = 2; l <= 256; ++l) {
      const KernelSpec k = lrc::make_hard_kernel(l, s, 1.0);
      const double v = lrc::sobolev_norm(k, s);
      const double c1 = k.eigvec_coeffs()(0, 0);  // normalising constant C_1
      EXPECT_LE(v, c1 * bound) << "s=" << s << " l=" << l;
      EXPECT_LE(c1, 1.0);
    }
  }
}

TEST(HardKernel, DomainChecks) {
  EXPECT_THROW(lrc::make_hard_kernel(0, 1.0, 1.0), lrc::DomainError);
  EXPECT_THROW(lrc::make_hard_kernel(2, 0.0, 1.0), lrc::DomainError);
  EXPECT_THROW(lrc::make_hard_kernel(2, 1.0, -1.0), lrc::DomainError);
}

TEST(SobolevNorm, SingleTermExamples) {
  EXPECT_DOUBLE_EQ(lrc::sobolev_norm(single(3.0, 1, 4), 0.7), 3.0);
  EXPECT_DOUBLE_EQ(lrc::sobolev_norm(single(1.0, 2, 4), 1.0), 2.0);
}

TEST(SobolevNorm, EigenFormMatchesDoubleSum) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const KernelSpec k = oracle::random_spec(rng, 3, 10, 10);
    for (double s : {0.5, 1.0, 1.5}) {
      const double a = lrc::sobolev_norm(k, s);
      EXPECT_NEAR(a, oracle::sobolev_double_sum(k, s), 1e-10 * std::max(1.0, a));
    }
  }
}

TEST(SobolevNorm, MonotoneInSmoothness) {
  std::mt19937_64 rng(9);
  const KernelSpec k = oracle::random_spec(rng, 2, 8, 8);
  double last = 0.0;
  for (double s = 0.25; s <= 3.0; s += 0.25) {
    const double v = lrc::sobolev_norm(k, s);
    EXPECT_GE(v, last);
    last = v;
  }
  EXPECT_THROW(lrc::sobolev_norm(k, 0.0), lrc::DomainError);
}

TEST(SobolevNorm, ZeroOnlyForZeroKernel) {
  EXPECT_EQ(lrc::sobolev_norm(KernelSpec::zero(5), 1.0), 0.0);
  EXPECT_GT(lrc::sobolev_norm(single(1e-3, 5, 5), 1.0), 0.0);
}

TEST(EvalKernel, ZeroKernelVanishes) {
  const KernelSpec k = KernelSpec::zero(4);
  EXPECT_EQ(lrc::eval_kernel(k, 0.2, 0.9), 0.0);
}

TEST(EvalKernel, ConstantEigenfunction) {
  const KernelSpec k = single(2.0, 1, 3);
  for (double t : {0.0, 0.3, 1.0})
    for (double u : {0.0, 0.5, 0.99}) EXPECT_DOUBLE_EQ(lrc::eval_kernel(k, t, u), 2.0);
}

TEST(EvalKernel, ExactlySymmetricOnGrid) {
  std::mt19937_64 rng(13);
  const KernelSpec k = oracle::random_spec(rng, 3, 7, 7);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double t = i / 19.0, u = j / 19.0;
      EXPECT_EQ(lrc::eval_kernel(k, t, u), lrc::eval_kernel(k, u, t));
    }
  }
}

TEST(EvalKernel, MatchesCoefficientExpansion) {
  std::mt19937_64 rng(17);
  const KernelSpec k = oracle::random_spec(rng, 2, 6, 6);
  const Eigen::MatrixXd f = oracle::coefficients(k);
  for (double t : {0.1, 0.45, 0.8}) {
    for (double u : {0.05, 0.6}) {
      double acc = 0.0;
      for (int a = 1; a <= 6; ++a)
        for (int b = 1; b <= 6; ++b) acc += f(a - 1, b - 1) * lrc::cosine::eval(a, t) * lrc::cosine::eval(b, u);
      EXPECT_NEAR(lrc::eval_kernel(k, t, u), acc, 1e-12);
    }
  }
}

TEST(EvalKernel, OutsideUnitIntervalThrows) {
  const KernelSpec k = single(1.0, 1, 2);
  EXPECT_THROW(lrc::eval_kernel(k, -0.1, 0.5), lrc::DomainError);
  EXPECT_THROW(lrc::eval_kernel(k, 0.5, 1.5), lrc::DomainError);
}

}  // namespace
