#pragma once

// Reference computations used only by the tests. They are written from the
// defining formulas with plain loops and share no code with the library
// beyond the data types.

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "lowrankcov/kernel.hpp"

namespace oracle {

/// Full coefficient matrix F_{jk} = sum_m lambda_m a_mj a_mk by explicit loops.
inline Eigen::MatrixXd coefficients(const lrc::KernelSpec& spec) {
  const int n = spec.l_max();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m < spec.rank(); ++m) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        f(j, k) += spec.eigenvalues()(m) * spec.eigvec_coeffs()(m, j) * spec.eigvec_coeffs()(m, k);
      }
    }
  }
  return f;
}

/// ||K - K^(l)||^2 as the sum of squared coefficients outside the leading block.
inline double tail_bias2(const lrc::KernelSpec& spec, int l) {
  const Eigen::MatrixXd f = coefficients(spec);
  double acc = 0.0;
  for (int j = 0; j < f.rows(); ++j)
    for (int k = 0; k < f.cols(); ++k)
      if (j >= l || k >= l) acc += f(j, k) * f(j, k);
  return acc;
}

/// ||K||_{s,2} from the double sum over coefficients weighted by k^{2s}.
inline double sobolev_double_sum(const lrc::KernelSpec& spec, double s) {
  const Eigen::MatrixXd f = coefficients(spec);
  double acc = 0.0;
  for (int j = 0; j < f.rows(); ++j)
    for (int k = 0; k < f.cols(); ++k) acc += std::pow(j + 1.0, 2.0 * s) * f(j, k) * f(j, k);
  return std::sqrt(acc);
}

/// ||est - K||^2 by a direct double sum over all coefficients up to l_max.
inline double direct_risk(const Eigen::MatrixXd& est, const lrc::KernelSpec& spec) {
  const Eigen::MatrixXd f = coefficients(spec);
  double acc = 0.0;
  for (int j = 0; j < f.rows(); ++j) {
    for (int k = 0; k < f.cols(); ++k) {
      const double e = (j < est.rows() && k < est.cols()) ? est(j, k) : 0.0;
      acc += (e - f(j, k)) * (e - f(j, k));
    }
  }
  return acc;
}

inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

/// Minimiser of ||M - A||_F^2 + mu tr(A) over the PSD cone by projected
/// gradient descent from A = 0. Stops early once an iteration moves the
/// iterate by less than `tol` in Frobenius norm.
inline Eigen::MatrixXd projected_gradient(const Eigen::MatrixXd& m, double mu, double step = 1e-3,
                                          int iterations = 100000, double tol = 1e-15) {
  const Eigen::Index l = m.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(l, l);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(l, l);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd grad = 2.0 * (a - m) + mu * id;
    Eigen::MatrixXd next = project_psd(a - step * grad);
    const double moved = (next - a).norm();
    a = std::move(next);
    if (moved < tol) break;
  }
  return a;
}

inline double objective(const Eigen::MatrixXd& m, const Eigen::MatrixXd& a, double mu) {
  return (m - a).squaredNorm() + mu * a.trace();
}

/// Random symmetric matrix with N(0, scale^2) entries.
inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int l, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Eigen::MatrixXd a(l, l);
  for (int j = 0; j < l; ++j)
    for (int k = 0; k <= j; ++k) a(j, k) = a(k, j) = z(rng);
  return a;
}

/// Rank-r kernel with random orthonormal eigenfunction rows supported on the
/// first `support` coefficients and eigenvalues drawn from [0.2, 2].
inline lrc::KernelSpec random_spec(std::mt19937_64& rng, int r, int l_max, int support) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Eigen::MatrixXd g(support, r);
  for (int i = 0; i < support; ++i)
    for (int m = 0; m < r; ++m) g(i, m) = z(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
                            Eigen::MatrixXd::Identity(support, r);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(r, l_max);
  rows.leftCols(support) = q.transpose();
  Eigen::VectorXd eig(r);
  for (int m = 0; m < r; ++m) eig(m) = u(rng);
  return lrc::KernelSpec::from_rows(eig, rows);
}

}  // namespace oracle
