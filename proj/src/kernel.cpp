#include "lowrankcov/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lowrankcov/errors.hpp"

namespace lrc {

SymKernelMatrix::SymKernelMatrix(int level) {
  if (level < 0) throw BoundsError("negative level");
  entries_ = Eigen::MatrixXd::Zero(level, level);
}

SymKernelMatrix::SymKernelMatrix(const Eigen::MatrixXd& entries) {
  if (entries.rows() != entries.cols()) throw DomainError("kernel matrix must be square");
  entries_ = 0.5 * (entries + entries.transpose());
}

SymKernelMatrix SymKernelMatrix::identity(int level) {
  SymKernelMatrix out(level);
  out.entries_.diagonal().setOnes();
  return out;
}

SymKernelMatrix SymKernelMatrix::leading(int l) const {
  if (l < 0 || l > level()) throw BoundsError("leading block level out of range");
  SymKernelMatrix out;
  out.entries_ = entries_.topLeftCorner(l, l);
  return out;
}

SymKernelMatrix SymKernelMatrix::padded(int l) const {
  if (l < level()) throw BoundsError("cannot pad to a smaller level");
  SymKernelMatrix out(l);
  out.entries_.topLeftCorner(level(), level()) = entries_;
  return out;
}

SymKernelMatrix& SymKernelMatrix::operator+=(const SymKernelMatrix& other) {
  if (other.level() != level()) throw BoundsError("level mismatch in kernel matrix sum");
  entries_ += other.entries_;
  return *this;
}

SymKernelMatrix& SymKernelMatrix::operator-=(const SymKernelMatrix& other) {
  if (other.level() != level()) throw BoundsError("level mismatch in kernel matrix difference");
  entries_ -= other.entries_;
  return *this;
}

SymKernelMatrix& SymKernelMatrix::operator*=(double alpha) {
  entries_ *= alpha;
  return *this;
}

double inner(const SymKernelMatrix& a, const SymKernelMatrix& b) {
  const int l = std::min(a.level(), b.level());
  return a.entries().topLeftCorner(l, l).cwiseProduct(b.entries().topLeftCorner(l, l)).sum();
}

namespace {

constexpr double kKeepTolerance = 1e-12;
constexpr double kDependentResidual = 1e-8;

bool rows_orthonormal(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return true;
  const Eigen::MatrixXd gram = rows * rows.transpose();
  return (gram - Eigen::MatrixXd::Identity(rows.rows(), rows.rows())).cwiseAbs().maxCoeff() <=
         kKeepTolerance;
}

Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd q = rows;
  for (Eigen::Index m = 0; m < q.rows(); ++m) {
    const double original = rows.row(m).norm();
    // Two passes of modified Gram-Schmidt keep the result orthonormal to
    // round-off even for nearly dependent input.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index p = 0; p < m; ++p) q.row(m) -= q.row(p).dot(q.row(m)) * q.row(p);
    }
    const double residual = q.row(m).norm();
    if (!(residual >= kDependentResidual * std::max(1.0, original))) {
      throw DomainError("eigenfunction row " + std::to_string(m) +
                        " is (nearly) linearly dependent on the previous rows");
    }
    q.row(m) /= residual;
  }
  return q;
}

}  // namespace

KernelSpec KernelSpec::from_rows(const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd& rows,
                                 BasisId basis) {
  if (eigenvalues.size() != rows.rows()) {
    throw DomainError("eigenvalue count does not match the number of coefficient rows");
  }
  if (rows.cols() < 1) throw DomainError("l_max must be positive");
  for (Eigen::Index m = 0; m < eigenvalues.size(); ++m) {
    if (!std::isfinite(eigenvalues(m)) || eigenvalues(m) <= 0.0) {
      throw DomainError("eigenvalues must be positive and finite");
    }
  }
  if (!rows.allFinite()) throw DomainError("eigenfunction coefficients must be finite");

  const Eigen::MatrixXd ortho = rows_orthonormal(rows) ? rows : gram_schmidt(rows);

  std::vector<Eigen::Index> order(eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return eigenvalues(a) > eigenvalues(b); });

  KernelSpec spec;
  spec.l_max_ = static_cast<int>(rows.cols());
  spec.basis_ = std::move(basis);
  spec.eigenvalues_.resize(eigenvalues.size());
  spec.eigvec_coeffs_.resize(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    spec.eigenvalues_(static_cast<Eigen::Index>(i)) = eigenvalues(order[i]);
    spec.eigvec_coeffs_.row(static_cast<Eigen::Index>(i)) = ortho.row(order[i]);
  }
  return spec;
}

KernelSpec KernelSpec::zero(int l_max) {
  if (l_max < 1) throw DomainError("l_max must be positive");
  KernelSpec spec;
  spec.l_max_ = l_max;
  spec.eigenvalues_.resize(0);
  spec.eigvec_coeffs_.resize(0, l_max);
  return spec;
}

double KernelSpec::lambda_max() const {
  return eigenvalues_.size() == 0 ? 0.0 : eigenvalues_.maxCoeff();
}

double KernelSpec::squared_norm() const {
  const Eigen::MatrixXd gram = eigvec_coeffs_ * eigvec_coeffs_.transpose();
  const Eigen::MatrixXd weights = eigenvalues_ * eigenvalues_.transpose();
  return weights.cwiseProduct(gram.cwiseProduct(gram)).sum();
}

double KernelSpec::eigenfunction(int m, double t) const {
  double acc = 0.0;
  for (int k = 1; k <= l_max_; ++k) acc += eigvec_coeffs_(m, k - 1) * cosine::eval(k, t);
  return acc;
}

SymKernelMatrix project_kernel(const KernelSpec& spec, int l) {
  if (l < 1 || l > spec.l_max()) {
    throw BoundsError("projection level " + std::to_string(l) + " outside [1, " +
                      std::to_string(spec.l_max()) + "]");
  }
  const auto v = spec.eigvec_coeffs().leftCols(l);
  const Eigen::MatrixXd k = v.transpose() * spec.eigenvalues().asDiagonal() * v;
  return SymKernelMatrix(k);
}

double projection_bias2(const KernelSpec& spec, int l) {
  if (l < 1 || l > spec.l_max()) throw BoundsError("bias level out of range");
  const int tail = spec.l_max() - l;
  if (tail == 0 || spec.rank() == 0) return 0.0;
  const auto head = spec.eigvec_coeffs().leftCols(l);
  const auto rest = spec.eigvec_coeffs().rightCols(tail);
  const Eigen::MatrixXd g_head = head * head.transpose();
  const Eigen::MatrixXd g_tail = rest * rest.transpose();
  const Eigen::MatrixXd weights = spec.eigenvalues() * spec.eigenvalues().transpose();
  // (G_h + G_t)^2 - G_h^2 = 2 G_h G_t + G_t^2, entrywise.
  const Eigen::MatrixXd diff = 2.0 * g_head.cwiseProduct(g_tail) + g_tail.cwiseProduct(g_tail);
  return std::max(0.0, weights.cwiseProduct(diff).sum());
}

Eigen::MatrixXd full_coefficients(const KernelSpec& spec) {
  return project_kernel(spec, spec.l_max()).entries();
}

KernelSpec make_hard_kernel(int l, double s, double lambda_max) {
  if (l < 1) throw DomainError("hard kernel level must be >= 1");
  if (!(s > 0.0)) throw DomainError("smoothness s must be positive");
  if (!(lambda_max > 0.0)) throw DomainError("lambda_max must be positive");
  Eigen::MatrixXd row(1, 2 * l);
  for (int k = 1; k <= 2 * l; ++k) {
    const double exponent = k <= l ? s + 1.0 : s + 0.5;
    row(0, k - 1) = std::pow(static_cast<double>(k), -exponent);
  }
  row /= row.norm();
  Eigen::VectorXd eig(1);
  eig(0) = lambda_max;
  return KernelSpec::from_rows(eig, row);
}

double sobolev_norm(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double s) {
  if (!(s > 0.0)) throw DomainError("smoothness s must be positive");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    acc += std::pow(static_cast<double>(k + 1), 2.0 * s) * coeffs(k) * coeffs(k);
  }
  return std::sqrt(acc);
}

double sobolev_norm(const KernelSpec& spec, double s) {
  if (!(s > 0.0)) throw DomainError("smoothness s must be positive");
  double acc = 0.0;
  for (int m = 0; m < spec.rank(); ++m) {
    const double phi = sobolev_norm(spec.eigvec_coeffs().row(m).transpose(), s);
    acc += spec.eigenvalues()(m) * spec.eigenvalues()(m) * phi * phi;
  }
  return std::sqrt(acc);
}

double eval_kernel(const KernelSpec& spec, double t, double u) {
  if (!(t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0)) {
    throw DomainError("kernel arguments must lie in [0, 1]");
  }
  if (spec.rank() == 0) return 0.0;
  const Eigen::VectorXd et = cosine::eval_all(spec.l_max(), t);
  const Eigen::VectorXd eu = cosine::eval_all(spec.l_max(), u);
  const Eigen::VectorXd pt = spec.eigvec_coeffs() * et;
  const Eigen::VectorXd pu = spec.eigvec_coeffs() * eu;
  // Summing products in a fixed order makes eval(t,u) == eval(u,t) exactly.
  double acc = 0.0;
  for (int m = 0; m < spec.rank(); ++m) acc += spec.eigenvalues()(m) * (pt(m) * pu(m));
  return acc;
}

}  // namespace lrc
