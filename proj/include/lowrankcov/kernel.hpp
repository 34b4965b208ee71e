#pragma once

#include <Eigen/Dense>

#include "lowrankcov/basis.hpp"

namespace lrc {

/// Element of S_l: the symmetric l x l coefficient matrix of a kernel with
/// respect to {e_j (x) e_k}. Entries are stored exactly symmetric.
class SymKernelMatrix {
 public:
  SymKernelMatrix() = default;
  /// Zero matrix at level l.
  explicit SymKernelMatrix(int level);
  /// Symmetrises `entries` as (A + A^T) / 2, which is exact for symmetric input.
  explicit SymKernelMatrix(const Eigen::MatrixXd& entries);

  static SymKernelMatrix identity(int level);

  int level() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(int j, int k) const { return entries_(j, k); }

  /// Squared Frobenius norm, equal to the squared L2([0,1]^2) norm of the kernel.
  double squared_norm() const { return entries_.squaredNorm(); }
  double trace() const { return entries_.trace(); }

  /// Leading l x l block (projection onto S_l for l <= level()).
  SymKernelMatrix leading(int l) const;
  /// Embedding into S_l for l >= level() by zero padding.
  SymKernelMatrix padded(int l) const;

  SymKernelMatrix& operator+=(const SymKernelMatrix& other);
  SymKernelMatrix& operator-=(const SymKernelMatrix& other);
  SymKernelMatrix& operator*=(double alpha);

  friend SymKernelMatrix operator+(SymKernelMatrix a, const SymKernelMatrix& b) { return a += b; }
  friend SymKernelMatrix operator-(SymKernelMatrix a, const SymKernelMatrix& b) { return a -= b; }
  friend SymKernelMatrix operator*(double alpha, SymKernelMatrix a) { return a *= alpha; }

 private:
  Eigen::MatrixXd entries_;
};

/// <A, B> in L2([0,1]^2). Matrices of different levels are compared after
/// zero padding, so the result only involves the common leading block.
double inner(const SymKernelMatrix& a, const SymKernelMatrix& b);

/// Finite-rank covariance kernel K = sum_m lambda_m phi_m (x) phi_m with the
/// eigenfunctions given by their first l_max basis coefficients.
///
/// Rows of `eigvec_coeffs()` are orthonormal and eigenvalues are sorted
/// nonincreasing. A rank-zero spec represents the zero kernel.
class KernelSpec {
 public:
  KernelSpec() = default;

  /// Builds a spec from raw rows. Rows already orthonormal to 1e-12 are kept
  /// bit-exactly; otherwise they are Gram-Schmidt orthonormalised and a row
  /// whose residual falls below 1e-8 is rejected with DomainError.
  /// Eigenvalues must be positive and finite.
  static KernelSpec from_rows(const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd& rows,
                              BasisId basis = {});

  static KernelSpec zero(int l_max);

  int rank() const { return static_cast<int>(eigenvalues_.size()); }
  int l_max() const { return l_max_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigvec_coeffs() const { return eigvec_coeffs_; }
  const BasisId& basis() const { return basis_; }

  /// max_k lambda_k, 0 for the zero kernel.
  double lambda_max() const;

  /// ||K||_2^2 over the whole representation.
  double squared_norm() const;

  /// phi_m(t) for 0-based m.
  double eigenfunction(int m, double t) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigvec_coeffs_;
  int l_max_ = 0;
  BasisId basis_;
};

/// K^(l): orthogonal projection of K onto S_l. Throws BoundsError unless
/// 1 <= l <= l_max.
SymKernelMatrix project_kernel(const KernelSpec& spec, int l);

/// ||K - K^(l)||_2^2, computed from the coefficients beyond l without
/// cancellation against ||K||_2^2.
double projection_bias2(const KernelSpec& spec, int l);

/// Full l_max x l_max coefficient matrix of K.
Eigen::MatrixXd full_coefficients(const KernelSpec& spec);

/// Rank-one kernel lambda_max phi (x) phi whose coefficients decay like
/// k^-(s+1) up to l and like k^-(s+1/2) on (l, 2l]; l_max = 2l.
/// This kernel is smooth in the Sobolev sense yet keeps ||K - K^(l)||_2^2 of
/// order l^-2s.
KernelSpec make_hard_kernel(int l, double s, double lambda_max);

/// (sum_k k^2s c_k^2)^(1/2) for a coefficient vector c.
double sobolev_norm(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double s);

/// ||K||_{s,2} = (sum_m lambda_m^2 ||phi_m||_{s,2}^2)^(1/2).
double sobolev_norm(const KernelSpec& spec, double s);

/// K(t, u) for t, u in [0, 1]; DomainError otherwise.
double eval_kernel(const KernelSpec& spec, double t, double u);

}  // namespace lrc
