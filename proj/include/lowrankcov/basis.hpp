#pragma once

#include <string>

#include <Eigen/Dense>

namespace lrc {

enum class BasisKind { Cosine };

/// Fixed orthonormal basis of L2[0,1]. Only the cosine system is provided:
/// e_1(t) = 1, e_{k+1}(t) = sqrt(2) cos(pi k t).
struct BasisId {
  BasisKind kind = BasisKind::Cosine;
  std::string description = "cosine";

  friend bool operator==(const BasisId& a, const BasisId& b) { return a.kind == b.kind; }
};

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

namespace cosine {

/// e_k(t) for 1-based k.
double eval(int k, double t);

/// (e_1(t), ..., e_l(t)).
Eigen::VectorXd eval_all(int l, double t);

/// Values e_k(t_j) on the left-endpoint grid t_j = j/grid_size,
/// returned as a grid_size x l matrix.
Eigen::MatrixXd left_grid_table(int l, int grid_size);

/// <e_j, e_k> by the composite midpoint rule.
double midpoint_inner(int j, int k, int points = 2048);

}  // namespace cosine
}  // namespace lrc
