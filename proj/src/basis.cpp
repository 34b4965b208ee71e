#include "lowrankcov/basis.hpp"

#include <cmath>
#include <numbers>

#include "lowrankcov/errors.hpp"

namespace lrc {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Cosine:
      return "cosine";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "cosine") return BasisKind::Cosine;
  throw DomainError("unsupported basis '" + name + "'");
}

namespace cosine {

double eval(int k, double t) {
  if (k < 1) throw BoundsError("basis index must be >= 1");
  if (k == 1) return 1.0;
  return std::numbers::sqrt2 * std::cos(std::numbers::pi * static_cast<double>(k - 1) * t);
}

Eigen::VectorXd eval_all(int l, double t) {
  Eigen::VectorXd out(l);
  for (int k = 1; k <= l; ++k) out(k - 1) = eval(k, t);
  return out;
}

Eigen::MatrixXd left_grid_table(int l, int grid_size) {
  Eigen::MatrixXd table(grid_size, l);
  const double dt = 1.0 / grid_size;
  for (int j = 0; j < grid_size; ++j) {
    const double t = j * dt;
    for (int k = 1; k <= l; ++k) table(j, k - 1) = eval(k, t);
  }
  return table;
}

double midpoint_inner(int j, int k, int points) {
  const double h = 1.0 / points;
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double t = (i + 0.5) * h;
    acc += eval(j, t) * eval(k, t);
  }
  return acc * h;
}

}  // namespace cosine
}  // namespace lrc
