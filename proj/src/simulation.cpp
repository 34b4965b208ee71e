#include "lowrankcov/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lowrankcov/errors.hpp"

namespace lrc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_level(const ModelSpec& model, int l) {
  if (l < 1 || l > model.kernel().l_max()) {
    throw BoundsError("level " + std::to_string(l) + " outside kernel horizon [1, " +
                      std::to_string(model.kernel().l_max()) + "]");
  }
}

Eigen::MatrixXd standard_normal(int rows, int cols, std::mt19937_64& engine) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(rows, cols);
  // Row-major fill so that the i-th row only depends on the first i draws.
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) z(i, k) = normal(engine);
  return z;
}

}  // namespace

ModelSpec::ModelSpec(KernelSpec kernel, double sigma) : kernel_(std::move(kernel)), sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("noise level sigma must be > 0");
}

std::uint64_t RngPolicy::substream_seed(std::uint64_t index) const {
  return splitmix64(splitmix64(master_seed_) ^ splitmix64(index ^ 0xD1B54A32D192ED03ULL));
}

SampleSet SampleSet::truncated(int l) const {
  if (l < 1 || l > level()) throw BoundsError("truncation level out of range");
  return SampleSet{coeffs.leftCols(l), seed};
}

SampleSet SampleSet::rows(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > n()) throw BoundsError("row range out of range");
  return SampleSet{coeffs.middleRows(begin, count), seed};
}

std::pair<SampleSet, SampleSet> split_halves(const SampleSet& samples) {
  const int first = (samples.n() + 1) / 2;
  return {samples.rows(0, first), samples.rows(first, samples.n() - first)};
}

SymKernelMatrix covariance_at_level(const ModelSpec& model, int l) {
  check_level(model, l);
  return project_kernel(model.kernel(), l) + model.sigma2() * SymKernelMatrix::identity(l);
}

Eigen::MatrixXd psd_sqrt(const SymKernelMatrix& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b.entries());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed while forming B^(1/2) at level " +
                         std::to_string(b.level()));
  }
  Eigen::VectorXd w = solver.eigenvalues();
  const double top = std::max(0.0, w.maxCoeff());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = w(i) <= 1e-12 * top ? 0.0 : std::sqrt(w(i));
  const Eigen::MatrixXd& u = solver.eigenvectors();
  const Eigen::MatrixXd root = u * w.asDiagonal() * u.transpose();
  return 0.5 * (root + root.transpose());
}

SampleSet sample_coeffs(const ModelSpec& model, int n, int l, const RngPolicy& rng,
                        std::uint64_t stream) {
  if (n < 1) throw DomainError("sample size must be >= 1");
  check_level(model, l);
  const Eigen::MatrixXd root = psd_sqrt(covariance_at_level(model, l));
  auto engine = rng.engine(stream);
  const Eigen::MatrixXd z = standard_normal(n, l, engine);
  return SampleSet{z * root, {rng.master_seed(), stream, rng.substream_seed(stream)}};
}

SampleSet sample_paths_and_integrate(const ModelSpec& model, int n, int l, int grid_size,
                                     const RngPolicy& rng, std::uint64_t stream) {
  if (n < 1) throw DomainError("sample size must be >= 1");
  if (grid_size < 256) throw DomainError("grid_size must be >= 256");
  check_level(model, l);

  const KernelSpec& kernel = model.kernel();
  const int r = kernel.rank();
  const double dt = 1.0 / grid_size;
  const double noise_step = model.sigma() * std::sqrt(dt);

  const Eigen::MatrixXd e_table = cosine::left_grid_table(l, grid_size);
  // phi_m(t_j) * sqrt(lambda_m), grid_size x r.
  Eigen::MatrixXd phi_table =
      cosine::left_grid_table(kernel.l_max(), grid_size) * kernel.eigvec_coeffs().transpose();
  for (int m = 0; m < r; ++m) phi_table.col(m) *= std::sqrt(kernel.eigenvalues()(m));

  auto engine = rng.engine(stream);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(n, l);
  Eigen::VectorXd xi(r);
  Eigen::VectorXd increments(grid_size);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < r; ++m) xi(m) = normal(engine);
    for (int j = 0; j < grid_size; ++j) increments(j) = noise_step * normal(engine);
    if (r > 0) increments.noalias() += dt * (phi_table * xi);
    out.row(i).noalias() = increments.transpose() * e_table;
  }
  return SampleSet{std::move(out), {rng.master_seed(), stream, rng.substream_seed(stream)}};
}

Eigen::VectorXd sample_trajectory_coeffs(const ModelSpec& model, int horizon, const RngPolicy& rng,
                                         std::uint64_t stream) {
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  const KernelSpec& kernel = model.kernel();
  auto engine = rng.engine(stream);
  std::normal_distribution<double> normal;
  Eigen::VectorXd out(horizon);
  for (int k = 0; k < horizon; ++k) out(k) = model.sigma() * normal(engine);
  const int shared = std::min(horizon, kernel.l_max());
  for (int m = 0; m < kernel.rank(); ++m) {
    const double amplitude = std::sqrt(kernel.eigenvalues()(m)) * normal(engine);
    out.head(shared) += amplitude * kernel.eigvec_coeffs().row(m).head(shared).transpose();
  }
  return out;
}

}  // namespace lrc
