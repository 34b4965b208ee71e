#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <Eigen/Dense>

#include "lowrankcov/kernel.hpp"

namespace lrc {

/// White-noise observation model dX = S dt + sigma dW with Cov(S) = kernel.
class ModelSpec {
 public:
  ModelSpec(KernelSpec kernel, double sigma);

  const KernelSpec& kernel() const { return kernel_; }
  double sigma() const { return sigma_; }
  double sigma2() const { return sigma_ * sigma_; }

 private:
  KernelSpec kernel_;
  double sigma_;
};

/// Counter-based seeding: every (master_seed, index) pair names an
/// independent substream. Children compose, so a harness can derive
/// per-cell policies and then per-replication engines.
class RngPolicy {
 public:
  explicit RngPolicy(std::uint64_t master_seed = 0) : master_seed_(master_seed) {}

  std::uint64_t master_seed() const { return master_seed_; }

  /// Seed of substream `index`.
  std::uint64_t substream_seed(std::uint64_t index) const;
  std::mt19937_64 engine(std::uint64_t index) const { return std::mt19937_64(substream_seed(index)); }
  RngPolicy child(std::uint64_t index) const { return RngPolicy(substream_seed(index)); }

 private:
  std::uint64_t master_seed_;
};

struct SeedRecord {
  std::uint64_t master_seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t derived_seed = 0;
};

/// n x l matrix of basis coefficients; row i is x_i(l) = (int e_k dX_i)_k.
struct SampleSet {
  Eigen::MatrixXd coeffs;
  SeedRecord seed;

  int n() const { return static_cast<int>(coeffs.rows()); }
  int level() const { return static_cast<int>(coeffs.cols()); }

  /// First l coefficients of every row.
  SampleSet truncated(int l) const;
  SampleSet rows(int begin, int count) const;
};

/// Split into (first ceil(n/2) rows, remaining floor(n/2) rows).
std::pair<SampleSet, SampleSet> split_halves(const SampleSet& samples);

/// B_l = K^(l) + sigma^2 I.
SymKernelMatrix covariance_at_level(const ModelSpec& model, int l);

/// Symmetric square root via eigendecomposition. Eigenvalues below
/// 1e-12 * max are clipped to zero.
Eigen::MatrixXd psd_sqrt(const SymKernelMatrix& b);

/// n i.i.d. rows N(0, B_l) generated as B_l^(1/2) Z from substream `stream`.
SampleSet sample_coeffs(const ModelSpec& model, int n, int l, const RngPolicy& rng,
                        std::uint64_t stream = 0);

/// Path-level oracle: Euler increments dX_j = S(t_j) dt + sigma dW_j on a
/// uniform grid (left endpoints), integrated against e_k with Ito sums.
SampleSet sample_paths_and_integrate(const ModelSpec& model, int n, int l, int grid_size,
                                     const RngPolicy& rng, std::uint64_t stream = 0);

/// Coefficients 1..horizon of one independent trajectory. The horizon may
/// exceed the kernel's l_max; signal coefficients there are zero.
Eigen::VectorXd sample_trajectory_coeffs(const ModelSpec& model, int horizon,
                                         const RngPolicy& rng, std::uint64_t stream = 0);

}  // namespace lrc
