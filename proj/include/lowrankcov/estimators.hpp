#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lowrankcov/kernel.hpp"
#include "lowrankcov/simulation.hpp"

namespace lrc {

/// mu = c * (lambda_max + sigma^2) * delta_n(l, t). An empty `t` means log n.
struct TuningRule {
  double c = 2.0;
  std::optional<double> t;
};

/// Source of the lambda_max + sigma^2 factor in the tuning rule.
struct KnownScale {
  double value;
};
struct PluginTopEigenvalue {};
using ScaleSource = std::variant<KnownScale, PluginTopEigenvalue>;

/// sigma^2 is either given, or estimated from an independent trajectory.
struct EstimateNoise {};
using NoiseSource = std::variant<double, EstimateNoise>;

struct EstimatorConfig {
  int level = 1;
  std::variant<double, TuningRule> penalty = TuningRule{};
  NoiseSource sigma2 = 0.0;
  ScaleSource scale = PluginTopEigenvalue{};

  /// Copy with sigma2 fixed to `value`.
  EstimatorConfig with_sigma2(double value) const;
  /// The known sigma^2; throws ConfigError while it is still "estimate".
  double resolved_sigma2() const;
};

enum class SplitPolicy { FitFirstHalf, FitSecondHalf };

struct SelectorConfig {
  int max_level = 1;  ///< L: candidates are l = 1..L
  SplitPolicy split = SplitPolicy::FitFirstHalf;
};

/// Window of basis indices offset+1 .. offset+M used by estimate_sigma2.
struct NoiseEstConfig {
  int offset = 0;
  int window = 1000;
};

/// delta_n(l, t) = max{sqrt((l+t)/n), (l+t)/n}.
double deviation_scale(int n, int l, double t);

/// R_n^(l) = (1/n) sum_i x_i x_i^T at the sample level.
SymKernelMatrix empirical_covariance(const SampleSet& samples);

/// R_n^(l) - sigma^2 I. May be indefinite.
SymKernelMatrix corrected_empirical(const SampleSet& samples, double sigma2);

/// Minimiser of ||M - A||^2 + mu tr(A) over PSD A: eigenvalues of M
/// soft-thresholded at mu/2 and clipped at zero.
SymKernelMatrix soft_threshold_psd(const SymKernelMatrix& m, double mu);

/// c * lambda_plus_sigma2 * delta_n(l, t), t defaulting to log n.
double resolve_mu(int n, int l, const TuningRule& rule, double lambda_plus_sigma2);

struct PenalizedFit {
  SymKernelMatrix estimate;
  double mu = 0.0;
  double lambda_plus_sigma2 = 0.0;  ///< NaN when mu was given directly
};

/// Nuclear-norm penalised estimator at config.level. The empirical
/// covariance `r` must be at least that level; its leading block is used.
PenalizedFit nuclear_penalized_fit(const SymKernelMatrix& r, int n, const EstimatorConfig& config);
PenalizedFit nuclear_penalized_fit(const SampleSet& samples, const EstimatorConfig& config);
SymKernelMatrix nuclear_penalized(const SampleSet& samples, const EstimatorConfig& config);

/// ||A||^2 - 2 <A, R~^(l) - sigma^2 I^(l)> for a candidate at level l.
double selection_score(const SymKernelMatrix& candidate, int l, const SymKernelMatrix& score_cov,
                       double sigma2);

struct Selection {
  int level = 0;  ///< l-hat, 1-based
  SymKernelMatrix chosen;
  std::vector<double> scores;
};

/// fits[l-1] is the candidate for level l (possibly zero padded). Scores are
/// computed on `score_samples`; ties go to the smallest l.
Selection adaptive_select(std::span<const SymKernelMatrix> fits, const SampleSet& score_samples,
                          double sigma2);

/// (1/M) sum_{k=offset+1}^{offset+M} x_k^2.
double estimate_sigma2(std::span<const double> coeffs, const NoiseEstConfig& config);

struct PipelineResult {
  int level = 0;
  SymKernelMatrix estimate;
  std::vector<double> scores;
  std::vector<double> mus;  ///< resolved mu for each candidate level
};

/// Sample splitting + nuclear-norm fits on one half for l = 1..L + selection
/// on the other half. estcfg.level is ignored.
PipelineResult fit_pipeline(const SampleSet& samples, const SelectorConfig& selector,
                            const EstimatorConfig& estcfg);

}  // namespace lrc
