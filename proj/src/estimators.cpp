#include "lowrankcov/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lowrankcov/errors.hpp"

namespace lrc {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolve(const SymKernelMatrix& m,
                                                         const char* context) {
  if (!m.entries().allFinite()) {
    throw NumericalError(std::string(context) + ": non-finite entries at level " +
                         std::to_string(m.level()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.entries());
  if (solver.info() != Eigen::Success) {
    throw NumericalError(std::string(context) + ": eigensolver did not converge (level " +
                         std::to_string(m.level()) + ", Frobenius norm " +
                         std::to_string(m.entries().norm()) + ")");
  }
  return solver;
}

}  // namespace

EstimatorConfig EstimatorConfig::with_sigma2(double value) const {
  EstimatorConfig out = *this;
  out.sigma2 = value;
  return out;
}

double EstimatorConfig::resolved_sigma2() const {
  if (const double* v = std::get_if<double>(&sigma2)) return *v;
  throw ConfigError("sigma2", "sigma2 is set to 'estimate' but no estimate was supplied");
}

double deviation_scale(int n, int l, double t) {
  if (n < 1 || l < 1) throw DomainError("deviation scale needs n, l >= 1");
  if (!(t > 0.0)) throw DomainError("confidence parameter t must be positive");
  const double ratio = (l + t) / n;
  return std::max(std::sqrt(ratio), ratio);
}

SymKernelMatrix empirical_covariance(const SampleSet& samples) {
  if (samples.n() < 1) throw DomainError("empirical covariance of an empty sample");
  const int l = samples.level();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(l, l);
  r.selfadjointView<Eigen::Lower>().rankUpdate(samples.coeffs.transpose(), 1.0 / samples.n());
  r.triangularView<Eigen::StrictlyUpper>() = r.transpose();
  return SymKernelMatrix(r);
}

SymKernelMatrix corrected_empirical(const SampleSet& samples, double sigma2) {
  if (!(sigma2 >= 0.0)) throw DomainError("sigma2 must be nonnegative");
  SymKernelMatrix r = empirical_covariance(samples);
  return r - sigma2 * SymKernelMatrix::identity(r.level());
}

SymKernelMatrix soft_threshold_psd(const SymKernelMatrix& m, double mu) {
  if (!(mu >= 0.0)) throw DomainError("penalty mu must be nonnegative");
  const auto solver = eigensolve(m, "soft_threshold_psd");
  Eigen::VectorXd w = solver.eigenvalues();
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = std::max(w(j) - 0.5 * mu, 0.0);
  const Eigen::MatrixXd& u = solver.eigenvectors();
  return SymKernelMatrix(u * w.asDiagonal() * u.transpose());
}

double resolve_mu(int n, int l, const TuningRule& rule, double lambda_plus_sigma2) {
  if (!(rule.c > 0.0)) throw DomainError("tuning constant c must be positive");
  const double t = rule.t.value_or(std::log(static_cast<double>(n)));
  return rule.c * lambda_plus_sigma2 * deviation_scale(n, l, t);
}

PenalizedFit nuclear_penalized_fit(const SymKernelMatrix& r, int n, const EstimatorConfig& config) {
  const int l = config.level;
  if (l < 1 || l > r.level()) {
    throw BoundsError("estimator level " + std::to_string(l) + " exceeds sample level " +
                      std::to_string(r.level()));
  }
  const double sigma2 = config.resolved_sigma2();
  const SymKernelMatrix rl = r.level() == l ? r : r.leading(l);

  PenalizedFit fit;
  fit.lambda_plus_sigma2 = std::numeric_limits<double>::quiet_NaN();
  if (const double* mu = std::get_if<double>(&config.penalty)) {
    fit.mu = *mu;
  } else {
    const auto& rule = std::get<TuningRule>(config.penalty);
    if (const auto* known = std::get_if<KnownScale>(&config.scale)) {
      fit.lambda_plus_sigma2 = known->value;
    } else {
      fit.lambda_plus_sigma2 = eigensolve(rl, "plugin scale").eigenvalues().maxCoeff();
    }
    fit.mu = resolve_mu(n, l, rule, fit.lambda_plus_sigma2);
  }
  if (!(fit.mu >= 0.0) || !std::isfinite(fit.mu)) throw NumericalError("resolved mu is not finite");
  fit.estimate = soft_threshold_psd(rl - sigma2 * SymKernelMatrix::identity(l), fit.mu);
  return fit;
}

PenalizedFit nuclear_penalized_fit(const SampleSet& samples, const EstimatorConfig& config) {
  if (config.level < 1 || config.level > samples.level()) {
    throw BoundsError("estimator level exceeds sample level");
  }
  const SampleSet view = config.level == samples.level() ? samples : samples.truncated(config.level);
  return nuclear_penalized_fit(empirical_covariance(view), samples.n(), config);
}

SymKernelMatrix nuclear_penalized(const SampleSet& samples, const EstimatorConfig& config) {
  return nuclear_penalized_fit(samples, config).estimate;
}

double selection_score(const SymKernelMatrix& candidate, int l, const SymKernelMatrix& score_cov,
                       double sigma2) {
  if (l > score_cov.level()) throw BoundsError("candidate level exceeds scoring sample level");
  const Eigen::MatrixXd& a = candidate.entries();
  const int k = std::min(l, candidate.level());
  // Entries of a padded candidate beyond its own level are zero and do not
  // contribute to either term.
  const auto block = a.topLeftCorner(k, k);
  const double cross = block.cwiseProduct(score_cov.entries().topLeftCorner(k, k)).sum() -
                       sigma2 * block.trace();
  return candidate.squared_norm() - 2.0 * cross;
}

Selection adaptive_select(std::span<const SymKernelMatrix> fits, const SampleSet& score_samples,
                          double sigma2) {
  if (fits.empty()) throw DomainError("adaptive_select needs at least one candidate");
  const int max_level = static_cast<int>(fits.size());
  if (max_level > score_samples.level()) {
    throw BoundsError("L = " + std::to_string(max_level) + " exceeds scoring sample level " +
                      std::to_string(score_samples.level()));
  }
  const SymKernelMatrix score_cov = empirical_covariance(score_samples.truncated(max_level));
  Selection out;
  out.scores.reserve(fits.size());
  int best = 0;
  for (int i = 0; i < max_level; ++i) {
    const SymKernelMatrix& a = fits[static_cast<std::size_t>(i)];
    // A candidate for level l lives in S_l; anything nonzero beyond the
    // leading l x l block would break the nested structure.
    if (a.level() > i + 1 &&
        (a.entries().rightCols(a.level() - i - 1).cwiseAbs().maxCoeff() > 0.0)) {
      throw DomainError("candidate " + std::to_string(i + 1) + " is not an element of S_" +
                        std::to_string(i + 1));
    }
    out.scores.push_back(selection_score(a, i + 1, score_cov, sigma2));
    if (out.scores[static_cast<std::size_t>(i)] < out.scores[static_cast<std::size_t>(best)]) best = i;
  }
  out.level = best + 1;
  out.chosen = fits[static_cast<std::size_t>(best)];
  return out;
}

double estimate_sigma2(std::span<const double> coeffs, const NoiseEstConfig& config) {
  if (config.offset < 0 || config.window < 1) throw DomainError("invalid noise window");
  const std::size_t end = static_cast<std::size_t>(config.offset) + config.window;
  if (coeffs.size() < end) {
    throw BoundsError("noise estimate needs coefficients up to index " + std::to_string(end) +
                      ", got " + std::to_string(coeffs.size()));
  }
  double acc = 0.0;
  for (std::size_t k = static_cast<std::size_t>(config.offset); k < end; ++k) acc += coeffs[k] * coeffs[k];
  return acc / config.window;
}

PipelineResult fit_pipeline(const SampleSet& samples, const SelectorConfig& selector,
                            const EstimatorConfig& estcfg) {
  if (samples.n() < 2) throw DomainError("fit_pipeline needs n >= 2");
  const int max_level = selector.max_level;
  auto [first, second] = split_halves(samples);
  if (selector.split == SplitPolicy::FitSecondHalf) std::swap(first, second);
  if (max_level < 1 || max_level > samples.level()) {
    throw BoundsError("selector L must lie in [1, sample level]");
  }
  if (max_level > std::min(first.n(), second.n())) {
    throw BoundsError("selector L exceeds the subsample size");
  }
  const double sigma2 = estcfg.resolved_sigma2();

  const SymKernelMatrix fit_cov = empirical_covariance(first.truncated(max_level));
  std::vector<SymKernelMatrix> fits;
  PipelineResult out;
  fits.reserve(static_cast<std::size_t>(max_level));
  for (int l = 1; l <= max_level; ++l) {
    EstimatorConfig cfg = estcfg;
    cfg.level = l;
    PenalizedFit fit = nuclear_penalized_fit(fit_cov, first.n(), cfg);
    out.mus.push_back(fit.mu);
    fits.push_back(std::move(fit.estimate));
  }
  Selection sel = adaptive_select(fits, second.truncated(max_level), sigma2);
  out.level = sel.level;
  out.estimate = std::move(sel.chosen);
  out.scores = std::move(sel.scores);
  return out;
}

}  // namespace lrc
