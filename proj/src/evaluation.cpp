#include "lowrankcov/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lowrankcov/errors.hpp"

namespace lrc {

RiskReport summarize_risks(std::string estimator, int n, int l, std::span<const double> risks,
                           std::optional<double> exact_risk, double bias2) {
  RiskReport report;
  report.estimator = std::move(estimator);
  report.n = n;
  report.l = l;
  report.replications = static_cast<int>(risks.size());
  report.exact_risk = exact_risk;
  report.bias2 = bias2;
  if (risks.empty()) return report;
  double mean = 0.0;
  for (double r : risks) mean += r;
  mean /= static_cast<double>(risks.size());
  double ss = 0.0;
  for (double r : risks) ss += (r - mean) * (r - mean);
  report.mc_risk = mean;
  if (risks.size() > 1) {
    const double var = ss / static_cast<double>(risks.size() - 1);
    report.mc_se = std::sqrt(var / static_cast<double>(risks.size()));
  }
  return report;
}

double l2_risk(const SymKernelMatrix& est, const KernelSpec& truth) {
  const int l = est.level();
  if (l < 1 || l > truth.l_max()) throw BoundsError("estimate level exceeds kernel horizon");
  return (est - project_kernel(truth, l)).squared_norm() + projection_bias2(truth, l);
}

double exact_empirical_risk(const KernelSpec& truth, double sigma2, int l, int n) {
  if (n < 1) throw DomainError("n must be >= 1");
  const SymKernelMatrix b = project_kernel(truth, l) + sigma2 * SymKernelMatrix::identity(l);
  const double tr = b.trace();
  return projection_bias2(truth, l) + (b.squared_norm() + tr * tr) / n;
}

double lower_bound_empirical(const KernelSpec& truth, double sigma2, int l, int n) {
  if (n < 1) throw DomainError("n must be >= 1");
  if (l < 1 || l > truth.l_max()) throw BoundsError("level exceeds kernel horizon");
  return projection_bias2(truth, l) + sigma2 * sigma2 * static_cast<double>(l) * l / n;
}

std::string to_string(RateClass c) {
  switch (c) {
    case RateClass::FiniteRank:
      return "finite_rank";
    case RateClass::SobolevBall:
      return "sobolev_ball";
    case RateClass::SobolevEigen:
      return "sobolev_eigen";
  }
  return "unknown";
}

RateClass rate_class_from_string(const std::string& name) {
  if (name == "finite_rank") return RateClass::FiniteRank;
  if (name == "sobolev_ball") return RateClass::SobolevBall;
  if (name == "sobolev_eigen") return RateClass::SobolevEigen;
  throw DomainError("unknown rate class '" + name + "'");
}

namespace {

// pow() of an exact integer power can land one ulp above the integer;
// without the slack ceil(4096^(1/3)) would come out as 17.
int ceil_level(double x) {
  return std::max(1, static_cast<int>(std::ceil(x * (1.0 - 1e-12))));
}

}  // namespace

int predicted_level(const RatePrediction& prediction, int n) {
  const RateParams& p = prediction.params;
  if (n < 1) throw DomainError("n must be >= 1");
  if (p.r < 1 || !(p.s > 0.0)) throw DomainError("rate parameters must be positive");
  const double dn = static_cast<double>(n);
  switch (prediction.rate_class) {
    case RateClass::FiniteRank:
      if (p.level < 1) throw DomainError("finite-rank class needs level >= 1");
      return p.level;
    case RateClass::SobolevBall: {
      if (!(p.rho > 0.0) || !(p.lambda_max + p.sigma2 > 0.0)) {
        throw DomainError("rate parameters must be positive");
      }
      const double scale = p.rho * p.rho / ((p.lambda_max + p.sigma2) * (p.lambda_max + p.sigma2));
      const int a = ceil_level(std::pow(scale * dn / p.r, 1.0 / (2.0 * p.s + 1.0)));
      const int b = ceil_level(std::pow(scale * dn, 1.0 / (2.0 * p.s + 2.0)));
      return std::max(a, b);
    }
    case RateClass::SobolevEigen: {
      const int a = ceil_level(std::pow(dn, 1.0 / (2.0 * p.s + 1.0)));
      const int b = ceil_level(std::pow(p.r * dn, 1.0 / (2.0 * (p.s + 1.0))));
      return std::max(a, b);
    }
  }
  throw DomainError("unknown rate class");
}

double predicted_exponent(const RatePrediction& prediction) {
  if (prediction.rate_class == RateClass::FiniteRank) return -1.0;
  const double s = prediction.params.s;
  return -2.0 * s / (2.0 * s + 1.0);
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  if (points.size() < 4) throw DomainError("rate fit needs at least 4 points");
  const double m = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      throw DomainError("rate fit needs positive finite points");
    }
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw DomainError("rate fit needs at least two distinct x values");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace lrc
