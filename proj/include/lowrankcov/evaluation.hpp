#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lowrankcov/kernel.hpp"

namespace lrc {

/// Monte Carlo summary of ||Est - K||_2^2 for one (estimator, n, l) cell.
struct RiskReport {
  std::string estimator;
  int l = 0;
  int n = 0;
  int replications = 0;
  double mc_risk = 0.0;
  double mc_se = 0.0;  ///< sample stddev / sqrt(R)
  std::optional<double> exact_risk;
  double bias2 = 0.0;  ///< ||K - K^(l)||_2^2
  int failures = 0;
};

/// Mean and standard error of `risks` (stddev with R-1 in the denominator;
/// zero for a single replication).
RiskReport summarize_risks(std::string estimator, int n, int l, std::span<const double> risks,
                           std::optional<double> exact_risk, double bias2);

/// ||est - K||_2^2 = ||est - K^(l)||_F^2 + ||K - K^(l)||_2^2.
double l2_risk(const SymKernelMatrix& est, const KernelSpec& truth);

/// E||R_n - sigma^2 I - K||^2 = ||K^(l) - K||^2 + (||B_l||^2 + tr(B_l)^2) / n.
double exact_empirical_risk(const KernelSpec& truth, double sigma2, int l, int n);

/// ||K^(l) - K||^2 + sigma^4 l^2 / n, a lower bound of exact_empirical_risk.
double lower_bound_empirical(const KernelSpec& truth, double sigma2, int l, int n);

/// Kernel classes with known rate behaviour.
enum class RateClass {
  FiniteRank,      ///< K_{r,l}: K in S_l with rank r
  SobolevBall,     ///< bar K_r(s, rho): ||K||_{s,2} <= rho
  SobolevEigen,    ///< K_r(s, c_*): ||phi_j||_{s,2} <= c_*
};

struct RateParams {
  int r = 1;
  double s = 1.0;
  double rho = 1.0;
  double lambda_max = 1.0;
  double sigma2 = 1.0;
  int level = 1;  ///< only used by FiniteRank
};

struct RatePrediction {
  RateClass rate_class = RateClass::SobolevEigen;
  RateParams params;
};

std::string to_string(RateClass c);
RateClass rate_class_from_string(const std::string& name);

/// Level rules:
///   SobolevBall:  max(ceil((rho^2/(lambda+sigma^2)^2 * n/r)^(1/(2s+1))),
///                     ceil((rho^2 n/(lambda+sigma^2)^2)^(1/(2s+2))))
///   SobolevEigen: max(ceil(n^(1/(2s+1))), ceil((r n)^(1/(2(s+1)))))
///   FiniteRank:   params.level
int predicted_level(const RatePrediction& prediction, int n);

/// Exponent of n in the upper-bound rate for the nuclear-norm estimator in
/// the low-rank regime: -1 for FiniteRank, -2s/(2s+1) for the Sobolev
/// classes.
double predicted_exponent(const RatePrediction& prediction);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares fit of log(risk) against log(x). Needs >= 4 points with
/// positive coordinates, otherwise DomainError.
RateFit fit_rate(std::span<const std::pair<double, double>> points);

}  // namespace lrc
