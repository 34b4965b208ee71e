#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowrankcov/evaluation.hpp"

namespace lrc {

enum class RateAxis { N, L };

/// One fitted curve: risks of a single estimator against n (or l).
struct RateSeries {
  std::string estimator;
  std::string group;  ///< e.g. "l=8" when several l share an n grid
  std::vector<std::pair<double, double>> points;    ///< used in the fit
  std::vector<std::pair<double, double>> excluded;  ///< pre-asymptotic points
  RateFit fit;
};

/// Groups reports into series and fits log(risk) against log(x). With
/// axis N, a point is excluded when (l + log n) / n > 1. Series with fewer
/// than four usable points are skipped.
std::vector<RateSeries> fit_rate_series(const std::vector<RiskReport>& reports, RateAxis axis);

nlohmann::json rates_to_json(const std::vector<RateSeries>& series, RateAxis axis);

/// Static log-log plot with the fitted lines and slope annotations.
std::string rates_svg(const std::vector<RateSeries>& series, RateAxis axis);

struct RatesOutput {
  std::vector<RateSeries> series;
  nlohmann::json report;
};

/// estimator,group,slope,intercept,r2,points
std::string rates_csv(const std::vector<RateSeries>& series);

/// Reads a bench risk CSV and writes rates.json and rates.svg into `out_dir`,
/// plus rates.csv when `csv_table` is set.
RatesOutput run_rates(const std::filesystem::path& risks_csv, const std::filesystem::path& out_dir,
                      RateAxis axis = RateAxis::N, bool csv_table = false);

}  // namespace lrc
