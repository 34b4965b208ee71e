#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowrankcov/evaluation.hpp"
#include "lowrankcov/experiment_config.hpp"

namespace lrc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Distribution of l-hat for one adaptive estimator in one cell.
struct SelectionHistogram {
  std::string estimator;
  int n = 0;
  int max_level = 0;
  std::map<int, int> counts;  ///< selected level -> replications
};

struct RunOptions {
  int workers = 1;
  std::optional<std::filesystem::path> out_dir;  ///< write outputs when set
  bool json_report = false;  ///< also write risks.json
  bool log_cells = true;
};

struct ExperimentResult {
  std::vector<RiskReport> reports;
  std::vector<SelectionHistogram> selections;
  nlohmann::json manifest;
};

/// Runs every (n, l, estimator, replication). Replications are spread over
/// `workers` threads and merged in replication order, so outputs do not
/// depend on the worker count. Throws FailureThresholdError when more than
/// 1% of the replications of any estimator fail numerically.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// RFC-4180 CSV with header estimator,n,l,reps,mc_risk,mc_se,exact_risk,bias2.
std::string risk_reports_csv(const std::vector<RiskReport>& reports);
std::vector<RiskReport> parse_risk_reports_csv(const std::string& text);
nlohmann::json risk_reports_json(const std::vector<RiskReport>& reports);

std::string selections_csv(const std::vector<SelectionHistogram>& selections);

/// Worker count from the LOWRANKCOV_WORKERS environment variable, or 1.
int workers_from_environment();

}  // namespace lrc
