#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowrankcov/estimators.hpp"
#include "lowrankcov/evaluation.hpp"
#include "lowrankcov/kernel.hpp"

namespace lrc {

enum class EstimatorKind { Empirical, Corrected, Nuclear, Adaptive };

std::string to_string(EstimatorKind kind);

/// One estimator column of an experiment.
struct EstimatorSpec {
  std::string id;
  EstimatorKind kind = EstimatorKind::Corrected;
  std::variant<double, TuningRule> penalty = TuningRule{};
  /// Empty: plug in the top eigenvalue of R_n. Otherwise lambda_max + sigma^2.
  std::optional<double> known_scale;
  bool scale_from_model = false;  ///< "known": take lambda_max + sigma^2 from the model
  bool estimate_sigma2 = false;
  SplitPolicy split = SplitPolicy::FitFirstHalf;
};

/// How the true kernel is produced. Hard kernels may follow the cell level.
struct KernelSource {
  enum class Generator { Zero, Hard, LowRank, Inline };
  Generator generator = Generator::Zero;
  int l_max = 1;                    // zero
  std::optional<int> hard_level;    // hard: empty means "cell"
  double s = 1.0;                   // hard
  double lambda_max = 1.0;          // hard
  std::optional<KernelSpec> fixed;  // lowrank / inline, built once

  bool follows_cell_level() const { return generator == Generator::Hard && !hard_level; }
  KernelSpec build(int cell_level) const;
};

enum class SamplerKind { Coefficients, Paths };

struct ExperimentConfig {
  KernelSource kernel;
  double sigma = 1.0;
  std::vector<EstimatorSpec> estimators;
  std::vector<int> n_grid;
  std::vector<int> l_grid;
  std::optional<RatePrediction> level_rule;
  int replications = 1;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::Coefficients;
  int grid_size = 4096;
  std::optional<int> noise_offset;  ///< default: kernel l_max
  int noise_window = 1000;
  std::string risks_file = "risks.csv";
  std::string selections_file = "selections.csv";
  std::string manifest_file = "manifest.json";

  /// Normalised JSON form (defaults filled, kernel files inlined).
  nlohmann::json canonical;

  /// SHA-256 of canonical.dump().
  std::string hash() const;

  /// (n, l) cells in run order.
  std::vector<std::pair<int, int>> cells() const;
};

/// The `model` table of a config: noise level and kernel source.
struct ModelSource {
  KernelSource kernel;
  double sigma = 1.0;
  nlohmann::json canonical;
};

ModelSource parse_model_source(const nlohmann::json& model, const std::filesystem::path& base_dir = {});

/// Reads only the `model` table of a config file; other tables are ignored.
ModelSource load_model_source(const std::filesystem::path& path);

/// Validates `doc` and fills defaults. Relative kernel file paths resolve
/// against `base_dir`. Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});

/// YAML (or JSON, which is valid YAML) config file. A run manifest is also
/// accepted: its embedded "config" object is used.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Converts YAML text to JSON. Plain scalars become numbers or booleans
/// where they parse as such; quoted scalars stay strings.
nlohmann::json yaml_to_json(const std::string& text);

}  // namespace lrc
