// Command-line front end. Uses only the C interface of liblowrankcov.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lowrankcov/lowrankcov.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::optional<std::string> format;

  bool json(bool fallback) const { return format ? *format == "json" : fallback; }
};

class CliFailure : public std::runtime_error {
 public:
  CliFailure(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

int exit_code_for(lrc_status status) {
  switch (status) {
    case LRC_OK: return kExitOk;
    case LRC_ERR_ARGUMENT:
    case LRC_ERR_CONFIG:
    case LRC_ERR_IO:
    case LRC_ERR_BOUNDS:
    case LRC_ERR_DOMAIN: return kExitUsage;
    case LRC_ERR_FAILURE_THRESHOLD:
    case LRC_ERR_NUMERICAL: return kExitNumerical;
    default: return kExitInternal;
  }
}

void check(lrc_status status) {
  if (status != LRC_OK) {
    throw CliFailure(exit_code_for(status), std::string(lrc_status_name(status)) + ": " + lrc_last_error());
  }
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Model = Handle<lrc_model, lrc_model_free>;
using Samples = Handle<lrc_samples, lrc_samples_free>;
using Matrix = Handle<lrc_matrix, lrc_matrix_free>;

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { lrc_string_free(ptr); }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Master seed (overrides the config seed)");
  cmd->add_option("--config", flags.config, "YAML or JSON config file");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--workers", flags.workers, "Worker threads (fallback: LOWRANKCOV_WORKERS)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--format", flags.format, "Report format (simulate and bench default to csv, others to json)")->check(CLI::IsMember({"csv", "json"}));
}

int resolve_workers(const CommonFlags& flags) {
  if (flags.workers) return *flags.workers;
  if (const char* env = std::getenv("LOWRANKCOV_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096) {
      throw CliFailure(kExitUsage, "LOWRANKCOV_WORKERS must be a positive integer");
    }
    return static_cast<int>(v);
  }
  return 1;
}

std::filesystem::path require_out(const CommonFlags& flags) {
  if (flags.out.empty()) throw CliFailure(kExitUsage, "--out is required");
  std::filesystem::create_directories(flags.out);
  return flags.out;
}

/// Writes `content` to --out/<name> when --out is given, else to stdout.
void emit(const CommonFlags& flags, const std::string& name, const std::string& content) {
  if (flags.out.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(flags.out);
  const auto path = std::filesystem::path(flags.out) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << content)) throw CliFailure(kExitUsage, "cannot write " + path.string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// ---- estimator flags shared by estimate and select ----

struct EstimatorFlags {
  std::string samples;
  std::string estimator = "nuclear";
  int level = 0;
  std::optional<double> mu;
  double c = 2.0;
  std::optional<double> t;
  std::optional<std::string> scale;
  std::optional<double> sigma2;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f, bool with_kind) {
  cmd->add_option("--samples", f.samples, "Sample file (.csv with sidecar, or .json)")->required();
  if (with_kind) {
    cmd->add_option("--estimator", f.estimator, "empirical, corrected or nuclear")
        ->check(CLI::IsMember({"empirical", "corrected", "nuclear"}));
    cmd->add_option("--level", f.level, "Truncation level (default: all sample columns)")
        ->check(CLI::NonNegativeNumber);
  }
  cmd->add_option("--mu", f.mu, "Fixed penalty (default: tuning rule)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--c", f.c, "Tuning constant")->check(CLI::PositiveNumber);
  cmd->add_option("--t", f.t, "Confidence parameter (default: log n)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--scale", f.scale, "lambda_max + sigma^2: a number, 'known' (from --config) or 'plugin'");
  cmd->add_option("--sigma2", f.sigma2, "Noise variance (default: from the --config model)")
      ->check(CLI::NonNegativeNumber);
}

lrc_estimate_options estimator_options(const EstimatorFlags& f, const CommonFlags& common) {
  lrc_estimate_options o;
  lrc_estimate_options_init(&o);
  o.kind = f.estimator == "empirical"   ? LRC_ESTIMATOR_EMPIRICAL
           : f.estimator == "corrected" ? LRC_ESTIMATOR_CORRECTED
                                        : LRC_ESTIMATOR_NUCLEAR;
  o.level = f.level;
  if (f.mu) o.mu = *f.mu;
  o.c = f.c;
  if (f.t) o.t = *f.t;

  Model model;
  const bool need_model = !common.config.empty() &&
                          (!f.sigma2 || (f.scale && *f.scale == "known"));
  if (need_model) check(lrc_model_load(common.config.c_str(), std::max(1, f.level), model.out()));
  if (f.sigma2) {
    o.sigma2 = *f.sigma2;
  } else if (model.get()) {
    const double s = lrc_model_sigma(model.get());
    o.sigma2 = s * s;
  } else if (o.kind != LRC_ESTIMATOR_EMPIRICAL) {
    throw CliFailure(kExitUsage, "--sigma2 or a --config with a model is required");
  }
  if (f.scale && *f.scale != "plugin") {
    if (*f.scale == "known") {
      if (!model.get()) throw CliFailure(kExitUsage, "--scale known needs --config");
      o.scale = lrc_model_lambda_max(model.get()) + o.sigma2;
    } else {
      try {
        std::size_t used = 0;
        o.scale = std::stod(*f.scale, &used);
        if (used != f.scale->size() || !(o.scale > 0.0)) throw std::invalid_argument("scale");
      } catch (const std::exception&) {
        throw CliFailure(kExitUsage, "--scale must be a positive number, 'known' or 'plugin'");
      }
    }
  }
  return o;
}

std::string matrix_csv(const lrc_matrix* m) {
  std::string out;
  const int l = lrc_matrix_level(m);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      double v = 0;
      check(lrc_matrix_get(m, i, j, &v));
      out += (j ? "," : "") + fmt(v);
    }
    out += "\r\n";
  }
  return out;
}

// ---- subcommands ----

struct SimulateFlags {
  int n = 0;
  int l = 0;
  std::string sampler = "coefficients";
  int grid_size = 4096;
};

int run_simulate(const CommonFlags& common, const SimulateFlags& f) {
  if (common.config.empty()) throw CliFailure(kExitUsage, "--config is required");
  const auto out = require_out(common);
  Model model;
  check(lrc_model_load(common.config.c_str(), f.l, model.out()));
  Samples samples;
  const auto sampler = f.sampler == "paths" ? LRC_SAMPLER_PATHS : LRC_SAMPLER_COEFFICIENTS;
  check(lrc_simulate(model.get(), f.n, f.l, common.seed.value_or(0), 0, sampler, f.grid_size, samples.out()));
  const bool json = common.json(false);
  const auto path = out / (json ? "samples.json" : "samples.csv");
  check(lrc_samples_save(samples.get(), model.get(), path.string().c_str(), json ? LRC_FORMAT_JSON : LRC_FORMAT_CSV));
  check(lrc_model_save_kernel(model.get(), (out / "kernel.json").string().c_str()));
  std::cerr << "wrote " << path.string() << " (n=" << f.n << ", l=" << f.l << ")\n";
  return kExitOk;
}

int run_estimate(const CommonFlags& common, const EstimatorFlags& f) {
  Samples samples;
  check(lrc_samples_load(f.samples.c_str(), samples.out()));
  const lrc_estimate_options o = estimator_options(f, common);
  Matrix est;
  double mu = 0.0;
  check(lrc_estimate(samples.get(), &o, est.out(), &mu));
  if (!common.json(true)) {
    emit(common, "estimate.csv", matrix_csv(est.get()));
  } else {
    OwnedString s;
    check(lrc_matrix_to_json(est.get(), &s.ptr));
    emit(common, "estimate.json", std::string(s.ptr) + "\n");
  }
  if (o.kind == LRC_ESTIMATOR_NUCLEAR) std::cerr << "mu = " << fmt(mu) << "\n";
  return kExitOk;
}

struct SelectFlags {
  int max_level = 0;
  std::string split = "fit_first_half";
};

int run_select(const CommonFlags& common, EstimatorFlags f, const SelectFlags& s) {
  Samples samples;
  check(lrc_samples_load(f.samples.c_str(), samples.out()));
  f.estimator = "nuclear";
  f.level = s.max_level;
  lrc_select_options o;
  lrc_select_options_init(&o);
  o.max_level = s.max_level;
  o.fit_second_half = s.split == "fit_second_half";
  o.estimator = estimator_options(f, common);
  std::vector<double> scores(static_cast<std::size_t>(std::max(0, s.max_level)));
  int level = 0;
  Matrix est;
  check(lrc_select(samples.get(), &o, &level, scores.data(), est.out()));
  if (!common.json(true)) {
    std::string out = "l,score,selected\r\n";
    for (int l = 1; l <= s.max_level; ++l) {
      out += std::to_string(l) + "," + fmt(scores[static_cast<std::size_t>(l - 1)]) + "," +
             (l == level ? "1" : "0") + "\r\n";
    }
    emit(common, "selection.csv", out);
  } else {
    OwnedString m;
    check(lrc_matrix_to_json(est.get(), &m.ptr));
    std::string out = "{\n  \"selected_level\": " + std::to_string(level) + ",\n  \"max_level\": " +
                      std::to_string(s.max_level) + ",\n  \"split\": " + json_string(s.split) +
                      ",\n  \"scores\": [";
    for (std::size_t i = 0; i < scores.size(); ++i) out += (i ? ", " : "") + fmt(scores[i]);
    out += "],\n  \"estimate\": " + std::string(m.ptr) + "\n}\n";
    emit(common, "selection.json", out);
  }
  std::cerr << "selected l = " << level << "\n";
  return kExitOk;
}

struct NoiseFlags {
  std::string samples;
  std::optional<int> offset;
  int window = 1000;
  int reps = 1;
};

int run_noise(const CommonFlags& common, const NoiseFlags& f) {
  std::vector<double> estimates;
  int offset = f.offset.value_or(0);
  if (!f.samples.empty()) {
    Samples samples;
    check(lrc_samples_load(f.samples.c_str(), samples.out()));
    const int n = lrc_samples_n(samples.get());
    const int len = lrc_samples_level(samples.get());
    std::vector<double> row(static_cast<std::size_t>(len));
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < len; ++k) check(lrc_samples_get(samples.get(), i, k, &row[static_cast<std::size_t>(k)]));
      double v = 0.0;
      check(lrc_estimate_sigma2(row.data(), row.size(), offset, f.window, &v));
      estimates.push_back(v);
    }
  } else {
    if (common.config.empty()) throw CliFailure(kExitUsage, "give --samples or a --config with a model");
    Model model;
    check(lrc_model_load(common.config.c_str(), 1, model.out()));
    if (!f.offset) offset = lrc_model_l_max(model.get());
    for (int rep = 0; rep < f.reps; ++rep) {
      Samples traj;
      check(lrc_simulate_trajectory(model.get(), offset + f.window, common.seed.value_or(0),
                                    static_cast<std::uint64_t>(rep), traj.out()));
      std::vector<double> row(static_cast<std::size_t>(offset + f.window));
      for (int k = 0; k < offset + f.window; ++k) check(lrc_samples_get(traj.get(), 0, k, &row[static_cast<std::size_t>(k)]));
      double v = 0.0;
      check(lrc_estimate_sigma2(row.data(), row.size(), offset, f.window, &v));
      estimates.push_back(v);
    }
  }
  if (!common.json(true)) {
    std::string out = "index,offset,window,sigma2_hat\r\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      out += std::to_string(i) + "," + std::to_string(offset) + "," + std::to_string(f.window) + "," +
             fmt(estimates[i]) + "\r\n";
    }
    emit(common, "noise.csv", out);
  } else {
    std::string out = "{\n  \"offset\": " + std::to_string(offset) + ",\n  \"window\": " + std::to_string(f.window) +
                      ",\n  \"sigma2_hat\": [";
    for (std::size_t i = 0; i < estimates.size(); ++i) out += (i ? ", " : "") + fmt(estimates[i]);
    out += "]\n}\n";
    emit(common, "noise.json", out);
  }
  return kExitOk;
}

int run_bench(const CommonFlags& common) {
  if (common.config.empty()) throw CliFailure(kExitUsage, "--config is required");
  const auto out = require_out(common);
  const int workers = resolve_workers(common);
  const std::uint64_t* seed = common.seed ? &*common.seed : nullptr;
  check(lrc_bench_run(common.config.c_str(), out.string().c_str(), workers, seed,
                      common.json(false) ? LRC_FORMAT_JSON : LRC_FORMAT_CSV));
  return kExitOk;
}

struct RatesFlags {
  std::string input;
  std::string axis = "n";
};

int run_rates(const CommonFlags& common, const RatesFlags& f) {
  const auto out = require_out(common);
  OwnedString report;
  check(lrc_rates_run(f.input.c_str(), out.string().c_str(), f.axis == "l",
                      common.json(true) ? LRC_FORMAT_JSON : LRC_FORMAT_CSV, &report.ptr));
  std::cout << report.ptr << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank covariance kernel estimation from white-noise trajectories", "lowrankcov"};
  app.set_version_flag("--version", std::string(lrc_version()));
  app.require_subcommand(1);

  CommonFlags common;

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Draw coefficient samples from a model config");
  add_common(simulate, common);
  simulate->add_option("--n", sim.n, "Number of trajectories")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--l", sim.l, "Truncation level")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--sampler", sim.sampler, "coefficients or paths")
      ->check(CLI::IsMember({"coefficients", "paths"}));
  simulate->add_option("--grid-size", sim.grid_size, "Time grid for the path sampler")->check(CLI::Range(256, 1 << 24));

  EstimatorFlags est_flags;
  auto* estimate = app.add_subcommand("estimate", "Fit one estimator on a sample file");
  add_common(estimate, common);
  add_estimator_flags(estimate, est_flags, true);

  EstimatorFlags sel_est_flags;
  SelectFlags sel;
  auto* select = app.add_subcommand("select", "Choose the truncation level by sample splitting");
  add_common(select, common);
  add_estimator_flags(select, sel_est_flags, false);
  select->add_option("--max-level", sel.max_level, "Largest candidate level L")->required()->check(CLI::PositiveNumber);
  select->add_option("--split", sel.split, "fit_first_half or fit_second_half")
      ->check(CLI::IsMember({"fit_first_half", "fit_second_half"}));

  NoiseFlags noise_flags;
  auto* noise = app.add_subcommand("noise", "Estimate the noise variance from high-order coefficients");
  add_common(noise, common);
  noise->add_option("--samples", noise_flags.samples, "Rows are coefficient sequences");
  noise->add_option("--offset", noise_flags.offset, "Coefficients skipped (default: kernel l_max, or 0 with --samples)")
      ->check(CLI::NonNegativeNumber);
  noise->add_option("--window", noise_flags.window, "Coefficients averaged")->check(CLI::PositiveNumber);
  noise->add_option("--reps", noise_flags.reps, "Simulated trajectories when no --samples")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Run a Monte Carlo experiment config");
  add_common(bench, common);

  RatesFlags rates_flags;
  auto* rates = app.add_subcommand("rates", "Fit log-log rates over a bench risk CSV");
  add_common(rates, common);
  rates->add_option("--input", rates_flags.input, "Risk CSV written by bench")->required();
  rates->add_option("--axis", rates_flags.axis, "Regress on n or l")->check(CLI::IsMember({"n", "l"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return kExitOk;
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(common, sim);
    if (*estimate) return run_estimate(common, est_flags);
    if (*select) return run_select(common, sel_est_flags, sel);
    if (*noise) return run_noise(common, noise_flags);
    if (*bench) return run_bench(common);
    if (*rates) return run_rates(common, rates_flags);
  } catch (const CliFailure& e) {
    std::cerr << "lowrankcov: " << e.what() << "\n";
    return e.code();
  } catch (const std::exception& e) {
    std::cerr << "lowrankcov: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
