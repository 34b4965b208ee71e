#include "lowrankcov/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lowrankcov/digest.hpp"
#include "lowrankcov/errors.hpp"
#include "lowrankcov/estimators.hpp"
#include "lowrankcov/io.hpp"
#include "lowrankcov/simulation.hpp"

namespace lrc {

namespace {

using nlohmann::json;

constexpr double kMaxFailureRate = 0.01;

spdlog::logger& logger() {
  static const auto instance = [] {
    auto existing = spdlog::get("lowrankcov");
    return existing ? existing : spdlog::stderr_color_mt("lowrankcov");
  }();
  return *instance;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t cell_key(int n, int l) {
  return (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint32_t>(l);
}

struct ReplicationOutcome {
  std::vector<double> risks;   // NaN marks a numerical failure
  std::vector<int> levels;     // l-hat for adaptive estimators, 0 otherwise
};

struct CellContext {
  const ExperimentConfig& config;
  ModelSpec model;
  int n;
  int l;
  RngPolicy rng;
  int noise_offset;
};

/// sigma^2 handed to an estimator: the model value or an estimate from an
/// independent trajectory.
double sigma2_for(const EstimatorSpec& spec, const CellContext& ctx, std::optional<double>& estimate,
                  std::uint64_t rep) {
  if (!spec.estimate_sigma2) return ctx.model.sigma2();
  if (!estimate) {
    const NoiseEstConfig noise{ctx.noise_offset, ctx.config.noise_window};
    const Eigen::VectorXd extra =
        sample_trajectory_coeffs(ctx.model, noise.offset + noise.window, ctx.rng, 2 * rep + 1);
    estimate = estimate_sigma2(std::span<const double>(extra.data(), static_cast<std::size_t>(extra.size())), noise);
  }
  return *estimate;
}

EstimatorConfig estimator_config(const EstimatorSpec& spec, const CellContext& ctx, int level, double sigma2) {
  EstimatorConfig cfg;
  cfg.level = level;
  cfg.penalty = spec.penalty;
  cfg.sigma2 = sigma2;
  if (spec.known_scale) {
    cfg.scale = KnownScale{*spec.known_scale};
  } else if (spec.scale_from_model) {
    cfg.scale = KnownScale{ctx.model.kernel().lambda_max() + ctx.model.sigma2()};
  } else {
    cfg.scale = PluginTopEigenvalue{};
  }
  return cfg;
}

ReplicationOutcome run_replication(const CellContext& ctx, std::uint64_t rep) {
  const auto& estimators = ctx.config.estimators;
  ReplicationOutcome out;
  out.risks.assign(estimators.size(), std::numeric_limits<double>::quiet_NaN());
  out.levels.assign(estimators.size(), 0);

  SampleSet samples;
  try {
    samples = ctx.config.sampler == SamplerKind::Paths
                  ? sample_paths_and_integrate(ctx.model, ctx.n, ctx.l, ctx.config.grid_size, ctx.rng, 2 * rep)
                  : sample_coeffs(ctx.model, ctx.n, ctx.l, ctx.rng, 2 * rep);
  } catch (const NumericalError&) {
    return out;
  }
  const KernelSpec& truth = ctx.model.kernel();
  std::optional<SymKernelMatrix> r_n;
  std::optional<double> sigma2_hat;

  for (std::size_t i = 0; i < estimators.size(); ++i) {
    const EstimatorSpec& spec = estimators[i];
    try {
      SymKernelMatrix est;
      if (spec.kind == EstimatorKind::Adaptive) {
        const double s2 = sigma2_for(spec, ctx, sigma2_hat, rep);
        SelectorConfig sel{ctx.l, spec.split};
        PipelineResult res = fit_pipeline(samples, sel, estimator_config(spec, ctx, ctx.l, s2));
        out.levels[i] = res.level;
        est = std::move(res.estimate);
      } else {
        if (!r_n) r_n = empirical_covariance(samples);
        if (spec.kind == EstimatorKind::Empirical) {
          est = *r_n;
        } else {
          const double s2 = sigma2_for(spec, ctx, sigma2_hat, rep);
          if (spec.kind == EstimatorKind::Corrected) {
            est = *r_n - s2 * SymKernelMatrix::identity(ctx.l);
          } else {
            est = nuclear_penalized_fit(*r_n, ctx.n, estimator_config(spec, ctx, ctx.l, s2)).estimate;
          }
        }
      }
      const double risk = l2_risk(est, truth);
      if (std::isfinite(risk)) out.risks[i] = risk;
    } catch (const NumericalError&) {
      // counted as a failure by the caller
    }
  }
  return out;
}

std::vector<ReplicationOutcome> run_cell(const CellContext& ctx, int workers) {
  const int reps = ctx.config.replications;
  std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int rep = next++; rep < reps; rep = next++) {
      try {
        outcomes[static_cast<std::size_t>(rep)] = run_replication(ctx, static_cast<std::uint64_t>(rep));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = reps;
      }
    }
  };
  const int threads = std::max(1, std::min(workers, reps));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return outcomes;
}

}  // namespace

int workers_from_environment() {
  if (const char* env = std::getenv("LOWRANKCOV_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("LOWRANKCOV_WORKERS", "must be a positive integer");
  }
  return 1;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  if (options.workers < 1) throw ConfigError("workers", "must be >= 1");
  ExperimentResult result;
  json manifest;
  manifest["tool"] = "lowrankcov";
  manifest["version"] = kToolVersion;
  manifest["config_hash"] = config.hash();
  manifest["config"] = config.canonical;
  manifest["master_seed"] = config.seed;
  manifest["seed_rule"] =
      "cell policy = RngPolicy(master_seed).child((n << 32) | l); replication r draws samples from "
      "substream 2r and the noise-estimation trajectory from substream 2r+1";
  manifest["started_at"] = utc_now();
  manifest["workers"] = options.workers;
  manifest["cells"] = json::array();

  const RngPolicy master(config.seed);
  for (const auto& [n, l] : config.cells()) {
    const auto started = std::chrono::steady_clock::now();
    ModelSpec model(config.kernel.build(l), config.sigma);
    const int offset = config.noise_offset.value_or(model.kernel().l_max());
    CellContext ctx{config, model, n, l, master.child(cell_key(n, l)), offset};
    const auto outcomes = run_cell(ctx, options.workers);

    json cell;
    cell["n"] = n;
    cell["l"] = l;
    cell["cell_seed"] = ctx.rng.master_seed();
    cell["replication_seeds"] = json::array();
    for (int rep = 0; rep < config.replications; ++rep) {
      cell["replication_seeds"].push_back(ctx.rng.substream_seed(2 * static_cast<std::uint64_t>(rep)));
    }
    cell["failures"] = json::object();

    const double bias2 = projection_bias2(model.kernel(), l);
    for (std::size_t i = 0; i < config.estimators.size(); ++i) {
      const EstimatorSpec& spec = config.estimators[i];
      std::vector<double> risks;
      risks.reserve(outcomes.size());
      SelectionHistogram hist{spec.id, n, l, {}};
      for (const auto& o : outcomes) {
        if (std::isnan(o.risks[i])) continue;
        risks.push_back(o.risks[i]);
        if (spec.kind == EstimatorKind::Adaptive) ++hist.counts[o.levels[i]];
      }
      const int failures = config.replications - static_cast<int>(risks.size());
      cell["failures"][spec.id] = failures;
      if (failures > kMaxFailureRate * config.replications) {
        throw FailureThresholdError("estimator '" + spec.id + "' failed in " + std::to_string(failures) +
                                    " of " + std::to_string(config.replications) +
                                    " replications at n=" + std::to_string(n) + ", l=" + std::to_string(l));
      }
      std::optional<double> exact;
      if (spec.kind == EstimatorKind::Corrected && !spec.estimate_sigma2) {
        exact = exact_empirical_risk(model.kernel(), model.sigma2(), l, n);
      }
      RiskReport report = summarize_risks(spec.id, n, l, risks, exact, bias2);
      report.failures = failures;
      result.reports.push_back(std::move(report));
      if (spec.kind == EstimatorKind::Adaptive) result.selections.push_back(std::move(hist));
    }
    manifest["cells"].push_back(std::move(cell));

    if (options.log_cells) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      logger().info("cell n={} l={} reps={} done in {:.2f}s", n, l, config.replications, secs);
    }
  }

  manifest["outputs"] = json::array();
  if (options.out_dir) {
    const auto& dir = *options.out_dir;
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> files{{config.risks_file, risk_reports_csv(result.reports)}};
    if (!result.selections.empty()) files.emplace_back(config.selections_file, selections_csv(result.selections));
    if (options.json_report) files.emplace_back("risks.json", risk_reports_json(result.reports).dump(2) + "\n");
    for (const auto& [name, content] : files) {
      write_text_file(dir / name, content);
      manifest["outputs"].push_back({{"path", name}, {"sha256", sha256_hex(content)}});
    }
  }
  manifest["finished_at"] = utc_now();
  if (options.out_dir) write_text_file(*options.out_dir / config.manifest_file, manifest.dump(2) + "\n");
  result.manifest = std::move(manifest);
  return result;
}

std::string risk_reports_csv(const std::vector<RiskReport>& reports) {
  std::string out = "estimator,n,l,reps,mc_risk,mc_se,exact_risk,bias2\r\n";
  for (const auto& r : reports) {
    out += csv_escape(r.estimator) + "," + std::to_string(r.n) + "," + std::to_string(r.l) + "," +
           std::to_string(r.replications) + "," + format_double(r.mc_risk) + "," +
           format_double(r.mc_se) + "," + (r.exact_risk ? format_double(*r.exact_risk) : "") + "," +
           format_double(r.bias2) + "\r\n";
  }
  return out;
}

json risk_reports_json(const std::vector<RiskReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) {
    out.push_back({{"estimator", r.estimator},
                   {"n", r.n},
                   {"l", r.l},
                   {"reps", r.replications},
                   {"mc_risk", r.mc_risk},
                   {"mc_se", r.mc_se},
                   {"exact_risk", r.exact_risk ? json(*r.exact_risk) : json(nullptr)},
                   {"bias2", r.bias2},
                   {"failures", r.failures}});
  }
  return out;
}

std::vector<RiskReport> parse_risk_reports_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty risk CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"estimator", "n", "l", "reps", "mc_risk", "mc_se", "exact_risk", "bias2"};
  if (header != expected) throw IoError("unexpected risk CSV header: " + line);
  std::vector<RiskReport> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != expected.size()) throw IoError("risk CSV row " + std::to_string(row) + " has wrong field count");
    RiskReport r;
    r.estimator = f[0];
    r.n = static_cast<int>(parse_double(f[1]));
    r.l = static_cast<int>(parse_double(f[2]));
    r.replications = static_cast<int>(parse_double(f[3]));
    r.mc_risk = parse_double(f[4]);
    r.mc_se = parse_double(f[5]);
    if (!f[6].empty()) r.exact_risk = parse_double(f[6]);
    r.bias2 = parse_double(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string selections_csv(const std::vector<SelectionHistogram>& selections) {
  std::string out = "estimator,n,L,selected_level,count\r\n";
  for (const auto& h : selections) {
    for (const auto& [level, count] : h.counts) {
      out += csv_escape(h.estimator) + "," + std::to_string(h.n) + "," + std::to_string(h.max_level) + "," +
             std::to_string(level) + "," + std::to_string(count) + "\r\n";
    }
  }
  return out;
}

}  // namespace lrc
