#include "lowrankcov/lowrankcov.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowrankcov/errors.hpp"
#include "lowrankcov/estimators.hpp"
#include "lowrankcov/evaluation.hpp"
#include "lowrankcov/experiment_config.hpp"
#include "lowrankcov/harness.hpp"
#include "lowrankcov/io.hpp"
#include "lowrankcov/rates.hpp"
#include "lowrankcov/simulation.hpp"

struct lrc_model {
  lrc::ModelSpec spec;
};

struct lrc_samples {
  lrc::SampleSet set;
  std::string model_hash;
};

struct lrc_matrix {
  lrc::SymKernelMatrix m;
};

namespace {

thread_local std::string g_last_error;

lrc_status fail(lrc_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
lrc_status guarded(F&& body) {
  try {
    body();
    return LRC_OK;
  } catch (const lrc::ConfigError& e) {
    return fail(LRC_ERR_CONFIG, e.what());
  } catch (const lrc::FailureThresholdError& e) {
    return fail(LRC_ERR_FAILURE_THRESHOLD, e.what());
  } catch (const lrc::NumericalError& e) {
    return fail(LRC_ERR_NUMERICAL, e.what());
  } catch (const lrc::IoError& e) {
    return fail(LRC_ERR_IO, e.what());
  } catch (const lrc::BoundsError& e) {
    return fail(LRC_ERR_BOUNDS, e.what());
  } catch (const lrc::DomainError& e) {
    return fail(LRC_ERR_DOMAIN, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(LRC_ERR_ARGUMENT, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(LRC_ERR_IO, std::string("malformed JSON: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(LRC_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(LRC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LRC_ERR_INTERNAL, "unknown error");
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

lrc::EstimatorConfig to_config(const lrc_estimate_options& o, int level) {
  lrc::EstimatorConfig cfg;
  cfg.level = level;
  if (o.mu >= 0.0) {
    cfg.penalty = o.mu;
  } else {
    lrc::TuningRule rule;
    rule.c = o.c;
    if (o.t >= 0.0) rule.t = o.t;
    cfg.penalty = rule;
  }
  cfg.sigma2 = o.sigma2;
  if (o.scale > 0.0) {
    cfg.scale = lrc::KnownScale{o.scale};
  } else {
    cfg.scale = lrc::PluginTopEigenvalue{};
  }
  return cfg;
}

std::string hash_of(const lrc_model* model) { return model ? lrc::model_hash(model->spec) : std::string(); }

}  // namespace

extern "C" {

const char* lrc_version(void) { return lrc::kToolVersion; }

const char* lrc_last_error(void) { return g_last_error.c_str(); }

const char* lrc_status_name(lrc_status status) {
  switch (status) {
    case LRC_OK: return "ok";
    case LRC_ERR_ARGUMENT: return "invalid argument";
    case LRC_ERR_CONFIG: return "config error";
    case LRC_ERR_FAILURE_THRESHOLD: return "numerical failure threshold exceeded";
    case LRC_ERR_NUMERICAL: return "numerical failure";
    case LRC_ERR_IO: return "I/O error";
    case LRC_ERR_BOUNDS: return "index out of range";
    case LRC_ERR_DOMAIN: return "domain error";
    case LRC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void lrc_string_free(char* s) { std::free(s); }

// ---- models ----

lrc_status lrc_model_load(const char* config_path, int cell_level, lrc_model** out) {
  return guarded([&] {
    require(config_path && out, "null argument");
    const lrc::ModelSource src = lrc::load_model_source(config_path);
    if (src.kernel.follows_cell_level() && cell_level < 1) {
      throw lrc::ConfigError("model.kernel.l", "\"cell\" needs a level");
    }
    *out = new lrc_model{lrc::ModelSpec(src.kernel.build(cell_level), src.sigma)};
  });
}

lrc_status lrc_model_from_kernel_file(const char* kernel_path, double sigma, lrc_model** out) {
  return guarded([&] {
    require(kernel_path && out, "null argument");
    *out = new lrc_model{lrc::ModelSpec(lrc::load_kernel(kernel_path), sigma)};
  });
}

lrc_status lrc_model_hard(int l, double s, double lambda_max, double sigma, lrc_model** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new lrc_model{lrc::ModelSpec(lrc::make_hard_kernel(l, s, lambda_max), sigma)};
  });
}

lrc_status lrc_model_zero(int l_max, double sigma, lrc_model** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new lrc_model{lrc::ModelSpec(lrc::KernelSpec::zero(l_max), sigma)};
  });
}

void lrc_model_free(lrc_model* model) { delete model; }

int lrc_model_rank(const lrc_model* model) { return model ? model->spec.kernel().rank() : 0; }
int lrc_model_l_max(const lrc_model* model) { return model ? model->spec.kernel().l_max() : 0; }
double lrc_model_sigma(const lrc_model* model) { return model ? model->spec.sigma() : 0.0; }
double lrc_model_lambda_max(const lrc_model* model) { return model ? model->spec.kernel().lambda_max() : 0.0; }

lrc_status lrc_model_save_kernel(const lrc_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    lrc::save_kernel(model->spec.kernel(), path);
  });
}

lrc_status lrc_model_eval_kernel(const lrc_model* model, double t, double u, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = lrc::eval_kernel(model->spec.kernel(), t, u);
  });
}

lrc_status lrc_model_sobolev_norm(const lrc_model* model, double s, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = lrc::sobolev_norm(model->spec.kernel(), s);
  });
}

lrc_status lrc_model_projection_bias2(const lrc_model* model, int l, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = lrc::projection_bias2(model->spec.kernel(), l);
  });
}

lrc_status lrc_exact_empirical_risk(const lrc_model* model, int l, int n, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = lrc::exact_empirical_risk(model->spec.kernel(), model->spec.sigma2(), l, n);
  });
}

lrc_status lrc_lower_bound_empirical(const lrc_model* model, int l, int n, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = lrc::lower_bound_empirical(model->spec.kernel(), model->spec.sigma2(), l, n);
  });
}

// ---- samples ----

lrc_status lrc_simulate(const lrc_model* model, int n, int l, uint64_t seed, uint64_t stream, lrc_sampler sampler,
                        int grid_size, lrc_samples** out) {
  return guarded([&] {
    require(model && out, "null argument");
    const lrc::RngPolicy rng(seed);
    lrc::SampleSet set;
    if (sampler == LRC_SAMPLER_PATHS) {
      set = lrc::sample_paths_and_integrate(model->spec, n, l, grid_size, rng, stream);
    } else {
      require(sampler == LRC_SAMPLER_COEFFICIENTS, "unknown sampler");
      set = lrc::sample_coeffs(model->spec, n, l, rng, stream);
    }
    *out = new lrc_samples{std::move(set), hash_of(model)};
  });
}

lrc_status lrc_simulate_trajectory(const lrc_model* model, int horizon, uint64_t seed, uint64_t stream,
                                   lrc_samples** out) {
  return guarded([&] {
    require(model && out, "null argument");
    const lrc::RngPolicy rng(seed);
    const Eigen::VectorXd x = lrc::sample_trajectory_coeffs(model->spec, horizon, rng, stream);
    lrc::SampleSet set;
    set.coeffs = x.transpose();
    set.seed = {seed, stream, rng.substream_seed(stream)};
    *out = new lrc_samples{std::move(set), hash_of(model)};
  });
}

lrc_status lrc_samples_from_array(const double* data, int n, int l, lrc_samples** out) {
  return guarded([&] {
    require(data && out, "null argument");
    require(n >= 1 && l >= 1, "n and l must be positive");
    lrc::SampleSet set;
    set.coeffs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data, n, l);
    *out = new lrc_samples{std::move(set), {}};
  });
}

lrc_status lrc_samples_load(const char* path, lrc_samples** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const std::filesystem::path p(path);
    if (p.extension() == ".json") {
      const auto doc = nlohmann::json::parse(lrc::read_text_file(p));
      lrc::SampleSet set;
      const auto& rows = doc.at("coeffs");
      if (!rows.is_array() || rows.empty()) throw lrc::IoError(p.string() + ": coeffs must be a nonempty array");
      const auto l = static_cast<Eigen::Index>(rows.at(0).size());
      set.coeffs.resize(static_cast<Eigen::Index>(rows.size()), l);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != l) throw lrc::IoError(p.string() + ": ragged coeffs");
        for (Eigen::Index k = 0; k < l; ++k) set.coeffs(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)].get<double>();
      }
      set.seed = {doc.value("seed", std::uint64_t{0}), doc.value("stream", std::uint64_t{0}),
                  doc.value("derived_seed", std::uint64_t{0})};
      *out = new lrc_samples{std::move(set), doc.value("model_hash", std::string())};
    } else {
      *out = new lrc_samples{lrc::load_samples(p), {}};
    }
  });
}

lrc_status lrc_samples_save(const lrc_samples* samples, const lrc_model* model, const char* path,
                            lrc_format format) {
  return guarded([&] {
    require(samples && path, "null argument");
    const std::string hash = model ? hash_of(model) : samples->model_hash;
    if (format == LRC_FORMAT_JSON) {
      nlohmann::json doc = lrc::samples_sidecar(samples->set, hash);
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < samples->set.coeffs.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < samples->set.coeffs.cols(); ++k) row.push_back(samples->set.coeffs(i, k));
        rows.push_back(std::move(row));
      }
      doc["coeffs"] = std::move(rows);
      lrc::write_text_file(path, doc.dump() + "\n");
    } else {
      require(format == LRC_FORMAT_CSV, "unknown format");
      lrc::save_samples(samples->set, path, hash);
    }
  });
}

void lrc_samples_free(lrc_samples* samples) { delete samples; }
int lrc_samples_n(const lrc_samples* samples) { return samples ? samples->set.n() : 0; }
int lrc_samples_level(const lrc_samples* samples) { return samples ? samples->set.level() : 0; }

lrc_status lrc_samples_get(const lrc_samples* samples, int row, int col, double* out) {
  return guarded([&] {
    require(samples && out, "null argument");
    if (row < 0 || row >= samples->set.n() || col < 0 || col >= samples->set.level()) {
      throw lrc::BoundsError("sample index out of range");
    }
    *out = samples->set.coeffs(row, col);
  });
}

// ---- estimation ----

void lrc_estimate_options_init(lrc_estimate_options* options) {
  if (!options) return;
  options->kind = LRC_ESTIMATOR_NUCLEAR;
  options->level = 0;
  options->sigma2 = std::nan("");
  options->mu = -1.0;
  options->c = 2.0;
  options->t = -1.0;
  options->scale = 0.0;
}

lrc_status lrc_estimate(const lrc_samples* samples, const lrc_estimate_options* options, lrc_matrix** out,
                        double* mu_out) {
  return guarded([&] {
    require(samples && options && out, "null argument");
    const int level = options->level == 0 ? samples->set.level() : options->level;
    if (level < 1 || level > samples->set.level()) {
      throw lrc::BoundsError("level " + std::to_string(level) + " outside 1.." + std::to_string(samples->set.level()));
    }
    const lrc::SampleSet data = samples->set.truncated(level);
    if (options->kind != LRC_ESTIMATOR_EMPIRICAL) {
      require(std::isfinite(options->sigma2) && options->sigma2 >= 0.0, "sigma2 must be a nonnegative number");
    }
    double mu = 0.0;
    lrc::SymKernelMatrix est;
    switch (options->kind) {
      case LRC_ESTIMATOR_EMPIRICAL:
        est = lrc::empirical_covariance(data);
        break;
      case LRC_ESTIMATOR_CORRECTED:
        est = lrc::corrected_empirical(data, options->sigma2);
        break;
      case LRC_ESTIMATOR_NUCLEAR: {
        auto fit = lrc::nuclear_penalized_fit(data, to_config(*options, level));
        mu = fit.mu;
        est = std::move(fit.estimate);
        break;
      }
      default:
        throw std::invalid_argument("unknown estimator kind");
    }
    if (mu_out) *mu_out = mu;
    *out = new lrc_matrix{std::move(est)};
  });
}

void lrc_select_options_init(lrc_select_options* options) {
  if (!options) return;
  options->max_level = 1;
  options->fit_second_half = 0;
  lrc_estimate_options_init(&options->estimator);
}

lrc_status lrc_select(const lrc_samples* samples, const lrc_select_options* options, int* level_out, double* scores,
                      lrc_matrix** estimate) {
  return guarded([&] {
    require(samples && options && level_out, "null argument");
    require(options->estimator.kind == LRC_ESTIMATOR_NUCLEAR, "the selector runs the nuclear estimator");
    require(std::isfinite(options->estimator.sigma2), "sigma2 must be set");
    if (options->max_level < 1 || options->max_level > samples->set.level()) {
      throw lrc::BoundsError("max level " + std::to_string(options->max_level) + " outside 1.." +
                             std::to_string(samples->set.level()));
    }
    const lrc::SelectorConfig sel{options->max_level, options->fit_second_half ? lrc::SplitPolicy::FitSecondHalf
                                                                               : lrc::SplitPolicy::FitFirstHalf};
    auto res = lrc::fit_pipeline(samples->set, sel, to_config(options->estimator, options->max_level));
    *level_out = res.level;
    if (scores) std::copy(res.scores.begin(), res.scores.end(), scores);
    if (estimate) *estimate = new lrc_matrix{std::move(res.estimate)};
  });
}

lrc_status lrc_estimate_sigma2(const double* coeffs, size_t count, int offset, int window, double* out) {
  return guarded([&] {
    require(coeffs && out, "null argument");
    *out = lrc::estimate_sigma2(std::span<const double>(coeffs, count), lrc::NoiseEstConfig{offset, window});
  });
}

void lrc_matrix_free(lrc_matrix* matrix) { delete matrix; }
int lrc_matrix_level(const lrc_matrix* matrix) { return matrix ? matrix->m.level() : 0; }

lrc_status lrc_matrix_get(const lrc_matrix* matrix, int row, int col, double* out) {
  return guarded([&] {
    require(matrix && out, "null argument");
    if (row < 0 || row >= matrix->m.level() || col < 0 || col >= matrix->m.level()) {
      throw lrc::BoundsError("matrix index out of range");
    }
    *out = matrix->m(row, col);
  });
}

lrc_status lrc_matrix_to_json(const lrc_matrix* matrix, char** out) {
  return guarded([&] {
    require(matrix && out, "null argument");
    *out = dup_string(lrc::matrix_to_json(matrix->m).dump(2));
  });
}

lrc_status lrc_matrix_load(const char* path, lrc_matrix** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new lrc_matrix{lrc::matrix_from_json(nlohmann::json::parse(lrc::read_text_file(path)))};
  });
}

lrc_status lrc_matrix_save(const lrc_matrix* matrix, const char* path) {
  return guarded([&] {
    require(matrix && path, "null argument");
    lrc::write_text_file(path, lrc::matrix_to_json(matrix->m).dump(2) + "\n");
  });
}

lrc_status lrc_matrix_l2_risk(const lrc_matrix* matrix, const lrc_model* model, double* out) {
  return guarded([&] {
    require(matrix && model && out, "null argument");
    *out = lrc::l2_risk(matrix->m, model->spec.kernel());
  });
}

// ---- experiments ----

lrc_status lrc_bench_run(const char* config_path, const char* out_dir, int workers, const uint64_t* seed_override,
                         lrc_format format) {
  return guarded([&] {
    require(config_path && out_dir, "null argument");
    if (workers < 1) throw lrc::ConfigError("workers", "must be >= 1");
    lrc::ExperimentConfig cfg = lrc::load_experiment_config(config_path);
    if (seed_override) {
      cfg.seed = *seed_override;
      cfg.canonical["seed"] = *seed_override;
    }
    lrc::RunOptions opts;
    opts.workers = workers;
    opts.out_dir = std::filesystem::path(out_dir);
    opts.json_report = format == LRC_FORMAT_JSON;
    lrc::run_experiment(cfg, opts);
  });
}

lrc_status lrc_rates_run(const char* risks_csv, const char* out_dir, int axis_l, lrc_format format,
                         char** report_json) {
  return guarded([&] {
    require(risks_csv && out_dir, "null argument");
    const auto res = lrc::run_rates(risks_csv, out_dir, axis_l ? lrc::RateAxis::L : lrc::RateAxis::N,
                                    format == LRC_FORMAT_CSV);
    if (report_json) *report_json = dup_string(res.report.dump(2));
  });
}

lrc_status lrc_fit_rate(const double* x, const double* y, size_t count, double* slope, double* intercept, double* r2) {
  return guarded([&] {
    require(x && y, "null argument");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(count);
    for (size_t i = 0; i < count; ++i) pts.emplace_back(x[i], y[i]);
    const lrc::RateFit fit = lrc::fit_rate(pts);
    if (slope) *slope = fit.slope;
    if (intercept) *intercept = fit.intercept;
    if (r2) *r2 = fit.r2;
  });
}

lrc_status lrc_predicted_level(const char* rate_class, int r, double s, double rho, double lambda_max, double sigma2,
                               int level, int n, int* out) {
  return guarded([&] {
    require(rate_class && out, "null argument");
    lrc::RatePrediction pred;
    pred.rate_class = lrc::rate_class_from_string(rate_class);
    pred.params = {r, s, rho, lambda_max, sigma2, level};
    *out = lrc::predicted_level(pred, n);
  });
}

}  // extern "C"
