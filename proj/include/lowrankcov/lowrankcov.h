#ifndef LOWRANKCOV_LOWRANKCOV_H
#define LOWRANKCOV_LOWRANKCOV_H

#include <stddef.h>
#include <stdint.h>

#if defined(LRC_BUILDING_LIBRARY)
#define LRC_API __attribute__((visibility("default")))
#else
#define LRC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/*
 * C interface to the lowrankcov library.
 *
 * Every fallible call returns an lrc_status. On failure a message is kept in
 * thread-local storage and can be read with lrc_last_error() until the next
 * failing call on the same thread. Handles are opaque and owned by the
 * caller; release them with the matching *_free function (NULL is accepted).
 * Strings returned through char** are released with lrc_string_free.
 */

typedef enum lrc_status {
  LRC_OK = 0,
  LRC_ERR_ARGUMENT = 1,          /* null pointer or invalid parameter */
  LRC_ERR_CONFIG = 2,            /* config validation; message names the field */
  LRC_ERR_FAILURE_THRESHOLD = 3, /* more than 1% of replications failed */
  LRC_ERR_NUMERICAL = 4,
  LRC_ERR_IO = 5,
  LRC_ERR_BOUNDS = 6,
  LRC_ERR_DOMAIN = 7,
  LRC_ERR_INTERNAL = 99
} lrc_status;

typedef struct lrc_model lrc_model;     /* kernel K plus noise level sigma */
typedef struct lrc_samples lrc_samples; /* n x l coefficient matrix with seed record */
typedef struct lrc_matrix lrc_matrix;   /* symmetric l x l kernel coefficient matrix */

LRC_API const char* lrc_version(void);
LRC_API const char* lrc_last_error(void);
LRC_API const char* lrc_status_name(lrc_status status);
LRC_API void lrc_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

/* Reads the `model` table of a YAML or JSON config. cell_level is the level
 * used by a hard kernel declared with `l: cell`; pass 0 otherwise. */
LRC_API lrc_status lrc_model_load(const char* config_path, int cell_level, lrc_model** out);
/* Kernel from a kernel JSON file. */
LRC_API lrc_status lrc_model_from_kernel_file(const char* kernel_path, double sigma, lrc_model** out);
LRC_API lrc_status lrc_model_hard(int l, double s, double lambda_max, double sigma, lrc_model** out);
LRC_API lrc_status lrc_model_zero(int l_max, double sigma, lrc_model** out);
LRC_API void lrc_model_free(lrc_model* model);

LRC_API int lrc_model_rank(const lrc_model* model);
LRC_API int lrc_model_l_max(const lrc_model* model);
LRC_API double lrc_model_sigma(const lrc_model* model);
LRC_API double lrc_model_lambda_max(const lrc_model* model);
LRC_API lrc_status lrc_model_save_kernel(const lrc_model* model, const char* path);
LRC_API lrc_status lrc_model_eval_kernel(const lrc_model* model, double t, double u, double* out);
LRC_API lrc_status lrc_model_sobolev_norm(const lrc_model* model, double s, double* out);
LRC_API lrc_status lrc_model_projection_bias2(const lrc_model* model, int l, double* out);
LRC_API lrc_status lrc_exact_empirical_risk(const lrc_model* model, int l, int n, double* out);
LRC_API lrc_status lrc_lower_bound_empirical(const lrc_model* model, int l, int n, double* out);

/* ---- samples --------------------------------------------------------- */

typedef enum lrc_sampler { LRC_SAMPLER_COEFFICIENTS = 0, LRC_SAMPLER_PATHS = 1 } lrc_sampler;

typedef enum lrc_format { LRC_FORMAT_CSV = 0, LRC_FORMAT_JSON = 1 } lrc_format;

/* n trajectories truncated at level l from substream `stream` of `seed`.
 * grid_size is used by the path sampler only (>= 256). */
LRC_API lrc_status lrc_simulate(const lrc_model* model, int n, int l, uint64_t seed, uint64_t stream,
                                lrc_sampler sampler, int grid_size, lrc_samples** out);
/* One trajectory observed up to `horizon` coefficients (may exceed l_max);
 * stored as a 1 x horizon sample set. */
LRC_API lrc_status lrc_simulate_trajectory(const lrc_model* model, int horizon, uint64_t seed,
                                           uint64_t stream, lrc_samples** out);
/* Row-major n x l copy of `data`. */
LRC_API lrc_status lrc_samples_from_array(const double* data, int n, int l, lrc_samples** out);
/* CSV (with JSON sidecar) or a single JSON document, chosen by extension. */
LRC_API lrc_status lrc_samples_load(const char* path, lrc_samples** out);
/* model may be NULL; it only fills the model hash in the seed record. */
LRC_API lrc_status lrc_samples_save(const lrc_samples* samples, const lrc_model* model, const char* path,
                                    lrc_format format);
LRC_API void lrc_samples_free(lrc_samples* samples);
LRC_API int lrc_samples_n(const lrc_samples* samples);
LRC_API int lrc_samples_level(const lrc_samples* samples);
LRC_API lrc_status lrc_samples_get(const lrc_samples* samples, int row, int col, double* out);

/* ---- estimation ------------------------------------------------------ */

typedef enum lrc_estimator_kind {
  LRC_ESTIMATOR_EMPIRICAL = 0, /* R_n */
  LRC_ESTIMATOR_CORRECTED = 1, /* R_n - sigma^2 I */
  LRC_ESTIMATOR_NUCLEAR = 2    /* nuclear-norm penalised */
} lrc_estimator_kind;

typedef struct lrc_estimate_options {
  lrc_estimator_kind kind;
  int level;       /* 0: all columns of the samples */
  double sigma2;   /* noise variance, must be set except for EMPIRICAL */
  double mu;       /* >= 0: fixed penalty; < 0: tuning rule */
  double c;        /* tuning constant */
  double t;        /* confidence parameter; < 0 means log n */
  double scale;    /* lambda_max + sigma^2; <= 0 means top eigenvalue of R_n */
} lrc_estimate_options;

LRC_API void lrc_estimate_options_init(lrc_estimate_options* options);

/* mu_out (nullable) receives the penalty used by the nuclear estimator. */
LRC_API lrc_status lrc_estimate(const lrc_samples* samples, const lrc_estimate_options* options,
                                lrc_matrix** out, double* mu_out);

typedef struct lrc_select_options {
  int max_level;        /* L; candidates are 1..L */
  int fit_second_half;  /* nonzero: fit on the second half, score on the first */
  lrc_estimate_options estimator; /* level is ignored; kind must be NUCLEAR */
} lrc_select_options;

LRC_API void lrc_select_options_init(lrc_select_options* options);

/* scores (nullable) must hold max_level doubles; estimate (nullable)
 * receives the selected fit. */
LRC_API lrc_status lrc_select(const lrc_samples* samples, const lrc_select_options* options, int* level_out,
                              double* scores, lrc_matrix** estimate);

/* Mean of squared coefficients offset+1 .. offset+window. */
LRC_API lrc_status lrc_estimate_sigma2(const double* coeffs, size_t count, int offset, int window, double* out);

LRC_API void lrc_matrix_free(lrc_matrix* matrix);
LRC_API int lrc_matrix_level(const lrc_matrix* matrix);
LRC_API lrc_status lrc_matrix_get(const lrc_matrix* matrix, int row, int col, double* out);
LRC_API lrc_status lrc_matrix_to_json(const lrc_matrix* matrix, char** out);
LRC_API lrc_status lrc_matrix_load(const char* path, lrc_matrix** out);
LRC_API lrc_status lrc_matrix_save(const lrc_matrix* matrix, const char* path);
/* Squared L2 distance between the kernel of `matrix` and the true kernel. */
LRC_API lrc_status lrc_matrix_l2_risk(const lrc_matrix* matrix, const lrc_model* model, double* out);

/* ---- experiments ----------------------------------------------------- */

/* Runs a bench config and writes its outputs under out_dir. seed_override
 * (nullable) replaces the config seed. workers >= 1. The risk CSV and the
 * manifest are always written; LRC_FORMAT_JSON adds risks.json. */
LRC_API lrc_status lrc_bench_run(const char* config_path, const char* out_dir, int workers,
                                 const uint64_t* seed_override, lrc_format format);

/* Fits log-log rates over a bench risk CSV; writes rates.json and rates.svg,
 * plus rates.csv with LRC_FORMAT_CSV. axis_l nonzero fits against l instead
 * of n. report_json (nullable) receives the rates report. */
LRC_API lrc_status lrc_rates_run(const char* risks_csv, const char* out_dir, int axis_l, lrc_format format,
                                 char** report_json);

LRC_API lrc_status lrc_fit_rate(const double* x, const double* y, size_t count, double* slope, double* intercept,
                                double* r2);

/* rate_class: "finite_rank", "sobolev_ball" or "sobolev_eigen". */
LRC_API lrc_status lrc_predicted_level(const char* rate_class, int r, double s, double rho, double lambda_max,
                                       double sigma2, int level, int n, int* out);

#ifdef __cplusplus
}
#endif

#endif
