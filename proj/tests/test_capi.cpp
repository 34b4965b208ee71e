#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lowrankcov/lowrankcov.h"

namespace fs = std::filesystem;

namespace {

struct ModelHandle {
  lrc_model* p = nullptr;
  ~ModelHandle() { lrc_model_free(p); }
};
struct SamplesHandle {
  lrc_samples* p = nullptr;
  ~SamplesHandle() { lrc_samples_free(p); }
};
struct MatrixHandle {
  lrc_matrix* p = nullptr;
  ~MatrixHandle() { lrc_matrix_free(p); }
};

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(lrc_version(), "0.1.0");
  EXPECT_STREQ(lrc_status_name(LRC_OK), "ok");
  EXPECT_STRNE(lrc_status_name(LRC_ERR_CONFIG), lrc_status_name(LRC_ERR_IO));
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(lrc_model_zero(3, 1.0, nullptr), LRC_ERR_ARGUMENT);
  EXPECT_NE(std::string(lrc_last_error()), "");
  double v = 0.0;
  EXPECT_EQ(lrc_exact_empirical_risk(nullptr, 1, 1, &v), LRC_ERR_ARGUMENT);
  lrc_model_free(nullptr);
  lrc_samples_free(nullptr);
  lrc_matrix_free(nullptr);
}

TEST(CApi, DomainAndBoundsErrors) {
  ModelHandle m;
  EXPECT_EQ(lrc_model_zero(3, -1.0, &m.p), LRC_ERR_DOMAIN);
  EXPECT_EQ(m.p, nullptr);
  ASSERT_EQ(lrc_model_zero(3, 1.0, &m.p), LRC_OK);
  SamplesHandle s;
  EXPECT_EQ(lrc_simulate(m.p, 10, 4, 1, 0, LRC_SAMPLER_COEFFICIENTS, 0, &s.p), LRC_ERR_BOUNDS);
  EXPECT_EQ(lrc_simulate(m.p, 10, 3, 1, 0, LRC_SAMPLER_PATHS, 100, &s.p), LRC_ERR_DOMAIN);
  EXPECT_NE(std::string(lrc_last_error()).find("256"), std::string::npos);
}

TEST(CApi, ExactRiskExample) {
  ModelHandle m;
  ASSERT_EQ(lrc_model_zero(5, 1.0, &m.p), LRC_OK);
  double risk = 0.0;
  ASSERT_EQ(lrc_exact_empirical_risk(m.p, 5, 200, &risk), LRC_OK);
  EXPECT_NEAR(risk, 0.15, 1e-15);
}

TEST(CApi, SimulateEstimateRoundTrip) {
  ModelHandle m;
  ASSERT_EQ(lrc_model_hard(4, 1.0, 1.0, 1.0, &m.p), LRC_OK);
  EXPECT_EQ(lrc_model_l_max(m.p), 8);
  SamplesHandle s;
  ASSERT_EQ(lrc_simulate(m.p, 300, 6, 42, 0, LRC_SAMPLER_COEFFICIENTS, 0, &s.p), LRC_OK);
  EXPECT_EQ(lrc_samples_n(s.p), 300);
  EXPECT_EQ(lrc_samples_level(s.p), 6);

  lrc_estimate_options opts;
  lrc_estimate_options_init(&opts);
  opts.kind = LRC_ESTIMATOR_NUCLEAR;
  opts.sigma2 = 1.0;
  opts.mu = 1000.0;
  MatrixHandle zero;
  double mu = 0.0;
  ASSERT_EQ(lrc_estimate(s.p, &opts, &zero.p, &mu), LRC_OK);
  EXPECT_EQ(mu, 1000.0);
  for (int j = 0; j < 6; ++j) {
    for (int k = 0; k < 6; ++k) {
      double v = 1.0;
      ASSERT_EQ(lrc_matrix_get(zero.p, j, k, &v), LRC_OK);
      EXPECT_EQ(v, 0.0);
    }
  }
  double dummy;
  EXPECT_EQ(lrc_matrix_get(zero.p, 6, 0, &dummy), LRC_ERR_BOUNDS);

  opts.mu = -1.0;
  opts.level = 3;
  MatrixHandle fit;
  ASSERT_EQ(lrc_estimate(s.p, &opts, &fit.p, &mu), LRC_OK);
  EXPECT_EQ(lrc_matrix_level(fit.p), 3);
  EXPECT_GT(mu, 0.0);
  double risk = -1.0;
  ASSERT_EQ(lrc_matrix_l2_risk(fit.p, m.p, &risk), LRC_OK);
  EXPECT_TRUE(std::isfinite(risk));

  opts.kind = LRC_ESTIMATOR_CORRECTED;
  opts.sigma2 = NAN;
  MatrixHandle bad;
  EXPECT_NE(lrc_estimate(s.p, &opts, &bad.p, nullptr), LRC_OK);
}

TEST(CApi, SamplesFromArrayAndSelect) {
  std::vector<double> data(40 * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::sin(0.37 * static_cast<double>(i));
  SamplesHandle s;
  ASSERT_EQ(lrc_samples_from_array(data.data(), 40, 3, &s.p), LRC_OK);
  double v = 0.0;
  ASSERT_EQ(lrc_samples_get(s.p, 1, 2, &v), LRC_OK);
  EXPECT_EQ(v, data[5]);

  lrc_select_options sel;
  lrc_select_options_init(&sel);
  sel.max_level = 3;
  sel.estimator.sigma2 = 1.0;
  int level = 0;
  double scores[3] = {0, 0, 0};
  MatrixHandle chosen;
  ASSERT_EQ(lrc_select(s.p, &sel, &level, scores, &chosen.p), LRC_OK);
  EXPECT_GE(level, 1);
  EXPECT_LE(level, 3);
  for (double sc : scores) EXPECT_GE(sc, scores[level - 1]);
  sel.max_level = 30;
  EXPECT_EQ(lrc_select(s.p, &sel, &level, nullptr, nullptr), LRC_ERR_BOUNDS);
}

TEST(CApi, Sigma2Estimate) {
  const double x[] = {5, 5, 1, 2, 3};
  double v = 0.0;
  ASSERT_EQ(lrc_estimate_sigma2(x, 5, 2, 3, &v), LRC_OK);
  EXPECT_DOUBLE_EQ(v, 14.0 / 3.0);
  EXPECT_EQ(lrc_estimate_sigma2(x, 5, 3, 3, &v), LRC_ERR_BOUNDS);
}

TEST(CApi, FitRateAndPredictedLevel) {
  const double x[] = {1, 2, 4, 8, 16};
  const double y[] = {3, 1.5, 0.75, 0.375, 0.1875};
  double slope = 0, intercept = 0, r2 = 0;
  ASSERT_EQ(lrc_fit_rate(x, y, 5, &slope, &intercept, &r2), LRC_OK);
  EXPECT_NEAR(slope, -1.0, 1e-12);
  EXPECT_EQ(lrc_fit_rate(x, y, 3, &slope, &intercept, &r2), LRC_ERR_DOMAIN);
  int l = 0;
  ASSERT_EQ(lrc_predicted_level("sobolev_eigen", 1, 1.0, 1.0, 1.0, 1.0, 0, 1000, &l), LRC_OK);
  EXPECT_EQ(l, 10);
  EXPECT_NE(lrc_predicted_level("bogus", 1, 1.0, 1.0, 1.0, 1.0, 0, 1000, &l), LRC_OK);
}

TEST(CApi, ConfigErrorsAndBench) {
  const fs::path dir = fs::temp_directory_path() / "lrc_capi_bench";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.yaml") << "model: {sigma: 1}\nwhat: 1\n";
    std::ofstream(dir / "good.yaml") << "model: {sigma: 1.0, kernel: {generator: zero, l_max: 3}}\n"
                                        "estimators: [{kind: corrected}]\n"
                                        "n_grid: [50]\nl_grid: [3]\nreplications: 20\nseed: 1\n";
  }
  EXPECT_EQ(lrc_bench_run((dir / "bad.yaml").c_str(), (dir / "o").c_str(), 1, nullptr, LRC_FORMAT_CSV),
            LRC_ERR_CONFIG);
  EXPECT_EQ(lrc_bench_run((dir / "good.yaml").c_str(), (dir / "o").c_str(), 2, nullptr, LRC_FORMAT_JSON),
            LRC_OK);
  EXPECT_TRUE(fs::exists(dir / "o" / "risks.csv"));
  EXPECT_TRUE(fs::exists(dir / "o" / "risks.json"));
  EXPECT_TRUE(fs::exists(dir / "o" / "manifest.json"));
  ModelHandle m;
  ASSERT_EQ(lrc_model_load((dir / "good.yaml").c_str(), 3, &m.p), LRC_OK);
  EXPECT_EQ(lrc_model_rank(m.p), 0);
  EXPECT_EQ(lrc_model_load((dir / "none.yaml").c_str(), 3, &m.p), LRC_ERR_CONFIG);
  fs::remove_all(dir);
}

TEST(CApi, MatrixJsonAndFiles) {
  const double d[] = {1, 0, 0, 1};
  SamplesHandle s;
  ASSERT_EQ(lrc_samples_from_array(d, 2, 2, &s.p), LRC_OK);
  lrc_estimate_options opts;
  lrc_estimate_options_init(&opts);
  opts.kind = LRC_ESTIMATOR_EMPIRICAL;
  MatrixHandle r;
  ASSERT_EQ(lrc_estimate(s.p, &opts, &r.p, nullptr), LRC_OK);
  char* json = nullptr;
  ASSERT_EQ(lrc_matrix_to_json(r.p, &json), LRC_OK);
  EXPECT_NE(std::string(json).find("\"level\""), std::string::npos);
  lrc_string_free(json);
  const fs::path p = fs::temp_directory_path() / "lrc_capi_matrix.json";
  ASSERT_EQ(lrc_matrix_save(r.p, p.c_str()), LRC_OK);
  MatrixHandle back;
  ASSERT_EQ(lrc_matrix_load(p.c_str(), &back.p), LRC_OK);
  double v = 0.0;
  ASSERT_EQ(lrc_matrix_get(back.p, 0, 0, &v), LRC_OK);
  EXPECT_DOUBLE_EQ(v, 0.5);
  fs::remove(p);
}

}  // namespace
