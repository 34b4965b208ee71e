#include "lowrankcov/experiment_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <random>
#include <set>

#include <yaml-cpp/yaml.h>

#include "lowrankcov/digest.hpp"
#include "lowrankcov/errors.hpp"
#include "lowrankcov/io.hpp"

namespace lrc {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Empirical:
      return "empirical";
    case EstimatorKind::Corrected:
      return "corrected";
    case EstimatorKind::Nuclear:
      return "nuclear";
    case EstimatorKind::Adaptive:
      return "adaptive";
  }
  return "unknown";
}

namespace {

using nlohmann::json;

nlohmann::json scalar_to_json(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "null" || text == "~") return nullptr;
  if (!text.empty() && text.front() != '-') {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return v;
  }
  {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return v;
  }
  {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return v;
  }
  return text;
}

nlohmann::json node_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(node_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = node_to_json(kv.second);
      return out;
    }
  }
  return nullptr;
}

/// Field access with path tracking for error messages.
class Reader {
 public:
  Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {}

  const json& doc() const { return doc_; }
  const std::string& path() const { return path_; }

  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return doc_.is_object() && doc_.contains(key); }

  Reader at(const std::string& key) const {
    if (!has(key)) throw ConfigError(child_path(key), "missing required field");
    return Reader(doc_.at(key), child_path(key));
  }

  Reader index(std::size_t i) const {
    return Reader(doc_.at(i), path_ + "[" + std::to_string(i) + "]");
  }

  double number() const {
    if (!doc_.is_number()) throw ConfigError(path_, "expected a number");
    const double v = doc_.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path_, "expected a finite number");
    return v;
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) throw ConfigError(path_, "must be positive");
    return v;
  }

  std::int64_t integer() const {
    if (!doc_.is_number_integer()) throw ConfigError(path_, "expected an integer");
    if (doc_.is_number_unsigned() &&
        doc_.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ConfigError(path_, "integer out of range");
    }
    return doc_.get<std::int64_t>();
  }

  int positive_int() const {
    const auto v = integer();
    if (v < 1 || v > 1'000'000'000) throw ConfigError(path_, "must be a positive integer");
    return static_cast<int>(v);
  }

  std::string string() const {
    if (!doc_.is_string()) throw ConfigError(path_, "expected a string");
    return doc_.get<std::string>();
  }

  std::vector<int> int_list() const {
    if (!doc_.is_array() || doc_.empty()) throw ConfigError(path_, "expected a nonempty list");
    std::vector<int> out;
    for (std::size_t i = 0; i < doc_.size(); ++i) out.push_back(index(i).positive_int());
    return out;
  }

  void only(std::initializer_list<const char*> keys) const {
    if (!doc_.is_object()) throw ConfigError(path_, "expected a table");
    for (const auto& [key, _] : doc_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        throw ConfigError(child_path(key), "unknown field");
      }
    }
  }

 private:
  const json& doc_;
  std::string path_;
};

KernelSpec random_lowrank(const Eigen::VectorXd& eigenvalues, int l_max, int support,
                          std::uint64_t basis_seed) {
  std::mt19937_64 engine(basis_seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(eigenvalues.size(), l_max);
  for (Eigen::Index m = 0; m < rows.rows(); ++m)
    for (int k = 0; k < support; ++k) rows(m, k) = normal(engine);
  // QR gives an exactly orthonormal set spanning the same rows.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows.leftCols(support).transpose());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(support, rows.rows());
  rows.leftCols(support) = q.transpose();
  return KernelSpec::from_rows(eigenvalues, rows);
}

KernelSource parse_kernel(const Reader& r, const std::filesystem::path& base_dir, json& canonical) {
  KernelSource src;
  const std::string gen = r.at("generator").string();
  if (gen == "zero") {
    r.only({"generator", "l_max"});
    src.generator = KernelSource::Generator::Zero;
    src.l_max = r.at("l_max").positive_int();
    canonical = {{"generator", "zero"}, {"l_max", src.l_max}};
  } else if (gen == "hard") {
    r.only({"generator", "l", "s", "lambda_max"});
    src.generator = KernelSource::Generator::Hard;
    const Reader level = r.at("l");
    if (level.doc().is_string()) {
      if (level.string() != "cell") throw ConfigError(level.path(), "expected an integer or \"cell\"");
    } else {
      src.hard_level = level.positive_int();
    }
    src.s = r.at("s").positive();
    src.lambda_max = r.at("lambda_max").positive();
    canonical = {{"generator", "hard"}, {"s", src.s}, {"lambda_max", src.lambda_max}};
    canonical["l"] = src.hard_level ? json(*src.hard_level) : json("cell");
    if (src.hard_level) src.fixed = make_hard_kernel(*src.hard_level, src.s, src.lambda_max);
  } else if (gen == "lowrank") {
    r.only({"generator", "eigenvalues", "l_max", "support", "basis", "basis_seed"});
    src.generator = KernelSource::Generator::LowRank;
    const Reader eig = r.at("eigenvalues");
    if (!eig.doc().is_array() || eig.doc().empty()) throw ConfigError(eig.path(), "expected a nonempty list");
    Eigen::VectorXd lambdas(static_cast<Eigen::Index>(eig.doc().size()));
    for (std::size_t i = 0; i < eig.doc().size(); ++i) lambdas(static_cast<Eigen::Index>(i)) = eig.index(i).positive();
    const int rank = static_cast<int>(lambdas.size());
    const int l_max = r.at("l_max").positive_int();
    const int support = r.has("support") ? r.at("support").positive_int() : rank;
    if (support < rank || support > l_max) {
      throw ConfigError(r.child_path("support"), "must lie in [rank, l_max]");
    }
    const std::string basis = r.has("basis") ? r.at("basis").string() : "canonical";
    std::uint64_t basis_seed = 0;
    if (basis == "canonical") {
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(rank, l_max);
      for (int m = 0; m < rank; ++m) rows(m, m) = 1.0;
      src.fixed = KernelSpec::from_rows(lambdas, rows);
    } else if (basis == "random") {
      basis_seed = r.has("basis_seed") ? static_cast<std::uint64_t>(r.at("basis_seed").integer()) : 0;
      src.fixed = random_lowrank(lambdas, l_max, support, basis_seed);
    } else {
      throw ConfigError(r.child_path("basis"), "expected \"canonical\" or \"random\"");
    }
    canonical = {{"generator", "inline"}, {"spec", kernel_to_json(*src.fixed)}};
  } else if (gen == "file") {
    r.only({"generator", "path"});
    src.generator = KernelSource::Generator::Inline;
    auto path = std::filesystem::path(r.at("path").string());
    if (path.is_relative()) path = base_dir / path;
    try {
      src.fixed = load_kernel(path);
    } catch (const std::exception& e) {
      throw ConfigError(r.child_path("path"), e.what());
    }
    canonical = {{"generator", "inline"}, {"spec", kernel_to_json(*src.fixed)}};
  } else if (gen == "inline") {
    r.only({"generator", "spec"});
    src.generator = KernelSource::Generator::Inline;
    try {
      src.fixed = kernel_from_json(r.at("spec").doc());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(r.child_path("spec"), e.what());
    }
    canonical = {{"generator", "inline"}, {"spec", kernel_to_json(*src.fixed)}};
  } else {
    throw ConfigError(r.child_path("generator"), "unknown generator '" + gen + "'");
  }
  return src;
}

EstimatorSpec parse_estimator(const Reader& r, json& canonical) {
  r.only({"id", "kind", "mu", "tuning", "scale", "sigma2", "split"});
  EstimatorSpec spec;
  const std::string kind = r.at("kind").string();
  if (kind == "empirical") spec.kind = EstimatorKind::Empirical;
  else if (kind == "corrected") spec.kind = EstimatorKind::Corrected;
  else if (kind == "nuclear") spec.kind = EstimatorKind::Nuclear;
  else if (kind == "adaptive") spec.kind = EstimatorKind::Adaptive;
  else throw ConfigError(r.child_path("kind"), "unknown estimator kind '" + kind + "'");
  spec.id = r.has("id") ? r.at("id").string() : kind;
  if (spec.id.empty()) throw ConfigError(r.child_path("id"), "must be nonempty");
  canonical = {{"id", spec.id}, {"kind", kind}};

  const bool penalised = spec.kind == EstimatorKind::Nuclear || spec.kind == EstimatorKind::Adaptive;
  if (!penalised && (r.has("mu") || r.has("tuning") || r.has("scale") || r.has("split"))) {
    throw ConfigError(r.path(), "mu/tuning/scale/split only apply to nuclear and adaptive estimators");
  }
  if (penalised) {
    if (r.has("mu") && r.has("tuning")) throw ConfigError(r.path(), "give either mu or tuning, not both");
    if (r.has("mu")) {
      const double mu = r.at("mu").number();
      if (mu < 0.0) throw ConfigError(r.child_path("mu"), "must be nonnegative");
      spec.penalty = mu;
      canonical["mu"] = mu;
    } else {
      TuningRule rule;
      json tc = {{"c", rule.c}, {"t", "log_n"}};
      if (r.has("tuning")) {
        const Reader t = r.at("tuning");
        t.only({"c", "t"});
        if (t.has("c")) rule.c = t.at("c").positive();
        if (t.has("t")) {
          const Reader tt = t.at("t");
          if (tt.doc().is_string()) {
            if (tt.string() != "log_n") throw ConfigError(tt.path(), "expected a number or \"log_n\"");
          } else {
            rule.t = tt.positive();
          }
        }
      }
      tc["c"] = rule.c;
      if (rule.t) tc["t"] = *rule.t;
      spec.penalty = rule;
      canonical["tuning"] = tc;
      std::string scale = "plugin";
      if (r.has("scale")) {
        const Reader s = r.at("scale");
        if (s.doc().is_number()) {
          spec.known_scale = s.positive();
          canonical["scale"] = *spec.known_scale;
        } else {
          scale = s.string();
          if (scale == "known") spec.scale_from_model = true;
          else if (scale != "plugin") throw ConfigError(s.path(), "expected \"known\", \"plugin\" or a number");
        }
      }
      if (!canonical.contains("scale")) canonical["scale"] = scale;
    }
    if (spec.kind == EstimatorKind::Adaptive) {
      std::string split = r.has("split") ? r.at("split").string() : "fit_first_half";
      if (split == "fit_first_half") spec.split = SplitPolicy::FitFirstHalf;
      else if (split == "fit_second_half") spec.split = SplitPolicy::FitSecondHalf;
      else throw ConfigError(r.child_path("split"), "expected \"fit_first_half\" or \"fit_second_half\"");
      canonical["split"] = split;
    }
  }
  if (spec.kind != EstimatorKind::Empirical) {
    const std::string s2 = r.has("sigma2") ? r.at("sigma2").string() : "known";
    if (s2 == "estimate") spec.estimate_sigma2 = true;
    else if (s2 != "known") throw ConfigError(r.child_path("sigma2"), "expected \"known\" or \"estimate\"");
    canonical["sigma2"] = s2;
  } else if (r.has("sigma2")) {
    throw ConfigError(r.child_path("sigma2"), "the uncorrected empirical estimator has no sigma2");
  }
  return spec;
}

}  // namespace

KernelSpec KernelSource::build(int cell_level) const {
  switch (generator) {
    case Generator::Zero:
      return KernelSpec::zero(l_max);
    case Generator::Hard:
      if (fixed) return *fixed;
      return make_hard_kernel(cell_level, s, lambda_max);
    case Generator::LowRank:
    case Generator::Inline:
      return *fixed;
  }
  throw ConfigError("model.kernel", "unknown generator");
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical.dump()); }

std::vector<std::pair<int, int>> ExperimentConfig::cells() const {
  std::vector<std::pair<int, int>> out;
  for (int n : n_grid) {
    if (level_rule) {
      out.emplace_back(n, predicted_level(*level_rule, n));
    } else {
      for (int l : l_grid) out.emplace_back(n, l);
    }
  }
  return out;
}

ModelSource parse_model_source(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  const Reader model(doc, "model");
  model.only({"sigma", "kernel"});
  ModelSource out;
  out.sigma = model.at("sigma").positive();
  json kcanon;
  out.kernel = parse_kernel(model.at("kernel"), base_dir, kcanon);
  out.canonical = {{"sigma", out.sigma}, {"kernel", kcanon}};
  return out;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir) {
  const Reader root(doc, "");
  root.only({"model", "estimators", "n_grid", "l_grid", "level_rule", "replications", "seed",
             "sampler", "noise", "outputs"});
  ExperimentConfig cfg;
  json& canon = cfg.canonical;
  canon = json::object();

  if (!root.has("model")) throw ConfigError("model", "missing required field");
  ModelSource model = parse_model_source(doc.at("model"), base_dir);
  cfg.sigma = model.sigma;
  cfg.kernel = std::move(model.kernel);
  canon["model"] = std::move(model.canonical);

  const Reader ests = root.at("estimators");
  if (!ests.doc().is_array() || ests.doc().empty()) throw ConfigError("estimators", "expected a nonempty list");
  canon["estimators"] = json::array();
  std::set<std::string> ids;
  for (std::size_t i = 0; i < ests.doc().size(); ++i) {
    json ec;
    cfg.estimators.push_back(parse_estimator(ests.index(i), ec));
    if (!ids.insert(cfg.estimators.back().id).second) {
      throw ConfigError(ests.index(i).child_path("id"), "duplicate estimator id");
    }
    canon["estimators"].push_back(std::move(ec));
  }

  cfg.n_grid = root.at("n_grid").int_list();
  canon["n_grid"] = cfg.n_grid;
  if (root.has("level_rule")) {
    if (root.has("l_grid")) throw ConfigError("l_grid", "give either l_grid or level_rule, not both");
    const Reader lr = root.at("level_rule");
    lr.only({"class", "s", "r", "rho", "lambda_max", "sigma2", "level"});
    RatePrediction pred;
    try {
      pred.rate_class = rate_class_from_string(lr.at("class").string());
    } catch (const DomainError& e) {
      throw ConfigError(lr.child_path("class"), e.what());
    }
    if (lr.has("s")) pred.params.s = lr.at("s").positive();
    if (lr.has("r")) pred.params.r = lr.at("r").positive_int();
    if (lr.has("rho")) pred.params.rho = lr.at("rho").positive();
    if (lr.has("lambda_max")) pred.params.lambda_max = lr.at("lambda_max").positive();
    if (lr.has("sigma2")) pred.params.sigma2 = lr.at("sigma2").positive();
    if (lr.has("level")) pred.params.level = lr.at("level").positive_int();
    cfg.level_rule = pred;
    canon["level_rule"] = {{"class", to_string(pred.rate_class)}, {"s", pred.params.s},
                           {"r", pred.params.r}, {"rho", pred.params.rho},
                           {"lambda_max", pred.params.lambda_max}, {"sigma2", pred.params.sigma2},
                           {"level", pred.params.level}};
  } else {
    cfg.l_grid = root.at("l_grid").int_list();
    canon["l_grid"] = cfg.l_grid;
  }

  cfg.replications = root.at("replications").positive_int();
  canon["replications"] = cfg.replications;
  const Reader seed = root.at("seed");
  if (!seed.doc().is_number_unsigned() &&
      !(seed.doc().is_number_integer() && seed.doc().get<std::int64_t>() >= 0)) {
    throw ConfigError("seed", "expected a nonnegative integer");
  }
  cfg.seed = seed.doc().get<std::uint64_t>();
  canon["seed"] = cfg.seed;

  canon["sampler"] = {{"kind", "coefficients"}};
  if (root.has("sampler")) {
    const Reader s = root.at("sampler");
    s.only({"kind", "grid_size"});
    const std::string kind = s.at("kind").string();
    if (kind == "paths") {
      cfg.sampler = SamplerKind::Paths;
      if (s.has("grid_size")) cfg.grid_size = s.at("grid_size").positive_int();
      if (cfg.grid_size < 256) throw ConfigError(s.child_path("grid_size"), "must be >= 256");
      canon["sampler"] = {{"kind", "paths"}, {"grid_size", cfg.grid_size}};
    } else if (kind != "coefficients") {
      throw ConfigError(s.child_path("kind"), "expected \"coefficients\" or \"paths\"");
    }
  }

  canon["noise"] = {{"offset", "l_max"}, {"window", cfg.noise_window}};
  if (root.has("noise")) {
    const Reader nz = root.at("noise");
    nz.only({"offset", "window"});
    if (nz.has("offset") && nz.at("offset").doc().is_string()) {
      if (nz.at("offset").string() != "l_max") {
        throw ConfigError(nz.child_path("offset"), "expected an integer or \"l_max\"");
      }
    } else if (nz.has("offset")) {
      const auto off = nz.at("offset").integer();
      if (off < 0) throw ConfigError(nz.child_path("offset"), "must be nonnegative");
      cfg.noise_offset = static_cast<int>(off);
      canon["noise"]["offset"] = *cfg.noise_offset;
    }
    if (nz.has("window")) cfg.noise_window = nz.at("window").positive_int();
    canon["noise"]["window"] = cfg.noise_window;
  }

  if (root.has("outputs")) {
    const Reader o = root.at("outputs");
    o.only({"risks", "selections", "manifest"});
    if (o.has("risks")) cfg.risks_file = o.at("risks").string();
    if (o.has("selections")) cfg.selections_file = o.at("selections").string();
    if (o.has("manifest")) cfg.manifest_file = o.at("manifest").string();
    for (const auto* name : {&cfg.risks_file, &cfg.selections_file, &cfg.manifest_file}) {
      const std::filesystem::path p(*name);
      if (p.empty() || p.is_absolute() || p.has_parent_path()) {
        throw ConfigError("outputs", "output names must be plain file names under --out");
      }
    }
  }
  canon["outputs"] = {{"risks", cfg.risks_file}, {"selections", cfg.selections_file},
                      {"manifest", cfg.manifest_file}};

  // Levels must fit inside the kernel representation.
  for (const auto& [n, l] : cfg.cells()) {
    const KernelSpec k = cfg.kernel.build(l);
    if (l > k.l_max()) {
      throw ConfigError(cfg.level_rule ? "level_rule" : "l_grid",
                        "level " + std::to_string(l) + " exceeds kernel l_max " + std::to_string(k.l_max()));
    }
    for (const auto& e : cfg.estimators) {
      if (e.kind == EstimatorKind::Adaptive && l > n / 2) {
        throw ConfigError("estimators", "adaptive selector needs L <= n/2 (n=" + std::to_string(n) +
                                            ", L=" + std::to_string(l) + ")");
      }
    }
  }
  return cfg;
}

nlohmann::json yaml_to_json(const std::string& text) {
  try {
    return node_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("cannot parse config: ") + e.what());
  }
}

namespace {

json load_config_document(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError("", e.what());
  }
  json doc = yaml_to_json(text);
  if (doc.is_object() && doc.contains("config") && doc.contains("config_hash")) doc = doc["config"];
  return doc;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(load_config_document(path), path.parent_path());
}

ModelSource load_model_source(const std::filesystem::path& path) {
  const json doc = load_config_document(path);
  if (!doc.is_object() || !doc.contains("model")) throw ConfigError("model", "missing required field");
  return parse_model_source(doc.at("model"), path.parent_path());
}

}  // namespace lrc
