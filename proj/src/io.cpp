#include "lowrankcov/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lowrankcov/digest.hpp"
#include "lowrankcov/errors.hpp"

namespace lrc {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  nlohmann::json doc;
  doc["rank"] = spec.rank();
  doc["l_max"] = spec.l_max();
  doc["basis"] = to_string(spec.basis().kind);
  doc["eigenvalues"] = nlohmann::json::array();
  for (int m = 0; m < spec.rank(); ++m) doc["eigenvalues"].push_back(spec.eigenvalues()(m));
  doc["eigvec_coeffs"] = nlohmann::json::array();
  for (int m = 0; m < spec.rank(); ++m) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < spec.l_max(); ++k) row.push_back(spec.eigvec_coeffs()(m, k));
    doc["eigvec_coeffs"].push_back(std::move(row));
  }
  return doc;
}

KernelSpec kernel_from_json(const nlohmann::json& doc) {
  try {
    const int l_max = doc.at("l_max").get<int>();
    const BasisId basis{basis_kind_from_string(doc.value("basis", std::string("cosine"))), "cosine"};
    const auto& eig = doc.at("eigenvalues");
    const auto& rows = doc.at("eigvec_coeffs");
    const int rank = doc.value("rank", static_cast<int>(eig.size()));
    if (static_cast<int>(eig.size()) != rank || static_cast<int>(rows.size()) != rank) {
      throw DomainError("kernel JSON: rank does not match eigenvalues/eigvec_coeffs");
    }
    if (rank == 0) return KernelSpec::zero(l_max);
    Eigen::VectorXd lambdas(rank);
    Eigen::MatrixXd coeffs(rank, l_max);
    for (int m = 0; m < rank; ++m) {
      lambdas(m) = eig.at(m).get<double>();
      const auto& row = rows.at(m);
      if (static_cast<int>(row.size()) != l_max) {
        throw DomainError("kernel JSON: eigvec_coeffs row " + std::to_string(m) +
                          " does not have l_max entries");
      }
      for (int k = 0; k < l_max; ++k) coeffs(m, k) = row.at(k).get<double>();
    }
    return KernelSpec::from_rows(lambdas, coeffs, basis);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("kernel JSON: ") + e.what());
  }
}

KernelSpec load_kernel(const std::filesystem::path& path) {
  try {
    return kernel_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_kernel(const KernelSpec& spec, const std::filesystem::path& path) {
  write_text_file(path, kernel_to_json(spec).dump(2) + "\n");
}

nlohmann::json matrix_to_json(const SymKernelMatrix& m) {
  nlohmann::json doc;
  doc["level"] = m.level();
  doc["entries"] = nlohmann::json::array();
  for (int j = 0; j < m.level(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.level(); ++k) row.push_back(m(j, k));
    doc["entries"].push_back(std::move(row));
  }
  return doc;
}

SymKernelMatrix matrix_from_json(const nlohmann::json& doc) {
  try {
    const int level = doc.at("level").get<int>();
    const auto& rows = doc.at("entries");
    if (static_cast<int>(rows.size()) != level) throw DomainError("matrix JSON: wrong row count");
    Eigen::MatrixXd e(level, level);
    for (int j = 0; j < level; ++j) {
      if (static_cast<int>(rows.at(j).size()) != level) throw DomainError("matrix JSON: ragged rows");
      for (int k = 0; k < level; ++k) e(j, k) = rows.at(j).at(k).get<double>();
    }
    return SymKernelMatrix(e);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("matrix JSON: ") + e.what());
  }
}

std::string model_hash(const ModelSpec& model) {
  nlohmann::json doc;
  doc["kernel"] = kernel_to_json(model.kernel());
  doc["sigma"] = model.sigma();
  return sha256_hex(doc.dump());
}

std::string samples_to_csv(const SampleSet& samples) {
  std::string out;
  out.reserve(static_cast<std::size_t>(samples.n()) * samples.level() * 24);
  for (int i = 0; i < samples.n(); ++i) {
    for (int k = 0; k < samples.level(); ++k) {
      if (k) out.push_back(',');
      out += format_double(samples.coeffs(i, k));
    }
    out += "\r\n";
  }
  return out;
}

SampleSet samples_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& field : split_csv_line(line)) row.push_back(parse_double(field));
    if (!rows.empty() && row.size() != rows.front().size()) throw IoError("ragged sample CSV");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty sample CSV");
  SampleSet out;
  out.coeffs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      out.coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return out;
}

nlohmann::json samples_sidecar(const SampleSet& samples, const std::string& hash) {
  nlohmann::json doc;
  doc["seed"] = samples.seed.master_seed;
  doc["stream"] = samples.seed.stream;
  doc["derived_seed"] = samples.seed.derived_seed;
  doc["model_hash"] = hash;
  doc["n"] = samples.n();
  doc["l"] = samples.level();
  return doc;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void save_samples(const SampleSet& samples, const std::filesystem::path& csv_path,
                  const std::string& hash) {
  write_text_file(csv_path, samples_to_csv(samples));
  write_text_file(sidecar_path(csv_path), samples_sidecar(samples, hash).dump(2) + "\n");
}

SampleSet load_samples(const std::filesystem::path& csv_path) {
  SampleSet out = samples_from_csv(read_text_file(csv_path));
  const auto side = sidecar_path(csv_path);
  if (std::filesystem::exists(side)) {
    const auto doc = nlohmann::json::parse(read_text_file(side));
    if (doc.value("n", out.n()) != out.n() || doc.value("l", out.level()) != out.level()) {
      throw IoError("sample sidecar dimensions do not match " + csv_path.string());
    }
    out.seed.master_seed = doc.value("seed", std::uint64_t{0});
    out.seed.stream = doc.value("stream", std::uint64_t{0});
    out.seed.derived_seed = doc.value("derived_seed", std::uint64_t{0});
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace lrc
