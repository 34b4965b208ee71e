#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowrankcov/kernel.hpp"
#include "lowrankcov/simulation.hpp"

namespace lrc {

/// Shortest-safe text for CSV output: 17 significant digits.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Kernel specs: {rank, eigenvalues[], eigvec_coeffs[][], l_max, basis}.
nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& doc);
KernelSpec load_kernel(const std::filesystem::path& path);
void save_kernel(const KernelSpec& spec, const std::filesystem::path& path);

// Estimated matrices: {level, entries[][]}.
nlohmann::json matrix_to_json(const SymKernelMatrix& m);
SymKernelMatrix matrix_from_json(const nlohmann::json& doc);

/// SHA-256 of the canonical JSON of (kernel, sigma).
std::string model_hash(const ModelSpec& model);

/// n rows x l columns, no header, 17 significant digits.
std::string samples_to_csv(const SampleSet& samples);
SampleSet samples_from_csv(const std::string& text);

/// Sidecar {seed, stream, derived_seed, model_hash, n, l}.
nlohmann::json samples_sidecar(const SampleSet& samples, const std::string& model_hash);

void save_samples(const SampleSet& samples, const std::filesystem::path& csv_path,
                  const std::string& model_hash);
/// Reads the CSV and, when present next to it, the JSON sidecar.
SampleSet load_samples(const std::filesystem::path& csv_path);

/// Sidecar path for a CSV file: foo.csv -> foo.json.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Splits one RFC-4180 line (quoted fields allowed, no embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

}  // namespace lrc
