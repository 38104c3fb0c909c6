#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asbart/feature_matrix.hpp"
#include "asbart/sampler.hpp"
#include "asbart/schema.hpp"

namespace asbart {

// Raw dataset: ordinal cells as reals, categorical cells as level indices.
struct Dataset {
  DatasetSchema schema;
  FeatureMatrix x;
  std::vector<double> y;  // empty when the file had no target column
  bool has_target = false;
};

enum class TargetPolicy { required, optional };

/// Schema document: {"target": "y", "columns": [{"name": "x1", "kind": "ordinal"},
/// {"name": "c", "kind": "categorical", "levels": ["a", "b"]}]}
DatasetSchema load_schema(const std::filesystem::path& path);
DatasetSchema parse_schema(std::string_view json_text);
std::string schema_to_json(const DatasetSchema& schema);
/// Treats every header column other than `target` as ordinal.
DatasetSchema infer_schema(const std::filesystem::path& csv_path, const std::string& target);

/// Reads a comma-separated file with a header row. Columns are matched by
/// name; unknown columns are ignored with a warning.
Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema,
                 TargetPolicy target = TargetPolicy::required);
Dataset parse_csv(std::string_view text, const DatasetSchema& schema, TargetPolicy target = TargetPolicy::required,
                  std::string_view source = "<memory>");
void write_csv(const Dataset& data, const std::filesystem::path& path);

struct Design {
  FeatureMatrix x;
  std::vector<FeatureInfo> features;
};

/// One-hot (full, L columns per L-level categorical) expansion. Ordinal
/// columns pass through unchanged.
Design expand_dummies(const Dataset& data);
/// Feature layout expand_dummies produces for `schema`.
std::vector<FeatureInfo> expanded_features(const DatasetSchema& schema);

enum class NoiseLevel { high, low };
NoiseLevel parse_noise_level(std::string_view name);

struct FriedmanSpec {
  std::size_t n = 1000;
  std::size_t p = 20;
  NoiseLevel noise = NoiseLevel::high;
  std::uint64_t seed = 0;
};

struct FriedmanData {
  Dataset data;
  std::vector<double> truth;  // noiseless f(x)
};

/// 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5.
double friedman_function(std::span<const double> x);
/// x ~ U(-2, 2)^p; high noise adds N(0, sample variance of f), low noise N(0, 1).
FriedmanData gen_friedman(const FriedmanSpec& spec);

double rmse(std::span<const double> predicted, std::span<const double> truth);

inline constexpr int kModelFormatVersion = 1;

/// Versioned, line-sectioned text document (see docs/model_format.md).
std::string serialize_model(const FittedModel& model);
FittedModel parse_model(std::string_view text);
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace asbart

namespace asbart {

/// Expands dummies, fits, and attaches the raw schema to the model.
FittedModel fit_dataset(const Dataset& data, const FitConfig& config);
/// Design matrix of `data` in the model's training layout; throws a schema
/// error when the raw schemas disagree.
FeatureMatrix model_design(const FittedModel& model, const Dataset& data);

}  // namespace asbart
