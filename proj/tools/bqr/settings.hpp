#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bqr/data.hpp"
#include "bqr/experiment.hpp"

namespace bqr::cli {

/// Bad flags, config values or inputs: reported before any work starts.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSettings {
  std::string source;  ///< D1..D6, blobs or csv
  std::size_t n = 0;
  std::uint64_t seed = 0;
  nlohmann::json threshold;  ///< "auto", "none", "median", "p<NN>" or a number
  std::filesystem::path csv;
  std::string label_column;
  std::string latent_column;
  char delimiter = ',';
  std::size_t dims = 2;
  double separation = 0.5;
  double spread = 0.15;
};

struct SplitSettings {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  std::size_t n_train = 0;  ///< 0: use train_fraction
};

/// A fully resolved and validated run configuration.
struct Settings {
  nlohmann::json doc;  ///< the resolved config, as hashed
  std::string hash;
  DatasetSettings data;
  SplitSettings split;
  ModelConfig model;
  TrainConfig train;
  std::vector<double> fractions;
  std::uint64_t noise_seed = 0;
  double target = 0.95;
  double bandwidth = 0.1;
  double pi_level = 0.5;
};

nlohmann::json default_config();

/// defaults <- config file <- flag overrides, then validated.
Settings resolve(const std::optional<std::filesystem::path>& config_file,
                 const nlohmann::json& overrides);

/// Stable 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

struct PreparedData {
  LabeledDataset train;
  LabeledDataset test;
  std::optional<FeatureScaling> scaling;
};

/// Whole dataset, thresholded, features unscaled for CSV sources.
LabeledDataset load_dataset(const DatasetSettings& data);

/// Seeded split; CSV features are scaled with a map fitted on the train part.
PreparedData prepare(const Settings& s);

nlohmann::json scaling_to_json(const FeatureScaling& sc);
std::optional<FeatureScaling> scaling_from_json(const nlohmann::json& metadata);

}  // namespace bqr::cli
