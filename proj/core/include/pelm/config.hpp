#pragma once

#include "pelm/dataset.hpp"
#include "pelm/encoder.hpp"
#include "pelm/propagation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pelm {

enum class Profile { numerical, hardware_faithful };
enum class DatasetKind { mnist, csv };
enum class LayoutKind { image, blocks };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::mnist;
  /// Relative paths below resolve against root; root resolves against the
  /// directory of the config file.
  std::filesystem::path root;
  // mnist: separate train and test files; n_train/n_test are drawn from each
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  // csv: one file split into n_train + n_test
  std::filesystem::path path;
  std::string schema_name; ///< mushroom_uci | mushroom_class_last | abalone | custom
  Schema schema;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  std::optional<std::uint64_t> split_seed;
  bool stratified = false;
  /// Refit min-max scaling on the train split (csv default true, mnist false).
  std::optional<bool> normalize;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

struct LayoutSpec {
  LayoutKind kind = LayoutKind::image;
  int grid_side = 128;
  int cell = 4;          ///< image: cells per pixel side
  int image_rows = 28;
  int image_cols = 28;
  double pad_phase = 0.0;
};

struct DetectorSpec {
  std::optional<double> i_sat; ///< empty means auto-exposure
  double exposure = 1.0;
  int calibration_samples = 256;
  bool linear = false;
  double noise_sigma = 0.0;
  std::optional<std::uint64_t> noise_seed;
  std::optional<int> readout_levels;
  int channels = 1600;
  int bin = 2;
};

struct ReadoutSpec {
  std::optional<double> lambda; ///< fixed lambda; otherwise grid search
  std::vector<double> lambda_grid;
  double validation_fraction = 0.1;
};

struct OutputSpec {
  std::filesystem::path dir;
  std::filesystem::path model;
  std::filesystem::path features; ///< prefix; writes <prefix>.train.feat / .test.feat
  bool binary_features = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Profile profile = Profile::numerical;
  DatasetSpec dataset;
  LayoutSpec layout;
  double phase_scale = kPi;
  std::optional<int> phase_levels;
  EmbeddingSpec embedding;
  std::optional<std::uint64_t> embedding_seed;
  OperatorSpec op;
  std::optional<std::uint64_t> operator_seed;
  DetectorSpec detector;
  ReadoutSpec readout;
  int threads = 0;
  /// Train features are kept in memory up to this size, otherwise recomputed.
  std::size_t memory_budget_mb = 1024;
  OutputSpec output;

  /// Profile defaults applied to unset quantization fields.
  int effective_phase_levels() const;
  int effective_readout_levels() const;
  bool effective_normalize() const;

  /// Range checks and the explicit-seed rule. Throws config errors.
  void validate() const;
};

/// Parses the JSON config format. Relative dataset roots resolve against
/// `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, every field present).
std::string to_json(const ExperimentConfig& config, bool pretty = false);

/// Hash of everything that influences the feature matrices.
std::uint64_t feature_hash(const ExperimentConfig& config);
/// Hash of everything that influences the reported metrics.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hash_hex(std::uint64_t h);

/// Sets one field by dotted path, e.g. "embedding.rho" = "1.57". Values are
/// parsed as JSON, falling back to a plain string.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Names used in the JSON format.
std::string profile_name(Profile p);
std::string embedding_kind_name(EmbeddingKind k);
std::string operator_kind_name(OperatorKind k);

} // namespace pelm
