#pragma once

#include "pelm/config.hpp"
#include "pelm/readout.hpp"

#include <filesystem>
#include <optional>

namespace pelm {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to replay inference: the experiment config (with all
/// seeds), the resolved saturation intensity, the readout weights, and the
/// categorical/scaling maps for delimited-text data.
struct ModelFile {
  ExperimentConfig config;
  ReadoutModel readout;
  double i_sat = 0.0;
  Task task;
  std::vector<std::string> class_names;
  std::optional<CategoryCodebook> codebook;
  std::optional<MinMaxScaler> load_scaler;
  std::optional<MinMaxScaler> train_scaler;
  std::uint64_t feature_hash = 0;
  std::uint64_t config_hash = 0;
};

/// JSON document {"format": "pelm-model", "version": 1, ...}; doubles are
/// written in shortest round-trip form so a reload is bit-exact.
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

} // namespace pelm
