#pragma once

#include "pelm/config.hpp"
#include "pelm/features.hpp"
#include "pelm/model_io.hpp"
#include "pelm/readout.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pelm {

/// Noise-stream offset of test rows; train row i uses stream i.
inline constexpr std::uint64_t kTestNoiseStream = std::uint64_t{1} << 40;

/// Train/test splits ready for the optical pipeline, plus what is needed to
/// map new files the same way.
struct PreparedData {
  Dataset train;
  Dataset test;
  std::optional<CategoryCodebook> codebook; ///< csv only
  std::optional<MinMaxScaler> load_scaler;  ///< csv only
  std::optional<MinMaxScaler> train_scaler; ///< when normalizing
  std::size_t unknown_categories = 0;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Layout, embedding, operator and detector for `config`. i_sat is taken
/// from `i_sat` when given, else from the config, else calibrated on
/// `calibration` (the training samples).
Pipeline build_pipeline(const ExperimentConfig& config, const RowMatrix* calibration,
                        std::optional<double> i_sat = std::nullopt);

struct LambdaScore {
  double lambda = 0.0;
  double loss = 0.0;
};

struct RunResult {
  std::string axis;   ///< empty for a single run
  double axis_value = 0.0;
  int repeat = 0;
  std::string status = "ok"; ///< "ok" or "failed: <stage>: <message>"
  std::uint64_t config_hash = 0;
  std::uint64_t feature_hash = 0;
  std::uint64_t split_seed = 0;
  std::optional<std::uint64_t> embedding_seed, operator_seed, noise_seed;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  int m_channels = 0;
  double lambda = 0.0;
  double i_sat = 0.0;
  std::vector<LambdaScore> lambda_scores;
  Metrics train;
  std::optional<Metrics> test; ///< absent when n_test = 0
  bool classification = true;
  double seconds_features = 0.0;
  double seconds_readout = 0.0;
  double seconds_total = 0.0;

  bool ok() const { return status == "ok"; }
  /// 1 - accuracy for classification, nrmsd for regression.
  double test_score() const;
  double train_score() const;
};

/// Precomputed or cached feature matrices for one pipeline.
struct FeatureSplits {
  FeatureMatrix train;
  FeatureMatrix test;
};

struct RunArtifacts {
  std::optional<ReadoutModel> model;
  std::optional<FeatureSplits> features; ///< filled when the run kept them in memory
  Pipeline pipeline;
  Matrix test_predictions;
};

struct RunOptions {
  /// Use these instead of propagating (must match the feature hash).
  const FeatureSplits* cached = nullptr;
  /// Keep features in RunArtifacts even when they exceed the memory budget.
  bool keep_features = false;
};

/// Full pipeline on prepared data. Component errors propagate as pelm::Error
/// with the failing stage prefixed to the message.
RunResult run_experiment(const ExperimentConfig& config, const PreparedData& data, RunArtifacts* artifacts = nullptr,
                         const RunOptions& options = {});
/// Loads data, runs, and writes the outputs requested in config.output.
RunResult run_experiment(const ExperimentConfig& config);

/// Replays a saved model on `data` (already mapped to [0,1]); the stored
/// i_sat is reused and the pipeline hash must match the model.
RunResult evaluate_saved(const ModelFile& model, const Dataset& data, int threads, Matrix* predictions = nullptr);

/// Maps a new file through the model's stored codebook and scalers.
Dataset load_for_model(const ModelFile& model, const std::filesystem::path& path,
                       const std::filesystem::path& labels_path = {});

enum class SweepAxis { rho, rho_pi, correlation_length, n_frequencies, m_channels, i_sat, lambda };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

struct SweepSpec {
  ExperimentConfig base;
  SweepAxis axis = SweepAxis::rho;
  std::vector<double> values;
  int repeats = 1;

  void validate() const;
};

SweepSpec parse_sweep(const std::string& json_text, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep(const std::filesystem::path& path);

/// Config of one sweep cell: the axis value applied, and for repeat r > 0 every
/// embedding/operator/noise seed replaced by mix_seed(seed, r).
ExperimentConfig sweep_cell(const SweepSpec& spec, double value, int repeat);

struct SummaryRow {
  std::string axis;
  double value = 0.0;
  int n = 0;      ///< successful repeats
  int failed = 0;
  double test_mean = 0.0, test_std = 0.0;
  double train_mean = 0.0, train_std = 0.0;
  double rmsd_mean = 0.0, rmsd_std = 0.0;
};

struct SweepReport {
  std::string name;
  std::string axis;
  std::vector<RunResult> runs;
  std::vector<SummaryRow> summary;
};

using ProgressFn = std::function<void(const RunResult&)>;

/// One run per (value, repeat), value-major. Failed cells are recorded and
/// the sweep continues. Lambda sweeps reuse the features of each repeat.
SweepReport run_sweep(const SweepSpec& spec, const ProgressFn& progress = {});
SweepReport run_sweep(const SweepSpec& spec, const PreparedData& data, const ProgressFn& progress = {});

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs);

} // namespace pelm
