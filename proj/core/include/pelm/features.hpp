#pragma once

#include "pelm/detection.hpp"
#include "pelm/encoder.hpp"
#include "pelm/propagation.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>

namespace pelm {

/// Everything between a data sample and its feature row.
struct Pipeline {
  EncoderConfig encoder;
  EmbeddingMatrix embedding;
  TransferOperator op;
  DetectorConfig detector;
  /// Resolved saturation intensity used by detect().
  double i_sat = 0.0;
  std::uint64_t config_hash = 0;

  int n_channels() const { return detector.channels.m_channels; }
  /// Grid sizes agree across stages; i_sat resolved.
  void validate() const;
};

/// Feature row of one sample; `index` selects its detector noise stream.
Vector sample_features(const Pipeline& pipeline, std::span<const double> sample, std::uint64_t index);

/// exposure * median cell intensity inside the channel region, over the first
/// calibration_samples rows of `samples`.
double calibrate_exposure(const Pipeline& pipeline, const RowMatrix& samples, int threads = 1);

struct FeatureMatrix {
  RowMatrix values;
  std::uint64_t config_hash = 0;
};

/// Rows of `samples`, row i using noise stream stream_offset + i.
FeatureMatrix build_features(const RowMatrix& samples, const Pipeline& pipeline, int threads = 1,
                             std::uint64_t stream_offset = 0);

/// Binary: "PELMFEAT", uint32 version, uint64 N, uint64 M, uint64 hash, then
/// N*M little-endian doubles row-major. Text: first line
/// "# pelm-features N M <hash hex>", then one comma-separated row per line.
void write_features(const std::filesystem::path& path, const FeatureMatrix& features, bool binary = true);
FeatureMatrix read_features(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

} // namespace pelm
