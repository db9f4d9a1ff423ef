#pragma once

#include "pelm/types.hpp"

#include <cstdint>
#include <random>

namespace pelm {

/// M non-overlapping b x b pixel blocks, row-major in a square arrangement of
/// `per_row` blocks per row, starting at (origin_row, origin_col).
struct ChannelLayout {
  int m_channels = 0;
  int block_side = 1;
  int origin_row = 0;
  int origin_col = 0;
  int per_row = 0;

  /// First M blocks of the centered ceil(sqrt(M)) * b square around the
  /// zero-frequency pixel of a field_side grid.
  static ChannelLayout centered(int m_channels, int block_side, int field_side);

  int roi_side() const { return per_row * block_side; }
  int channel_row(int j) const { return origin_row + (j / per_row) * block_side; }
  int channel_col(int j) const { return origin_col + (j % per_row) * block_side; }

  /// Throws Errc::layout_out_of_bounds when any block leaves the grid.
  void validate(int field_side) const;
};

struct DetectorConfig {
  /// Saturation intensity; 0 requests auto-exposure.
  double i_sat = 0.0;
  /// Auto-exposure sets i_sat = exposure * median cell intensity.
  double exposure = 1.0;
  int calibration_samples = 256;
  /// Linear detector: channel = mean(I) / i_sat, no saturation.
  bool linear = false;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  int readout_levels = 0; ///< 0 means continuous
  ChannelLayout channels;

  void validate(int field_side) const;
};

/// Saturating response I / (I + i_sat).
inline double saturate(double intensity, double i_sat) { return intensity / (intensity + i_sat); }

/// Snaps v in [0,1] to the nearest of `levels` uniform steps (0 = continuous).
double quantize_readout(double v, int levels);

/// Channel values of one propagated field. `i_sat` must be resolved (> 0).
/// `noise` supplies the additive intensity noise when noise_sigma > 0.
Vector detect(const ComplexGrid& field, const DetectorConfig& config, double i_sat, std::mt19937_64* noise = nullptr);

/// The per-sample noise stream used for sample `index`.
inline std::mt19937_64 noise_stream(std::uint64_t master_seed, std::uint64_t index) {
  return std::mt19937_64(mix_seed(master_seed, index));
}

/// All cell intensities |A|^2 inside the channel region, row-major.
void roi_intensities(const ComplexGrid& field, const ChannelLayout& layout, std::vector<double>& out);

} // namespace pelm
