#pragma once

#include "pelm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pelm {

/// A rectangle of grid cells, top-left at (row, col).
struct Block {
  int row = 0;
  int col = 0;
  int height = 1;
  int width = 1;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Assignment of each input attribute to a block of cells on a P x P grid.
/// Cells not covered by any block hold `pad_phase`.
struct GridLayout {
  int grid_side = 0;
  std::vector<Block> blocks;
  double pad_phase = 0.0;

  /// An image of rows x cols pixels, each pixel replicated over a cell x cell
  /// block, centered on the grid.
  static GridLayout image(int rows, int cols, int cell, int grid_side);
  /// L equal-area blocks tiled row-major in a ceil(sqrt(L))-wide arrangement.
  static GridLayout equal_blocks(int n_attributes, int grid_side);

  int n_attributes() const { return static_cast<int>(blocks.size()); }
  /// Throws Errc::invalid_parameter on overlapping, empty, or out-of-grid blocks.
  void validate() const;
};

enum class EmbeddingKind { noise, fourier, constant, custom };

/// Parameters of the fixed phase pattern superimposed on every input.
struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::noise;
  // noise
  double rho = 0.0;               ///< maximum amplitude, radians, in [0, pi]
  int correlation_length = 1;     ///< block side in cells
  // fourier
  int n_frequencies = 1;
  std::vector<double> carrier_phases; ///< n phases; drawn from `seed` when empty
  // constant
  double constant_value = 0.0;
  // custom
  std::filesystem::path custom_path;
  RealGrid custom_values;         ///< used when non-empty, otherwise read from custom_path

  std::uint64_t seed = 0;
};

struct EmbeddingMatrix {
  EmbeddingSpec spec;
  RealGrid values; ///< P x P, every entry in [0, pi]

  int grid_side() const { return static_cast<int>(values.rows()); }
};

/// Builds the embedding grid.
///
/// - noise: i.i.d. uniform values in [0, rho], one per l x l block (partial
///   blocks at the right/bottom edges).
/// - fourier: real part of sum_{w=1..n} (a_w / n) exp(i w k / n) with
///   |a_w| = 1, evaluated over the row-major cell index k and affinely
///   rescaled so that min -> 0 and max -> pi.
/// - constant: uniform grid.
/// - custom: grid read from `custom_values` or a grid file.
EmbeddingMatrix build_embedding(const EmbeddingSpec& spec, int grid_side);

/// Reads a row-major real grid. Binary files start with the 8-byte magic
/// "PELMGRID" followed by two little-endian uint32 (rows, cols) and
/// rows*cols little-endian doubles; anything else is parsed as whitespace
/// separated text with one grid row per line.
RealGrid read_grid_file(const std::filesystem::path& path);
void write_grid_file(const std::filesystem::path& path, const RealGrid& grid, bool binary);

struct EncoderConfig {
  double phase_scale = kPi; ///< data in [0,1] maps to [0, phase_scale]
  int phase_levels = 0;     ///< 0 means continuous; otherwise levels over [0, 2pi)
  GridLayout layout;

  void validate() const;
};

/// Phase grid of one sample before the embedding is added.
RealGrid layout_sample(std::span<const double> sample, const GridLayout& layout, double phase_scale);

/// Snaps a phase to the nearest of `levels` equally spaced values in [0, 2pi).
double quantize_phase(double phi, int levels);

/// exp(i (layout(sample) + W)), phase-quantized when configured.
ComplexGrid encode(std::span<const double> sample, const EmbeddingMatrix& embedding, const EncoderConfig& config);

} // namespace pelm
