#include "pelm/encoder.hpp"

#include "pelm/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace pelm {

GridLayout GridLayout::image(int rows, int cols, int cell, int grid_side) {
  if (rows <= 0 || cols <= 0 || cell <= 0) fail(Errc::invalid_parameter, "image layout needs positive dimensions");
  if (rows * cell > grid_side || cols * cell > grid_side) {
    std::ostringstream os;
    os << rows << "x" << cols << " image with " << cell << "-cell pixels does not fit a " << grid_side << " grid";
    fail(Errc::invalid_parameter, os.str());
  }
  GridLayout layout;
  layout.grid_side = grid_side;
  const int r0 = (grid_side - rows * cell) / 2;
  const int c0 = (grid_side - cols * cell) / 2;
  layout.blocks.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) layout.blocks.push_back({r0 + r * cell, c0 + c * cell, cell, cell});
  return layout;
}

GridLayout GridLayout::equal_blocks(int n_attributes, int grid_side) {
  if (n_attributes <= 0) fail(Errc::invalid_parameter, "layout needs at least one attribute");
  const int across = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_attributes))));
  const int down = (n_attributes + across - 1) / across;
  const int side = std::min(grid_side / across, grid_side / down);
  if (side < 1) fail(Errc::invalid_parameter, "grid too small for " + std::to_string(n_attributes) + " attribute blocks");
  GridLayout layout;
  layout.grid_side = grid_side;
  const int r0 = (grid_side - down * side) / 2;
  const int c0 = (grid_side - across * side) / 2;
  for (int j = 0; j < n_attributes; ++j)
    layout.blocks.push_back({r0 + (j / across) * side, c0 + (j % across) * side, side, side});
  return layout;
}

void GridLayout::validate() const {
  if (grid_side <= 0) fail(Errc::invalid_parameter, "grid_side must be positive");
  if (blocks.empty()) fail(Errc::invalid_parameter, "layout has no blocks");
  std::vector<char> used(static_cast<std::size_t>(grid_side) * static_cast<std::size_t>(grid_side), 0);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const Block& b = blocks[j];
    if (b.height <= 0 || b.width <= 0) fail(Errc::invalid_parameter, "empty block for attribute " + std::to_string(j));
    if (b.row < 0 || b.col < 0 || b.row + b.height > grid_side || b.col + b.width > grid_side)
      fail(Errc::invalid_parameter, "block for attribute " + std::to_string(j) + " leaves the grid");
    for (int r = b.row; r < b.row + b.height; ++r)
      for (int c = b.col; c < b.col + b.width; ++c) {
        char& cell = used[static_cast<std::size_t>(r) * static_cast<std::size_t>(grid_side) + static_cast<std::size_t>(c)];
        if (cell) fail(Errc::invalid_parameter, "blocks overlap at attribute " + std::to_string(j));
        cell = 1;
      }
  }
}

namespace {

RealGrid noise_embedding(const EmbeddingSpec& spec, int p) {
  if (!(spec.rho >= 0.0 && spec.rho <= kPi)) fail(Errc::invalid_parameter, "noise amplitude rho must lie in [0, pi]");
  const int l = spec.correlation_length;
  if (l < 1 || l > p) fail(Errc::invalid_parameter, "correlation length must lie in [1, grid_side]");
  const int nb = (p + l - 1) / l;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  RealGrid w(p, p);
  for (int br = 0; br < nb; ++br)
    for (int bc = 0; bc < nb; ++bc) {
      const double v = spec.rho * uniform(rng);
      const int h = std::min(l, p - br * l);
      const int wd = std::min(l, p - bc * l);
      w.block(br * l, bc * l, h, wd).setConstant(v);
    }
  return w;
}

RealGrid fourier_embedding(const EmbeddingSpec& spec, int p) {
  const int n = spec.n_frequencies;
  if (n < 1) fail(Errc::invalid_parameter, "fourier embedding needs at least one frequency");
  std::vector<double> phases = spec.carrier_phases;
  if (phases.empty()) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
    for (int w = 0; w < n; ++w) phases.push_back(uniform(rng));
  }
  if (static_cast<int>(phases.size()) != n) fail(Errc::invalid_parameter, "carrier_phases must have n entries");

  RealGrid w(p, p);
  const double inv_n = 1.0 / n;
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) {
      const double k = static_cast<double>(r) * p + c;
      double acc = 0.0;
      for (int f = 1; f <= n; ++f) acc += inv_n * std::cos(f * k * inv_n + phases[static_cast<std::size_t>(f - 1)]);
      w(r, c) = acc;
    }
  const double lo = w.minCoeff();
  const double hi = w.maxCoeff();
  if (hi - lo > 0.0) w = ((w.array() - lo) * (kPi / (hi - lo))).min(kPi);
  else w.setZero();
  return w;
}

} // namespace

EmbeddingMatrix build_embedding(const EmbeddingSpec& spec, int grid_side) {
  if (grid_side <= 0) fail(Errc::invalid_parameter, "grid_side must be positive");
  EmbeddingMatrix m;
  m.spec = spec;
  switch (spec.kind) {
  case EmbeddingKind::noise:
    m.values = noise_embedding(spec, grid_side);
    break;
  case EmbeddingKind::fourier:
    m.values = fourier_embedding(spec, grid_side);
    break;
  case EmbeddingKind::constant:
    if (!(spec.constant_value >= 0.0 && spec.constant_value <= kPi))
      fail(Errc::invalid_parameter, "constant embedding value must lie in [0, pi]");
    m.values = RealGrid::Constant(grid_side, grid_side, spec.constant_value);
    break;
  case EmbeddingKind::custom:
    m.values = spec.custom_values.size() > 0 ? spec.custom_values : read_grid_file(spec.custom_path);
    if (m.values.rows() != grid_side || m.values.cols() != grid_side)
      fail(Errc::grid_mismatch, "custom embedding is not " + std::to_string(grid_side) + " x " + std::to_string(grid_side));
    if (!m.values.allFinite() || m.values.minCoeff() < 0.0 || m.values.maxCoeff() > kPi)
      fail(Errc::invalid_parameter, "custom embedding values must lie in [0, pi]");
    break;
  }
  return m;
}

namespace {
constexpr char kGridMagic[8] = {'P', 'E', 'L', 'M', 'G', 'R', 'I', 'D'};
}

RealGrid read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open grid file " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() == 8 && std::memcmp(magic, kGridMagic, 8) == 0) {
    std::uint32_t dims[2] = {};
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in) fail(Errc::truncated_file, path.string() + ": grid header cut short");
    RealGrid g(dims[0], dims[1]);
    in.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(sizeof(double) * g.size()));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * g.size()))
      fail(Errc::truncated_file, path.string() + ": grid payload cut short");
    return g;
  }
  in.clear();
  in.seekg(0);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) fail(Errc::unparseable_row, path.string() + ": non-numeric grid entry");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(Errc::invalid_dataset, path.string() + ": empty grid");
  RealGrid g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) fail(Errc::unparseable_row, path.string() + ": ragged grid rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return g;
}

void write_grid_file(const std::filesystem::path& path, const RealGrid& grid, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  if (binary) {
    out.write(kGridMagic, 8);
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(grid.rows()), static_cast<std::uint32_t>(grid.cols())};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(grid.data()), static_cast<std::streamsize>(sizeof(double) * grid.size()));
    return;
  }
  out.precision(17);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) out << (c ? " " : "") << grid(r, c);
    out << '\n';
  }
}

void EncoderConfig::validate() const {
  if (!(phase_scale > 0.0 && phase_scale <= kTwoPi)) fail(Errc::invalid_parameter, "phase_scale must lie in (0, 2pi]");
  if (phase_levels != 0 && phase_levels < 2) fail(Errc::invalid_parameter, "phase_levels must be 0 (continuous) or >= 2");
  layout.validate();
}

RealGrid layout_sample(std::span<const double> sample, const GridLayout& layout, double phase_scale) {
  if (static_cast<int>(sample.size()) != layout.n_attributes()) {
    std::ostringstream os;
    os << "sample has " << sample.size() << " attributes, layout expects " << layout.n_attributes();
    fail(Errc::length_mismatch, os.str());
  }
  RealGrid grid = RealGrid::Constant(layout.grid_side, layout.grid_side, layout.pad_phase);
  for (std::size_t j = 0; j < sample.size(); ++j) {
    const Block& b = layout.blocks[j];
    grid.block(b.row, b.col, b.height, b.width).setConstant(sample[j] * phase_scale);
  }
  return grid;
}

double quantize_phase(double phi, int levels) {
  if (levels <= 0) return phi;
  const double step = kTwoPi / levels;
  double wrapped = std::fmod(phi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  const long long idx = std::llround(wrapped / step) % levels;
  return static_cast<double>(idx) * step;
}

ComplexGrid encode(std::span<const double> sample, const EmbeddingMatrix& embedding, const EncoderConfig& config) {
  if (embedding.grid_side() != config.layout.grid_side) {
    std::ostringstream os;
    os << "embedding grid " << embedding.grid_side() << " vs layout grid " << config.layout.grid_side;
    fail(Errc::grid_mismatch, os.str());
  }
  RealGrid phase = layout_sample(sample, config.layout, config.phase_scale);
  phase += embedding.values;
  ComplexGrid field(phase.rows(), phase.cols());
  const Eigen::Index n = phase.size();
  const double* src = phase.data();
  complex* dst = field.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = quantize_phase(src[i], config.phase_levels);
    dst[i] = complex(std::cos(phi), std::sin(phi));
  }
  return field;
}

} // namespace pelm
