#include "pelm/detection.hpp"

#include "pelm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pelm {

ChannelLayout ChannelLayout::centered(int m_channels, int block_side, int field_side) {
  if (m_channels < 1) fail(Errc::invalid_parameter, "channel count must be positive");
  if (block_side < 1) fail(Errc::invalid_parameter, "channel block side must be positive");
  ChannelLayout l;
  l.m_channels = m_channels;
  l.block_side = block_side;
  l.per_row = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m_channels))));
  while (l.per_row * l.per_row < m_channels) ++l.per_row;
  while ((l.per_row - 1) * (l.per_row - 1) >= m_channels) --l.per_row;
  const int side = l.roi_side();
  l.origin_row = field_side / 2 - side / 2;
  l.origin_col = field_side / 2 - side / 2;
  l.validate(field_side);
  return l;
}

void ChannelLayout::validate(int field_side) const {
  if (m_channels < 1 || block_side < 1 || per_row < 1) fail(Errc::invalid_parameter, "empty channel layout");
  const int rows_used = (m_channels + per_row - 1) / per_row;
  if (origin_row < 0 || origin_col < 0 || origin_row + rows_used * block_side > field_side ||
      origin_col + std::min(per_row, m_channels) * block_side > field_side) {
    std::ostringstream os;
    os << m_channels << " channels of " << block_side << "x" << block_side << " pixels need a " << roi_side()
       << " square region, detector field is " << field_side;
    fail(Errc::layout_out_of_bounds, os.str());
  }
}

void DetectorConfig::validate(int field_side) const {
  if (!(i_sat >= 0.0) || !std::isfinite(i_sat)) fail(Errc::invalid_parameter, "i_sat must be finite and > 0 (or 0 for auto)");
  if (!(exposure > 0.0)) fail(Errc::invalid_parameter, "exposure must be > 0");
  if (calibration_samples < 1) fail(Errc::invalid_parameter, "calibration_samples must be >= 1");
  if (!(noise_sigma >= 0.0)) fail(Errc::invalid_parameter, "noise_sigma must be >= 0");
  if (readout_levels != 0 && readout_levels < 2) fail(Errc::invalid_parameter, "readout_levels must be 0 or >= 2");
  channels.validate(field_side);
}

double quantize_readout(double v, int levels) {
  if (levels <= 0) return v;
  const double top = levels - 1;
  return std::round(std::clamp(v, 0.0, 1.0) * top) / top;
}

Vector detect(const ComplexGrid& field, const DetectorConfig& config, double i_sat, std::mt19937_64* noise) {
  if (field.rows() != field.cols()) fail(Errc::dimension_mismatch, "detector expects a square field");
  const ChannelLayout& ch = config.channels;
  ch.validate(static_cast<int>(field.rows()));
  if (!(i_sat > 0.0)) fail(Errc::invalid_parameter, "saturation intensity must be > 0");
  const bool noisy = config.noise_sigma > 0.0;
  if (noisy && !noise) fail(Errc::missing_seed, "noise_sigma > 0 requires a noise stream");
  std::normal_distribution<double> gauss(0.0, config.noise_sigma);

  const int b = ch.block_side;
  const double inv_area = 1.0 / (static_cast<double>(b) * b);
  Vector out(ch.m_channels);
  for (int j = 0; j < ch.m_channels; ++j) {
    const int r0 = ch.channel_row(j);
    const int c0 = ch.channel_col(j);
    double acc = 0.0;
    for (int r = r0; r < r0 + b; ++r)
      for (int c = c0; c < c0 + b; ++c) {
        double intensity = std::norm(field(r, c));
        if (noisy) intensity = std::max(0.0, intensity + gauss(*noise));
        const double g = config.linear ? intensity / i_sat : saturate(intensity, i_sat);
        acc += config.linear ? g : quantize_readout(g, config.readout_levels);
      }
    out(j) = acc * inv_area;
  }
  return out;
}

void roi_intensities(const ComplexGrid& field, const ChannelLayout& layout, std::vector<double>& out) {
  const int b = layout.block_side;
  for (int j = 0; j < layout.m_channels; ++j)
    for (int r = layout.channel_row(j); r < layout.channel_row(j) + b; ++r)
      for (int c = layout.channel_col(j); c < layout.channel_col(j) + b; ++c) out.push_back(std::norm(field(r, c)));
}

} // namespace pelm
