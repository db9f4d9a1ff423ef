#include "pelm/features.hpp"

#include "pelm/errors.hpp"
#include "pelm/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

namespace pelm {

namespace {
constexpr char kFeatureMagic[8] = {'P', 'E', 'L', 'M', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::size_t kGrain = 64;
} // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Pipeline::validate() const {
  encoder.validate();
  if (embedding.grid_side() != encoder.layout.grid_side) fail(Errc::grid_mismatch, "embedding and layout grids differ");
  if (op.input_side() != encoder.layout.grid_side) fail(Errc::grid_mismatch, "operator and layout grids differ");
  detector.validate(op.output_side());
  if (!(i_sat > 0.0)) fail(Errc::invalid_parameter, "saturation intensity not resolved");
}

Vector sample_features(const Pipeline& p, std::span<const double> sample, std::uint64_t index) {
  const ComplexGrid field = p.op.propagate(encode(sample, p.embedding, p.encoder));
  if (p.detector.noise_sigma > 0.0) {
    auto rng = noise_stream(p.detector.noise_seed, index);
    return detect(field, p.detector, p.i_sat, &rng);
  }
  return detect(field, p.detector, p.i_sat);
}

double calibrate_exposure(const Pipeline& p, const RowMatrix& samples, int threads) {
  const auto n = static_cast<std::size_t>(std::min<Eigen::Index>(samples.rows(), p.detector.calibration_samples));
  if (n == 0) fail(Errc::invalid_dataset, "no samples for exposure calibration");
  std::vector<std::vector<double>> parts(n);
  parallel_for(n, threads, 8, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto row = samples.row(static_cast<Eigen::Index>(i));
      const ComplexGrid field = p.op.propagate(encode({row.data(), static_cast<std::size_t>(row.size())}, p.embedding, p.encoder));
      roi_intensities(field, p.detector.channels, parts[i]);
    }
  });
  std::vector<double> all;
  for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  const auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
  std::nth_element(all.begin(), mid, all.end());
  double median = *mid;
  if (all.size() % 2 == 0) median = 0.5 * (median + *std::max_element(all.begin(), mid));
  if (!(median > 0.0)) fail(Errc::non_finite_input, "median calibration intensity is zero; set i_sat explicitly");
  return p.detector.exposure * median;
}

FeatureMatrix build_features(const RowMatrix& samples, const Pipeline& p, int threads, std::uint64_t stream_offset) {
  p.validate();
  if (samples.cols() != p.encoder.layout.n_attributes()) {
    std::ostringstream os;
    os << "samples have " << samples.cols() << " attributes, layout expects " << p.encoder.layout.n_attributes();
    fail(Errc::length_mismatch, os.str());
  }
  FeatureMatrix fm;
  fm.config_hash = p.config_hash;
  fm.values.resize(samples.rows(), p.n_channels());
  parallel_for(static_cast<std::size_t>(samples.rows()), threads, kGrain, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto row = samples.row(r);
      fm.values.row(r) = sample_features(p, {row.data(), static_cast<std::size_t>(row.size())}, stream_offset + i).transpose();
    }
  });
  return fm;
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& f, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  const std::uint64_t n = static_cast<std::uint64_t>(f.values.rows());
  const std::uint64_t m = static_cast<std::uint64_t>(f.values.cols());
  if (binary) {
    out.write(kFeatureMagic, 8);
    out.write(reinterpret_cast<const char*>(&kFeatureVersion), sizeof kFeatureVersion);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&m), sizeof m);
    out.write(reinterpret_cast<const char*>(&f.config_hash), sizeof f.config_hash);
    out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(sizeof(double) * f.values.size()));
  } else {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(f.config_hash));
    out << "# pelm-features " << n << ' ' << m << ' ' << hex << '\n';
    char buf[32];
    for (Eigen::Index r = 0; r < f.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
        const auto res = std::to_chars(buf, buf + sizeof buf, f.values(r, c));
        if (c) out << ',';
        out.write(buf, res.ptr - buf);
      }
      out << '\n';
    }
  }
  if (!out) fail(Errc::unwritable_path, "write failed: " + path.string());
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  FeatureMatrix f;
  if (in.gcount() == 8 && std::memcmp(magic, kFeatureMagic, 8) == 0) {
    std::uint32_t version = 0;
    std::uint64_t n = 0, m = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    in.read(reinterpret_cast<char*>(&f.config_hash), sizeof f.config_hash);
    if (!in) fail(Errc::truncated_file, path.string() + ": feature header cut short");
    if (version != kFeatureVersion) fail(Errc::bad_magic, path.string() + ": unsupported feature file version " + std::to_string(version));
    f.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    const auto bytes = static_cast<std::streamsize>(sizeof(double) * n * m);
    in.read(reinterpret_cast<char*>(f.values.data()), bytes);
    if (in.gcount() != bytes) fail(Errc::truncated_file, path.string() + ": feature payload cut short");
    if (in.peek() != std::char_traits<char>::eof()) fail(Errc::count_mismatch, path.string() + ": trailing bytes after payload");
    return f;
  }

  in.clear();
  in.seekg(0);
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string hash_tag, kind, hex;
  std::uint64_t n = 0, m = 0;
  if (!(hs >> hash_tag >> kind >> n >> m >> hex) || hash_tag != "#" || kind != "pelm-features")
    fail(Errc::bad_magic, path.string() + ": not a feature file");
  f.config_hash = std::stoull(hex, nullptr, 16);
  f.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::uint64_t r = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (r >= n) fail(Errc::count_mismatch, path.string() + ": more rows than the header declares");
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::uint64_t c = 0; c < m; ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) fail(Errc::unparseable_row, path.string() + ": bad value on row " + std::to_string(r));
      f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      p = res.ptr;
      if (c + 1 < m) {
        if (p == end || *p != ',') fail(Errc::unparseable_row, path.string() + ": short row " + std::to_string(r));
        ++p;
      }
    }
    if (p != end) fail(Errc::unparseable_row, path.string() + ": long row " + std::to_string(r));
    ++r;
  }
  if (r != n) fail(Errc::count_mismatch, path.string() + ": header declares " + std::to_string(n) + " rows, found " + std::to_string(r));
  return f;
}

} // namespace pelm
