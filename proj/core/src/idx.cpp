#include "pelm/dataset.hpp"

#include "pelm/errors.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace pelm {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset) {
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

struct IdxFile {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
  std::size_t payload_offset = 0;
};

IdxFile parse_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  IdxFile f;
  f.bytes = read_file(path);
  if (f.bytes.size() < 4) fail(Errc::truncated_file, path.string() + " is shorter than the IDX magic");
  const std::uint32_t magic = read_be32(f.bytes, 0);
  if (magic != expected_magic) {
    std::ostringstream os;
    os << path.string() << ": magic 0x" << std::hex << magic << ", expected 0x" << expected_magic;
    fail(Errc::bad_magic, os.str());
  }
  const std::size_t n_dims = expected_magic & 0xFF;
  f.payload_offset = 4 + 4 * n_dims;
  if (f.bytes.size() < f.payload_offset) fail(Errc::truncated_file, path.string() + ": header cut short");
  std::size_t payload = 1;
  for (std::size_t d = 0; d < n_dims; ++d) {
    f.dims.push_back(read_be32(f.bytes, 4 + 4 * d));
    payload *= f.dims.back();
  }
  const std::size_t have = f.bytes.size() - f.payload_offset;
  if (have < payload) {
    std::ostringstream os;
    os << path.string() << ": expected " << payload << " payload bytes, found " << have;
    fail(Errc::truncated_file, os.str());
  }
  if (have > payload) {
    std::ostringstream os;
    os << path.string() << ": " << (have - payload) << " trailing bytes after declared payload";
    fail(Errc::count_mismatch, os.str());
  }
  return f;
}

} // namespace

Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const IdxFile images = parse_idx(images_path, kIdxImageMagic);
  const IdxFile labels = parse_idx(labels_path, kIdxLabelMagic);
  const std::uint32_t n = images.dims[0];
  if (labels.dims[0] != n) {
    std::ostringstream os;
    os << n << " images but " << labels.dims[0] << " labels";
    fail(Errc::count_mismatch, os.str());
  }
  const Eigen::Index rows = images.dims[1];
  const Eigen::Index cols = images.dims[2];
  const Eigen::Index l = rows * cols;

  Dataset ds;
  ds.task = Task::multiclass(10);
  ds.samples.resize(n, l);
  ds.targets.resize(n);
  const std::uint8_t* px = images.bytes.data() + images.payload_offset;
  const std::uint8_t* lb = labels.bytes.data() + labels.payload_offset;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index j = 0; j < l; ++j) ds.samples(i, j) = px[i * l + j] / 255.0;
    if (lb[i] > 9) fail(Errc::invalid_dataset, "label outside 0..9 at index " + std::to_string(i));
    ds.targets(i) = lb[i];
  }
  ds.feature_names.reserve(static_cast<std::size_t>(l));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      ds.feature_names.push_back("px" + std::to_string(r) + "_" + std::to_string(c));
  for (int d = 0; d < 10; ++d) ds.class_names.push_back(std::to_string(d));
  return ds;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const std::vector<std::uint8_t>& pixels, std::uint32_t n_images, std::uint32_t rows,
               std::uint32_t cols, const std::vector<std::uint8_t>& labels) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) fail(Errc::unwritable_path, "cannot write IDX files");
  put_be32(img, kIdxImageMagic);
  put_be32(img, n_images);
  put_be32(img, rows);
  put_be32(img, cols);
  img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

} // namespace pelm
