#pragma once

#include "pelm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pelm {

enum class TaskKind { multiclass, binary, regression };

struct Task {
  TaskKind kind = TaskKind::regression;
  int n_classes = 0; ///< K for multiclass, 2 for binary, 0 for regression

  static Task multiclass(int k) { return {TaskKind::multiclass, k}; }
  static Task binary() { return {TaskKind::binary, 2}; }
  static Task regression() { return {TaskKind::regression, 0}; }

  bool is_classification() const { return kind != TaskKind::regression; }
  friend bool operator==(const Task&, const Task&) = default;
};

/// N samples of L attributes in [0,1] with one target per sample.
///
/// For classification tasks `targets` holds class indices in [0, K) stored as
/// exact integers; for regression it holds the real-valued target.
struct Dataset {
  RowMatrix samples;
  Vector targets;
  Task task;
  std::vector<std::string> feature_names;
  /// Class names in code order (classification only).
  std::vector<std::string> class_names;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dims() const { return samples.cols(); }
  int label(Eigen::Index i) const { return static_cast<int>(targets(i)); }
  std::vector<int> labels() const;

  /// Throws Errc::invalid_dataset when any invariant is violated.
  void validate() const;

  /// Rows selected by `rows`, in that order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

// ---------------------------------------------------------------------------
// IDX (MNIST) files
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Loads an IDX image/label pair. Pixels are divided by 255.
/// Errors: bad_magic, truncated_file, count_mismatch, file_not_found.
Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path);

/// Writes an IDX pair in the standard format (used for fixtures and tests).
void write_idx(const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path,
               const std::vector<std::uint8_t>& pixels, std::uint32_t n_images,
               std::uint32_t rows, std::uint32_t cols,
               const std::vector<std::uint8_t>& labels);

// ---------------------------------------------------------------------------
// Delimited text (UCI) files
// ---------------------------------------------------------------------------

enum class ColumnKind { categorical, numeric, target_class, target_real, ignore };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  /// 0 means "any run of whitespace"; otherwise a single delimiter character.
  char delimiter = ',';
  /// Number of leading lines to skip (header rows).
  int skip_lines = 0;
  /// Lines starting with this prefix are ignored ('@' covers KEEL headers).
  std::string comment_prefix = "@";

  /// Mushroom with the class as the first column (UCI agaricus-lepiota.data).
  static Schema mushroom_uci();
  /// Mushroom with the class as the last column (KEEL mushroom.dat).
  static Schema mushroom_class_last();
  /// Abalone: sex, 7 numeric measurements, rings (regressed as-is).
  static Schema abalone();

  int n_features() const;
};

/// Per-feature affine map onto [0,1].
struct MinMaxScaler {
  Vector lo;
  Vector hi;

  static MinMaxScaler fit(const RowMatrix& samples);
  /// Maps each column through (x - lo) / (hi - lo), clamped to [0,1];
  /// constant columns map to 0.5.
  void apply(RowMatrix& samples) const;
};

/// Per-column ordinal codes (first-occurrence order). Fitted on one file and
/// optionally reused to load another file with the same vocabulary.
struct CategoryCodebook {
  /// For each categorical column index (in schema order): label -> code.
  std::map<int, std::map<std::string, int>> columns;
  /// label -> class index for the target column.
  std::map<std::string, int> classes;
  std::vector<std::string> class_order;
};

struct CsvLoadResult {
  Dataset dataset;
  CategoryCodebook codebook;
  /// Cells whose category was unseen by a supplied codebook and were clamped
  /// to the nearest known code.
  std::size_t unknown_categories = 0;
  /// Raw-unit ranges that mapped the feature columns onto [0,1].
  MinMaxScaler scaler;
};

/// Parses a delimited file against `schema`. Categorical columns become
/// ordinal codes; every feature column is min-max scaled to [0,1] over the
/// loaded rows (constant columns become 0.5). Missing markers such as "?" are
/// ordinary category labels. A supplied codebook freezes the vocabulary and a
/// supplied scaler replaces the fitted ranges, so a second file can be mapped
/// exactly like the first.
CsvLoadResult load_uci_csv(const std::filesystem::path& path, const Schema& schema,
                           const CategoryCodebook* codebook = nullptr,
                           const MinMaxScaler* scaler = nullptr);

/// Same as load_uci_csv but from an in-memory buffer.
CsvLoadResult parse_uci_csv(const std::string& text, const Schema& schema,
                            const CategoryCodebook* codebook = nullptr,
                            const MinMaxScaler* scaler = nullptr);

// ---------------------------------------------------------------------------
// Normalization and splitting
// ---------------------------------------------------------------------------

struct SplitSpec {
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  std::uint64_t shuffle_seed = 0;
  bool stratified = false;
  /// Refit min-max scaling on the train part and apply it to both parts.
  bool normalize = true;

  void validate(Eigen::Index n_available) const;
};

/// Deterministic shuffled split. Stratified splits (classification only) keep
/// per-class counts within one sample of the global proportions.
/// The train scaler is stored in `fitted` when normalizing.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec, MinMaxScaler* fitted = nullptr);

/// The permutation used by split(): first n_train indices go to train, the
/// next n_test to test.
std::vector<Eigen::Index> split_order(const Dataset& dataset, const SplitSpec& spec);

} // namespace pelm
