#include "pelm/dataset.hpp"

#include "pelm/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pelm {

namespace {

const char* const kMushroomAttributes[] = {
    "cap-shape", "cap-surface", "cap-color", "bruises", "odor", "gill-attachment",
    "gill-spacing", "gill-size", "gill-color", "stalk-shape", "stalk-root",
    "stalk-surface-above-ring", "stalk-surface-below-ring", "stalk-color-above-ring",
    "stalk-color-below-ring", "veil-type", "veil-color", "ring-number", "ring-type",
    "spore-print-color", "population", "habitat"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> tokenize(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  if (delimiter == 0) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

/// Code of the known label adjacent to `label` in lexicographic order.
int nearest_code(const std::map<std::string, int>& known, const std::string& label) {
  auto it = known.lower_bound(label);
  if (it == known.end()) --it;
  return it->second;
}

} // namespace

int Schema::n_features() const {
  return static_cast<int>(std::count_if(columns.begin(), columns.end(), [](const ColumnSpec& c) {
    return c.kind == ColumnKind::categorical || c.kind == ColumnKind::numeric;
  }));
}

Schema Schema::mushroom_class_last() {
  Schema s;
  for (const char* name : kMushroomAttributes) s.columns.push_back({name, ColumnKind::categorical});
  s.columns.push_back({"class", ColumnKind::target_class});
  return s;
}

Schema Schema::mushroom_uci() {
  Schema s;
  s.columns.push_back({"class", ColumnKind::target_class});
  for (const char* name : kMushroomAttributes) s.columns.push_back({name, ColumnKind::categorical});
  return s;
}

Schema Schema::abalone() {
  Schema s;
  s.columns = {{"sex", ColumnKind::categorical},
               {"length", ColumnKind::numeric},
               {"diameter", ColumnKind::numeric},
               {"height", ColumnKind::numeric},
               {"whole-weight", ColumnKind::numeric},
               {"shucked-weight", ColumnKind::numeric},
               {"viscera-weight", ColumnKind::numeric},
               {"shell-weight", ColumnKind::numeric},
               {"rings", ColumnKind::target_real}};
  return s;
}

CsvLoadResult parse_uci_csv(const std::string& text, const Schema& schema, const CategoryCodebook* codebook,
                            const MinMaxScaler* frozen_scaler) {
  const int n_cols = static_cast<int>(schema.columns.size());
  const int n_targets = static_cast<int>(std::count_if(schema.columns.begin(), schema.columns.end(), [](const ColumnSpec& c) {
    return c.kind == ColumnKind::target_class || c.kind == ColumnKind::target_real;
  }));
  if (n_targets != 1) fail(Errc::schema_mismatch, "schema must declare exactly one target column");
  if (schema.n_features() == 0) fail(Errc::schema_mismatch, "schema declares no feature columns");

  CsvLoadResult result;
  CategoryCodebook& book = result.codebook;
  if (codebook) book = *codebook;
  const bool frozen = codebook != nullptr;

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  bool class_target = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (line_no <= schema.skip_lines) continue;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!schema.comment_prefix.empty() && line.substr(0, schema.comment_prefix.size()) == schema.comment_prefix)
      continue;
    const auto tokens = tokenize(line, schema.delimiter);
    if (static_cast<int>(tokens.size()) != n_cols) {
      std::ostringstream os;
      os << "line " << line_no << ": " << tokens.size() << " fields, schema has " << n_cols;
      fail(Errc::unparseable_row, os.str());
    }
    std::vector<double> features;
    features.reserve(static_cast<std::size_t>(schema.n_features()));
    for (int c = 0; c < n_cols; ++c) {
      const auto& col = schema.columns[static_cast<std::size_t>(c)];
      const std::string_view tok = tokens[static_cast<std::size_t>(c)];
      switch (col.kind) {
      case ColumnKind::ignore:
        break;
      case ColumnKind::numeric:
      case ColumnKind::target_real: {
        double v = 0.0;
        if (!parse_double(tok, v)) {
          std::ostringstream os;
          os << "line " << line_no << ", column '" << col.name << "': not a number: '" << tok << "'";
          fail(Errc::unparseable_row, os.str());
        }
        if (col.kind == ColumnKind::numeric) features.push_back(v);
        else targets.push_back(v);
        break;
      }
      case ColumnKind::categorical: {
        auto& codes = book.columns[c];
        const std::string label(tok);
        auto it = codes.find(label);
        if (it != codes.end()) {
          features.push_back(it->second);
        } else if (frozen) {
          if (codes.empty()) fail(Errc::schema_mismatch, "codebook has no codes for column " + col.name);
          features.push_back(nearest_code(codes, label));
          ++result.unknown_categories;
        } else {
          const int code = static_cast<int>(codes.size());
          codes.emplace(label, code);
          features.push_back(code);
        }
        break;
      }
      case ColumnKind::target_class: {
        class_target = true;
        const std::string label(tok);
        auto it = book.classes.find(label);
        if (it != book.classes.end()) {
          targets.push_back(it->second);
        } else if (frozen) {
          fail(Errc::schema_mismatch, "line " + std::to_string(line_no) + ": unknown class '" + label + "'");
        } else {
          const int code = static_cast<int>(book.classes.size());
          book.classes.emplace(label, code);
          book.class_order.push_back(label);
          targets.push_back(code);
        }
        break;
      }
      }
    }
    rows.push_back(std::move(features));
  }
  if (rows.empty()) fail(Errc::invalid_dataset, "no data rows");

  Dataset& ds = result.dataset;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index l = schema.n_features();
  ds.samples.resize(n, l);
  ds.targets = Eigen::Map<const Vector>(targets.data(), n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j) ds.samples(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  // Categorical codes scale by codebook size so that separately loaded files
  // share one mapping; numeric columns use the loaded range.
  MinMaxScaler scaler = MinMaxScaler::fit(ds.samples);
  Eigen::Index j = 0;
  for (int c = 0; c < n_cols; ++c) {
    const auto& col = schema.columns[static_cast<std::size_t>(c)];
    if (col.kind != ColumnKind::categorical && col.kind != ColumnKind::numeric) continue;
    ds.feature_names.push_back(col.name);
    if (col.kind == ColumnKind::categorical) {
      scaler.lo(j) = 0.0;
      scaler.hi(j) = static_cast<double>(book.columns[c].size()) - 1.0;
    }
    ++j;
  }
  if (frozen_scaler) {
    if (frozen_scaler->lo.size() != l) fail(Errc::schema_mismatch, "scaler width differs from schema");
    scaler = *frozen_scaler;
  }
  scaler.apply(ds.samples);
  result.scaler = scaler;

  if (class_target) {
    const int k = static_cast<int>(book.classes.size());
    ds.task = k == 2 ? Task::binary() : Task::multiclass(k);
    ds.class_names = book.class_order;
  } else {
    ds.task = Task::regression();
  }
  ds.validate();
  return result;
}

CsvLoadResult load_uci_csv(const std::filesystem::path& path, const Schema& schema, const CategoryCodebook* codebook,
                           const MinMaxScaler* scaler) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_uci_csv(buf.str(), schema, codebook, scaler);
}

} // namespace pelm
