#include "pelm/model_io.hpp"

#include "pelm/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace pelm {

using json = nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) fail(Errc::count_mismatch, "model matrix row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) fail(Errc::count_mismatch, "model matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

json scaler_json(const MinMaxScaler& s) { return {{"lo", vector_json(s.lo)}, {"hi", vector_json(s.hi)}}; }
MinMaxScaler scaler_from(const json& j) { return {vector_from(j.at("lo")), vector_from(j.at("hi"))}; }

const char* encoding_name(TargetEncoding e) {
  switch (e) {
  case TargetEncoding::one_hot_pm1: return "one_hot_pm1";
  case TargetEncoding::scalar: return "scalar";
  case TargetEncoding::sign_binary: return "sign_binary";
  }
  return "scalar";
}

TargetEncoding encoding_from(const std::string& s) {
  if (s == "one_hot_pm1") return TargetEncoding::one_hot_pm1;
  if (s == "scalar") return TargetEncoding::scalar;
  if (s == "sign_binary") return TargetEncoding::sign_binary;
  fail(Errc::bad_magic, "unknown target encoding '" + s + "'");
}

const char* task_name(TaskKind k) {
  switch (k) {
  case TaskKind::multiclass: return "multiclass";
  case TaskKind::binary: return "binary";
  case TaskKind::regression: return "regression";
  }
  return "regression";
}

TaskKind task_from(const std::string& s) {
  if (s == "multiclass") return TaskKind::multiclass;
  if (s == "binary") return TaskKind::binary;
  if (s == "regression") return TaskKind::regression;
  fail(Errc::bad_magic, "unknown task '" + s + "'");
}

} // namespace

void save_model(const std::filesystem::path& path, const ModelFile& m) {
  json j;
  j["format"] = "pelm-model";
  j["version"] = kModelFormatVersion;
  j["config"] = json::parse(to_json(m.config));
  j["feature_hash"] = hash_hex(m.feature_hash);
  j["config_hash"] = hash_hex(m.config_hash);
  j["i_sat"] = m.i_sat;
  j["task"] = {{"kind", task_name(m.task.kind)}, {"n_classes", m.task.n_classes}, {"class_names", m.class_names}};
  j["readout"] = {{"lambda", m.readout.lambda},
                  {"encoding", encoding_name(m.readout.encoding)},
                  {"beta", matrix_json(m.readout.beta)}};
  if (m.codebook) {
    json cols = json::object();
    for (const auto& [col, codes] : m.codebook->columns) cols[std::to_string(col)] = codes;
    j["codebook"] = {{"columns", cols}, {"classes", m.codebook->classes}, {"class_order", m.codebook->class_order}};
  }
  if (m.load_scaler) j["load_scaler"] = scaler_json(*m.load_scaler);
  if (m.train_scaler) j["train_scaler"] = scaler_json(*m.train_scaler);

  std::ofstream out(path);
  if (!out) fail(Errc::unwritable_path, "cannot write model " + path.string());
  out << j.dump(1) << '\n';
  if (!out) fail(Errc::unwritable_path, "write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::file_not_found, "cannot open model " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Errc::bad_magic, path.string() + ": not a JSON model file (" + e.what() + ")");
  }
  if (!j.is_object() || j.value("format", "") != "pelm-model") fail(Errc::bad_magic, path.string() + ": not a pelm model");
  const int version = j.value("version", 0);
  if (version != kModelFormatVersion)
    fail(Errc::bad_magic, path.string() + ": unsupported model version " + std::to_string(version));

  ModelFile m;
  try {
    m.config = parse_config(j.at("config").dump());
    m.feature_hash = std::stoull(j.at("feature_hash").get<std::string>(), nullptr, 16);
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    m.i_sat = j.at("i_sat").get<double>();
    const auto& t = j.at("task");
    m.task = {task_from(t.at("kind").get<std::string>()), t.at("n_classes").get<int>()};
    m.class_names = t.at("class_names").get<std::vector<std::string>>();
    const auto& r = j.at("readout");
    m.readout.lambda = r.at("lambda").get<double>();
    m.readout.encoding = encoding_from(r.at("encoding").get<std::string>());
    m.readout.beta = matrix_from(r.at("beta"));
    m.readout.pipeline_hash = m.feature_hash;
    if (j.contains("codebook")) {
      CategoryCodebook cb;
      for (const auto& [k, v] : j.at("codebook").at("columns").items())
        cb.columns[std::stoi(k)] = v.get<std::map<std::string, int>>();
      cb.classes = j.at("codebook").at("classes").get<std::map<std::string, int>>();
      cb.class_order = j.at("codebook").at("class_order").get<std::vector<std::string>>();
      m.codebook = std::move(cb);
    }
    if (j.contains("load_scaler")) m.load_scaler = scaler_from(j.at("load_scaler"));
    if (j.contains("train_scaler")) m.train_scaler = scaler_from(j.at("train_scaler"));
  } catch (const json::exception& e) {
    fail(Errc::truncated_file, path.string() + ": malformed model (" + e.what() + ")");
  }
  if (feature_hash(m.config) != m.feature_hash)
    fail(Errc::count_mismatch, path.string() + ": stored feature hash does not match the stored config");
  if (!m.readout.beta.allFinite()) fail(Errc::non_finite_input, path.string() + ": non-finite weights");
  return m;
}

} // namespace pelm
