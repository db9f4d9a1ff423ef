#include "pelm/config.hpp"

#include "pelm/errors.hpp"
#include "pelm/features.hpp"
#include "pelm/readout.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pelm {

using json = nlohmann::json;

namespace {

constexpr int kHardwarePhaseLevels = 210;
constexpr int kHardwareReadoutLevels = 256;

/// Reads keys from one JSON object and rejects any it did not consume.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(Errc::invalid_parameter, path_ + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(Errc::invalid_parameter, "unknown key " + path_ + "." + it.key());
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const std::string& key) {
    used_.insert(key);
    if (!has(key)) fail(Errc::missing_field, "missing " + path_ + "." + key);
    return j_.at(key);
  }
  void touch(const std::string& key) { used_.insert(key); }

  template <class T> T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail(Errc::invalid_parameter, path_ + "." + key + " has the wrong type");
    }
  }
  template <class T> T get(const std::string& key, T fallback) {
    touch(key);
    return has(key) ? get<T>(key) : fallback;
  }
  template <class T> std::optional<T> opt(const std::string& key) {
    touch(key);
    if (!has(key)) return std::nullopt;
    return get<T>(key);
  }
  std::uint64_t seed(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(Errc::invalid_parameter, path_ + "." + key + " must be a non-negative integer");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const auto s = v.get<std::int64_t>();
    if (s < 0) fail(Errc::invalid_parameter, path_ + "." + key + " must be a non-negative integer");
    return static_cast<std::uint64_t>(s);
  }
  std::optional<std::uint64_t> opt_seed(const std::string& key) {
    touch(key);
    if (!has(key)) return std::nullopt;
    return seed(key);
  }
  Section sub(const std::string& key) { return Section(at(key), path_ + "." + key); }
  const std::string& path() const { return path_; }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

ColumnKind column_kind(const std::string& s) {
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "target_class") return ColumnKind::target_class;
  if (s == "target_real") return ColumnKind::target_real;
  if (s == "ignore") return ColumnKind::ignore;
  fail(Errc::invalid_parameter, "unknown column kind '" + s + "'");
}

std::string column_kind_name(ColumnKind k) {
  switch (k) {
  case ColumnKind::categorical: return "categorical";
  case ColumnKind::numeric: return "numeric";
  case ColumnKind::target_class: return "target_class";
  case ColumnKind::target_real: return "target_real";
  case ColumnKind::ignore: return "ignore";
  }
  return "ignore";
}

Schema named_schema(const std::string& name) {
  if (name == "mushroom_uci") return Schema::mushroom_uci();
  if (name == "mushroom_class_last") return Schema::mushroom_class_last();
  if (name == "abalone") return Schema::abalone();
  fail(Errc::invalid_parameter, "unknown schema '" + name + "'");
}

void parse_dataset(Section s, DatasetSpec& d, const std::filesystem::path& base_dir) {
  const auto kind = s.get<std::string>("kind");
  if (kind == "mnist") d.kind = DatasetKind::mnist;
  else if (kind == "csv") d.kind = DatasetKind::csv;
  else fail(Errc::invalid_parameter, "dataset.kind must be mnist or csv");
  std::filesystem::path root = s.get<std::string>("root", "");
  if (root.is_relative() && !base_dir.empty()) root = base_dir / root;
  d.root = root.lexically_normal();
  if (d.kind == DatasetKind::mnist) {
    d.train_images = s.get<std::string>("train_images");
    d.train_labels = s.get<std::string>("train_labels");
    d.test_images = s.get<std::string>("test_images", "");
    d.test_labels = s.get<std::string>("test_labels", "");
  } else {
    d.path = s.get<std::string>("path");
    s.touch("schema");
    const json& sc = s.at("schema");
    if (sc.is_string()) {
      d.schema_name = sc.get<std::string>();
      d.schema = named_schema(d.schema_name);
    } else {
      d.schema_name = "custom";
      Section ss(sc, s.path() + ".schema");
      d.schema = Schema{};
      for (const auto& c : ss.at("columns")) {
        Section cs(c, ss.path() + ".columns[]");
        d.schema.columns.push_back({cs.get<std::string>("name"), column_kind(cs.get<std::string>("kind"))});
      }
      const auto delim = ss.get<std::string>("delimiter", ",");
      if (delim == "whitespace" || delim.empty()) d.schema.delimiter = 0;
      else if (delim.size() == 1) d.schema.delimiter = delim[0];
      else fail(Errc::invalid_parameter, "schema.delimiter must be one character or \"whitespace\"");
      d.schema.skip_lines = ss.get<int>("skip_lines", 0);
      d.schema.comment_prefix = ss.get<std::string>("comment_prefix", "@");
    }
  }
  d.n_train = s.get<Eigen::Index>("n_train");
  d.n_test = s.get<Eigen::Index>("n_test", 0);
  d.split_seed = s.opt_seed("split_seed");
  d.stratified = s.get<bool>("stratified", false);
  d.normalize = s.opt<bool>("normalize");
}

json schema_json(const DatasetSpec& d) {
  if (d.schema_name != "custom" && !d.schema_name.empty()) return d.schema_name;
  json cols = json::array();
  for (const auto& c : d.schema.columns) cols.push_back({{"name", c.name}, {"kind", column_kind_name(c.kind)}});
  return {{"columns", cols},
          {"delimiter", d.schema.delimiter == 0 ? std::string("whitespace") : std::string(1, d.schema.delimiter)},
          {"skip_lines", d.schema.skip_lines},
          {"comment_prefix", d.schema.comment_prefix}};
}

template <class T> json opt_json(const std::optional<T>& v) { return v ? json(*v) : json(nullptr); }

json dataset_json(const DatasetSpec& d) {
  json j{{"kind", d.kind == DatasetKind::mnist ? "mnist" : "csv"},
         {"root", d.root.string()},
         {"n_train", d.n_train},
         {"n_test", d.n_test},
         {"split_seed", opt_json(d.split_seed)},
         {"stratified", d.stratified},
         {"normalize", opt_json(d.normalize)}};
  if (d.kind == DatasetKind::mnist) {
    j["train_images"] = d.train_images.string();
    j["train_labels"] = d.train_labels.string();
    j["test_images"] = d.test_images.string();
    j["test_labels"] = d.test_labels.string();
  } else {
    j["path"] = d.path.string();
    j["schema"] = schema_json(d);
  }
  return j;
}

json embedding_json(const ExperimentConfig& c) {
  const EmbeddingSpec& e = c.embedding;
  json j{{"kind", embedding_kind_name(e.kind)}, {"seed", opt_json(c.embedding_seed)}};
  switch (e.kind) {
  case EmbeddingKind::noise:
    j["rho"] = e.rho;
    j["correlation_length"] = e.correlation_length;
    break;
  case EmbeddingKind::fourier:
    j["n"] = e.n_frequencies;
    j["phases"] = e.carrier_phases;
    break;
  case EmbeddingKind::constant:
    j["value"] = e.constant_value;
    break;
  case EmbeddingKind::custom:
    j["path"] = e.custom_path.string();
    break;
  }
  return j;
}

json feature_json(const ExperimentConfig& c) {
  const LayoutSpec& l = c.layout;
  json encoder{{"layout", l.kind == LayoutKind::image ? "image" : "blocks"},
               {"grid_side", l.grid_side},
               {"cell", l.cell},
               {"image_rows", l.image_rows},
               {"image_cols", l.image_cols},
               {"pad_phase", l.pad_phase},
               {"phase_scale", c.phase_scale},
               {"phase_levels", opt_json(c.phase_levels)}};
  json op{{"kind", operator_kind_name(c.op.kind)}};
  if (c.op.kind == OperatorKind::dft2) op["pad_factor"] = c.op.pad_factor;
  else {
    op["output_side"] = c.op.output_side;
    op["seed"] = opt_json(c.operator_seed);
  }
  const DetectorSpec& d = c.detector;
  json det{{"i_sat", d.i_sat ? json(*d.i_sat) : json("auto")},
           {"exposure", d.exposure},
           {"calibration_samples", d.calibration_samples},
           {"linear", d.linear},
           {"noise_sigma", d.noise_sigma},
           {"noise_seed", opt_json(d.noise_seed)},
           {"readout_levels", opt_json(d.readout_levels)},
           {"channels", d.channels},
           {"bin", d.bin}};
  return {{"profile", profile_name(c.profile)},
          {"dataset", dataset_json(c.dataset)},
          {"encoder", encoder},
          {"embedding", embedding_json(c)},
          {"operator", op},
          {"detector", det}};
}

json full_json(const ExperimentConfig& c) {
  json j = feature_json(c);
  json readout{{"validation_fraction", c.readout.validation_fraction}};
  if (c.readout.lambda) readout["lambda"] = *c.readout.lambda;
  else readout["lambda_grid"] = c.readout.lambda_grid;
  j["readout"] = readout;
  j["name"] = c.name;
  j["threads"] = c.threads;
  j["memory_budget_mb"] = c.memory_budget_mb;
  j["output"] = {{"dir", c.output.dir.string()},
                 {"model", c.output.model.string()},
                 {"features", c.output.features.string()},
                 {"binary_features", c.output.binary_features}};
  return j;
}

ExperimentConfig from_json(const json& root, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section s(root, "config");
  c.name = s.get<std::string>("name", "experiment");
  const auto profile = s.get<std::string>("profile", "numerical");
  if (profile == "numerical") c.profile = Profile::numerical;
  else if (profile == "hardware_faithful") c.profile = Profile::hardware_faithful;
  else fail(Errc::invalid_parameter, "profile must be numerical or hardware_faithful");

  parse_dataset(s.sub("dataset"), c.dataset, base_dir);

  {
    Section e = s.sub("encoder");
    const auto layout = e.get<std::string>("layout", "image");
    if (layout == "image") c.layout.kind = LayoutKind::image;
    else if (layout == "blocks") c.layout.kind = LayoutKind::blocks;
    else fail(Errc::invalid_parameter, "encoder.layout must be image or blocks");
    c.layout.grid_side = e.get<int>("grid_side");
    c.layout.cell = e.get<int>("cell", c.layout.cell);
    c.layout.image_rows = e.get<int>("image_rows", c.layout.image_rows);
    c.layout.image_cols = e.get<int>("image_cols", c.layout.image_cols);
    c.layout.pad_phase = e.get<double>("pad_phase", 0.0);
    c.phase_scale = e.get<double>("phase_scale", kPi);
    c.phase_levels = e.opt<int>("phase_levels");
  }
  {
    Section e = s.sub("embedding");
    const auto kind = e.get<std::string>("kind");
    if (kind == "noise") {
      c.embedding.kind = EmbeddingKind::noise;
      e.touch("rho_pi");
      if (e.has("rho_pi")) c.embedding.rho = e.get<double>("rho_pi") * kPi;
      else c.embedding.rho = e.get<double>("rho");
      e.touch("rho");
      c.embedding.correlation_length = e.get<int>("correlation_length", 1);
    } else if (kind == "fourier") {
      c.embedding.kind = EmbeddingKind::fourier;
      c.embedding.n_frequencies = e.get<int>("n");
      c.embedding.carrier_phases = e.get<std::vector<double>>("phases", {});
    } else if (kind == "constant") {
      c.embedding.kind = EmbeddingKind::constant;
      c.embedding.constant_value = e.get<double>("value", 0.0);
    } else if (kind == "custom") {
      c.embedding.kind = EmbeddingKind::custom;
      std::filesystem::path p = e.get<std::string>("path");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.embedding.custom_path = p.lexically_normal();
    } else {
      fail(Errc::invalid_parameter, "embedding.kind must be noise, fourier, constant or custom");
    }
    c.embedding_seed = e.opt_seed("seed");
  }
  {
    Section o = s.sub("operator");
    const auto kind = o.get<std::string>("kind", "dft2");
    if (kind == "dft2") {
      c.op.kind = OperatorKind::dft2;
      c.op.pad_factor = o.get<int>("pad_factor", 1);
    } else if (kind == "gaussian") {
      c.op.kind = OperatorKind::gaussian;
      c.op.output_side = o.get<int>("output_side", 0);
      c.operator_seed = o.opt_seed("seed");
    } else {
      fail(Errc::invalid_parameter, "operator.kind must be dft2 or gaussian");
    }
  }
  {
    Section d = s.sub("detector");
    d.touch("i_sat");
    if (d.has("i_sat")) {
      const json& v = d.at("i_sat");
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") fail(Errc::invalid_parameter, "detector.i_sat must be a number or \"auto\"");
      } else {
        c.detector.i_sat = d.get<double>("i_sat");
      }
    }
    c.detector.exposure = d.get<double>("exposure", 1.0);
    c.detector.calibration_samples = d.get<int>("calibration_samples", 256);
    c.detector.linear = d.get<bool>("linear", false);
    c.detector.noise_sigma = d.get<double>("noise_sigma", 0.0);
    c.detector.noise_seed = d.opt_seed("noise_seed");
    c.detector.readout_levels = d.opt<int>("readout_levels");
    c.detector.channels = d.get<int>("channels");
    c.detector.bin = d.get<int>("bin", 1);
  }
  {
    s.touch("readout");
    if (s.has("readout")) {
      Section r = s.sub("readout");
      c.readout.lambda = r.opt<double>("lambda");
      c.readout.lambda_grid = r.get<std::vector<double>>("lambda_grid", {});
      c.readout.validation_fraction = r.get<double>("validation_fraction", 0.1);
    }
    if (!c.readout.lambda && c.readout.lambda_grid.empty()) c.readout.lambda_grid = default_lambda_grid();
  }
  c.threads = s.get<int>("threads", 0);
  c.memory_budget_mb = s.get<std::size_t>("memory_budget_mb", 1024);
  {
    s.touch("output");
    if (s.has("output")) {
      Section o = s.sub("output");
      c.output.dir = o.get<std::string>("dir", "");
      c.output.model = o.get<std::string>("model", "");
      c.output.features = o.get<std::string>("features", "");
      c.output.binary_features = o.get<bool>("binary_features", true);
    }
  }
  return c;
}

} // namespace

std::filesystem::path DatasetSpec::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute() || root.empty()) return p;
  return (root / p).lexically_normal();
}

int ExperimentConfig::effective_phase_levels() const {
  if (phase_levels) return *phase_levels;
  return profile == Profile::hardware_faithful ? kHardwarePhaseLevels : 0;
}

int ExperimentConfig::effective_readout_levels() const {
  if (detector.readout_levels) return *detector.readout_levels;
  return profile == Profile::hardware_faithful ? kHardwareReadoutLevels : 0;
}

bool ExperimentConfig::effective_normalize() const {
  if (dataset.normalize) return *dataset.normalize;
  return dataset.kind == DatasetKind::csv;
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& w) { fail(Errc::invalid_parameter, w); };
  if (dataset.n_train <= 0) bad("dataset.n_train must be positive");
  if (dataset.n_test < 0) bad("dataset.n_test must be >= 0");
  if (!dataset.split_seed) fail(Errc::missing_seed, "dataset.split_seed is required");
  if (dataset.kind == DatasetKind::mnist && dataset.n_test > 0 && (dataset.test_images.empty() || dataset.test_labels.empty()))
    fail(Errc::missing_field, "dataset.test_images and dataset.test_labels are required when n_test > 0");
  if (dataset.kind == DatasetKind::csv && dataset.schema.columns.empty()) bad("dataset.schema has no columns");
  if (layout.grid_side < 1) bad("encoder.grid_side must be positive");
  if (layout.kind == LayoutKind::image && (layout.cell < 1 || layout.image_rows < 1 || layout.image_cols < 1))
    bad("encoder image layout needs positive cell and image sizes");
  if (!(phase_scale > 0.0 && phase_scale <= kTwoPi)) bad("encoder.phase_scale must lie in (0, 2pi]");
  if (phase_levels && *phase_levels != 0 && *phase_levels < 2) bad("encoder.phase_levels must be 0 or >= 2");
  if (embedding.kind == EmbeddingKind::noise) {
    if (!(embedding.rho >= 0.0 && embedding.rho <= kPi)) bad("embedding.rho must lie in [0, pi]");
    if (embedding.correlation_length < 1 || embedding.correlation_length > layout.grid_side)
      bad("embedding.correlation_length must lie in [1, grid_side]");
    if (!embedding_seed) fail(Errc::missing_seed, "embedding.seed is required for noise embeddings");
  }
  if (embedding.kind == EmbeddingKind::fourier) {
    if (embedding.n_frequencies < 1) bad("embedding.n must be >= 1");
    if (embedding.carrier_phases.empty() && !embedding_seed)
      fail(Errc::missing_seed, "embedding.seed is required when fourier phases are not listed");
    if (!embedding.carrier_phases.empty() && static_cast<int>(embedding.carrier_phases.size()) != embedding.n_frequencies)
      bad("embedding.phases must have n entries");
  }
  if (embedding.kind == EmbeddingKind::constant && !(embedding.constant_value >= 0.0 && embedding.constant_value <= kPi))
    bad("embedding.value must lie in [0, pi]");
  if (op.kind == OperatorKind::dft2 && op.pad_factor < 1) bad("operator.pad_factor must be >= 1");
  if (op.kind == OperatorKind::gaussian) {
    if (op.output_side < 0) bad("operator.output_side must be >= 0");
    if (!operator_seed) fail(Errc::missing_seed, "operator.seed is required for gaussian operators");
  }
  if (detector.i_sat && !(*detector.i_sat > 0.0)) bad("detector.i_sat must be > 0");
  if (!(detector.exposure > 0.0)) bad("detector.exposure must be > 0");
  if (detector.calibration_samples < 1) bad("detector.calibration_samples must be >= 1");
  if (!(detector.noise_sigma >= 0.0)) bad("detector.noise_sigma must be >= 0");
  if (detector.noise_sigma > 0.0 && !detector.noise_seed)
    fail(Errc::missing_seed, "detector.noise_seed is required when noise_sigma > 0");
  if (detector.readout_levels && *detector.readout_levels != 0 && *detector.readout_levels < 2)
    bad("detector.readout_levels must be 0 or >= 2");
  if (detector.channels < 1) bad("detector.channels must be >= 1");
  if (detector.bin < 1) bad("detector.bin must be >= 1");
  if (readout.lambda && !(*readout.lambda >= 0.0)) bad("readout.lambda must be >= 0");
  if (!readout.lambda) {
    if (readout.lambda_grid.empty()) bad("readout.lambda_grid must not be empty");
    for (double l : readout.lambda_grid)
      if (!(l >= 0.0)) bad("readout.lambda_grid entries must be >= 0");
    if (!(readout.validation_fraction > 0.0 && readout.validation_fraction < 1.0))
      bad("readout.validation_fraction must lie in (0, 1)");
  }
  if (threads < 0) bad("threads must be >= 0");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::invalid_parameter, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = from_json(j, base_dir);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::missing_field, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
}

std::string to_json(const ExperimentConfig& c, bool pretty) { return full_json(c).dump(pretty ? 2 : -1); }

std::uint64_t feature_hash(const ExperimentConfig& c) { return fnv1a64(feature_json(c).dump()); }

std::uint64_t config_hash(const ExperimentConfig& c) {
  json j = full_json(c);
  j.erase("name");
  j.erase("threads");
  j.erase("memory_budget_mb");
  j.erase("output");
  return fnv1a64(j.dump());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_override(ExperimentConfig& c, const std::string& key, const std::string& value) {
  json j = full_json(c);
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  json::json_pointer ptr("/" + [&] {
    std::string p = key;
    for (char& ch : p)
      if (ch == '.') ch = '/';
    return p;
  }());
  if (key == "embedding.rho_pi") {
    j["embedding"].erase("rho");
  }
  try {
    j[ptr] = v;
  } catch (const json::exception& e) {
    fail(Errc::invalid_parameter, "cannot set " + key + ": " + e.what());
  }
  if (key == "readout.lambda") j["readout"].erase("lambda_grid");
  if (key == "readout.lambda_grid") j["readout"].erase("lambda");
  ExperimentConfig out = from_json(j, {});
  out.validate();
  c = std::move(out);
}

std::string profile_name(Profile p) { return p == Profile::numerical ? "numerical" : "hardware_faithful"; }

std::string embedding_kind_name(EmbeddingKind k) {
  switch (k) {
  case EmbeddingKind::noise: return "noise";
  case EmbeddingKind::fourier: return "fourier";
  case EmbeddingKind::constant: return "constant";
  case EmbeddingKind::custom: return "custom";
  }
  return "noise";
}

std::string operator_kind_name(OperatorKind k) { return k == OperatorKind::dft2 ? "dft2" : "gaussian"; }

} // namespace pelm
