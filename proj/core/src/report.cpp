#include "pelm/report.hpp"

#include "pelm/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pelm {

using json = nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string opt_seed(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : ""; }

json metrics_json(const Metrics& m, bool classification) {
  json j{{"n", m.n}, {"rmsd", m.rmsd}, {"nrmsd", m.nrmsd}};
  if (classification) {
    j["accuracy"] = m.accuracy;
    j["error"] = 1.0 - m.accuracy;
    json conf = json::array();
    for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
      conf.push_back(row);
    }
    j["confusion"] = conf;
  }
  return j;
}

json nan_safe(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

} // namespace

std::string runs_csv(const std::vector<RunResult>& runs) {
  std::ostringstream os;
  os << "run,axis,value,repeat,status,config_hash,feature_hash,split_seed,embedding_seed,operator_seed,noise_seed,"
        "n_train,n_test,M,lambda,i_sat,train_accuracy,train_rmsd,train_nrmsd,test_accuracy,test_error,test_rmsd,"
        "test_nrmsd,seconds_features,seconds_readout,seconds_total\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunResult& r = runs[i];
    const bool ok = r.ok();
    const bool cls = r.classification;
    os << i << ',' << csv_field(r.axis) << ',' << (r.axis.empty() ? "" : num(r.axis_value)) << ',' << r.repeat << ','
       << csv_field(r.status) << ',' << hash_hex(r.config_hash) << ',' << hash_hex(r.feature_hash) << ',' << r.split_seed
       << ',' << opt_seed(r.embedding_seed) << ',' << opt_seed(r.operator_seed) << ',' << opt_seed(r.noise_seed) << ','
       << r.n_train << ',' << r.n_test << ',' << r.m_channels << ',' << (ok ? num(r.lambda) : "") << ','
       << (ok ? num(r.i_sat) : "") << ',' << (ok && cls ? num(r.train.accuracy) : "") << ','
       << (ok ? num(r.train.rmsd) : "") << ',' << (ok ? num(r.train.nrmsd) : "") << ',';
    const bool t = ok && r.test.has_value();
    os << (t && cls ? num(r.test->accuracy) : "") << ',' << (t && cls ? num(1.0 - r.test->accuracy) : "") << ','
       << (t ? num(r.test->rmsd) : "") << ',' << (t ? num(r.test->nrmsd) : "") << ',' << num(r.seconds_features) << ','
       << num(r.seconds_readout) << ',' << num(r.seconds_total) << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "axis,value,n,failed,test_mean,test_std,train_mean,train_std,test_rmsd_mean,test_rmsd_std\n";
  for (const auto& s : rows)
    os << csv_field(s.axis) << ',' << (s.axis.empty() ? "" : num(s.value)) << ',' << s.n << ',' << s.failed << ','
       << num(s.test_mean) << ',' << num(s.test_std) << ',' << num(s.train_mean) << ',' << num(s.train_std) << ','
       << num(s.rmsd_mean) << ',' << num(s.rmsd_std) << '\n';
  return os.str();
}

std::string confusion_csv(const Eigen::MatrixXi& conf, const std::vector<std::string>& names) {
  auto name = [&](Eigen::Index k) {
    return static_cast<std::size_t>(k) < names.size() ? csv_field(names[static_cast<std::size_t>(k)]) : std::to_string(k);
  };
  std::ostringstream os;
  os << "true\\predicted";
  for (Eigen::Index c = 0; c < conf.cols(); ++c) os << ',' << name(c);
  os << '\n';
  for (Eigen::Index r = 0; r < conf.rows(); ++r) {
    os << name(r);
    for (Eigen::Index c = 0; c < conf.cols(); ++c) os << ',' << conf(r, c);
    os << '\n';
  }
  return os.str();
}

std::string report_json(const SweepReport& rep) {
  json runs = json::array();
  for (const auto& r : rep.runs) {
    json j{{"axis", r.axis},
           {"value", r.axis_value},
           {"repeat", r.repeat},
           {"status", r.status},
           {"config_hash", hash_hex(r.config_hash)},
           {"feature_hash", hash_hex(r.feature_hash)},
           {"seeds",
            {{"split", r.split_seed},
             {"embedding", r.embedding_seed ? json(*r.embedding_seed) : json(nullptr)},
             {"operator", r.operator_seed ? json(*r.operator_seed) : json(nullptr)},
             {"noise", r.noise_seed ? json(*r.noise_seed) : json(nullptr)}}},
           {"n_train", r.n_train},
           {"n_test", r.n_test},
           {"M", r.m_channels},
           {"timing", {{"features", r.seconds_features}, {"readout", r.seconds_readout}, {"total", r.seconds_total}}}};
    if (r.ok()) {
      j["lambda"] = r.lambda;
      j["i_sat"] = r.i_sat;
      json scores = json::array();
      for (const auto& s : r.lambda_scores) scores.push_back({{"lambda", s.lambda}, {"loss", nan_safe(std::isinf(s.loss) ? NAN : s.loss)}});
      j["lambda_scores"] = scores;
      j["train"] = metrics_json(r.train, r.classification);
      if (r.test) j["test"] = metrics_json(*r.test, r.classification);
    }
    runs.push_back(std::move(j));
  }
  json summary = json::array();
  for (const auto& s : rep.summary)
    summary.push_back({{"axis", s.axis},
                       {"value", s.value},
                       {"n", s.n},
                       {"failed", s.failed},
                       {"test_mean", nan_safe(s.test_mean)},
                       {"test_std", nan_safe(s.test_std)},
                       {"train_mean", nan_safe(s.train_mean)},
                       {"train_std", nan_safe(s.train_std)},
                       {"test_rmsd_mean", nan_safe(s.rmsd_mean)},
                       {"test_rmsd_std", nan_safe(s.rmsd_std)}});
  json doc{{"format", "pelm-report"}, {"version", 1}, {"name", rep.name}, {"axis", rep.axis}, {"runs", runs}, {"summary", summary}};
  return doc.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::unwritable_path, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::unwritable_path, "write failed: " + path.string());
}

void emit_report(const SweepReport& rep, const std::filesystem::path& dir, const std::vector<std::string>& class_names) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::unwritable_path, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "runs.csv", runs_csv(rep.runs));
  write_text(dir / "summary.csv", summary_csv(rep.summary));
  write_text(dir / "report.json", report_json(rep));
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const RunResult& r = rep.runs[i];
    if (r.ok() && r.test && r.classification)
      write_text(dir / ("confusion_" + std::to_string(i) + ".csv"), confusion_csv(r.test->confusion, class_names));
  }
}

} // namespace pelm
