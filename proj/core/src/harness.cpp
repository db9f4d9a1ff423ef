#include "pelm/harness.hpp"

#include "pelm/errors.hpp"
#include "pelm/model_io.hpp"
#include "pelm/report.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace pelm {

namespace {

using clock_type = std::chrono::steady_clock;

constexpr Eigen::Index kBlockRows = 2048;
constexpr std::uint64_t kTestStream = kTestNoiseStream;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <class F> auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.what());
  }
}

Dataset take_rows(const Dataset& full, Eigen::Index n, std::uint64_t seed, bool stratified) {
  SplitSpec s;
  s.n_train = n;
  s.n_test = 0;
  s.shuffle_seed = seed;
  s.stratified = stratified;
  s.normalize = false;
  return split(full, s).first;
}

/// Feature rows of a sample set, either sliced from a stored matrix or
/// propagated on demand in fixed-size blocks.
class FeatureSource {
public:
  FeatureSource(const Pipeline& p, const RowMatrix& samples, const RowMatrix* stored, std::uint64_t stream, int threads,
                double& seconds)
      : p_(p), samples_(samples), stored_(stored), stream_(stream), threads_(threads), seconds_(seconds) {}

  Eigen::Index rows() const { return samples_.rows(); }

  RowMatrix block(Eigen::Index begin, Eigen::Index count) const {
    if (stored_) return stored_->middleRows(begin, count);
    const auto t0 = clock_type::now();
    RowMatrix h = build_features(samples_.middleRows(begin, count), p_, threads_, stream_ + static_cast<std::uint64_t>(begin)).values;
    seconds_ += seconds_since(t0);
    return h;
  }

  template <class F> void for_blocks(F&& f) const {
    for (Eigen::Index b = 0; b < rows(); b += kBlockRows) {
      const Eigen::Index n = std::min(kBlockRows, rows() - b);
      f(b, block(b, n));
    }
  }

  Matrix predict_all(const ReadoutModel& model) const {
    Matrix y(rows(), model.beta.cols());
    for_blocks([&](Eigen::Index b, const RowMatrix& h) { y.middleRows(b, h.rows()) = predict(h, model); });
    return y;
  }

private:
  const Pipeline& p_;
  const RowMatrix& samples_;
  const RowMatrix* stored_;
  std::uint64_t stream_;
  int threads_;
  double& seconds_;
};

std::uint64_t remix(std::uint64_t seed, int repeat) { return repeat == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(repeat)); }

} // namespace

double RunResult::test_score() const {
  if (!test) return std::numeric_limits<double>::quiet_NaN();
  return classification ? 1.0 - test->accuracy : test->nrmsd;
}

double RunResult::train_score() const { return classification ? 1.0 - train.accuracy : train.nrmsd; }

PreparedData prepare_data(const ExperimentConfig& c) {
  return in_stage("data", [&] {
    PreparedData out;
    const DatasetSpec& d = c.dataset;
    const std::uint64_t seed = d.split_seed.value_or(0);
    const bool normalize = c.effective_normalize();
    if (d.kind == DatasetKind::mnist) {
      {
        const Dataset full = load_mnist(d.resolve(d.train_images), d.resolve(d.train_labels));
        out.train = take_rows(full, d.n_train, seed, d.stratified);
      }
      if (d.n_test > 0) {
        const Dataset full = load_mnist(d.resolve(d.test_images), d.resolve(d.test_labels));
        out.test = take_rows(full, d.n_test, mix_seed(seed, 1), d.stratified);
      } else {
        out.test = out.train.subset({});
      }
      if (normalize) {
        const auto scaler = MinMaxScaler::fit(out.train.samples);
        scaler.apply(out.train.samples);
        if (out.test.size() > 0) scaler.apply(out.test.samples);
        out.train_scaler = scaler;
      }
    } else {
      CsvLoadResult loaded = load_uci_csv(d.resolve(d.path), d.schema);
      SplitSpec s;
      s.n_train = d.n_train;
      s.n_test = d.n_test;
      s.shuffle_seed = seed;
      s.stratified = d.stratified;
      s.normalize = normalize;
      MinMaxScaler fitted;
      std::tie(out.train, out.test) = split(loaded.dataset, s, &fitted);
      if (normalize) out.train_scaler = fitted;
      out.codebook = std::move(loaded.codebook);
      out.load_scaler = std::move(loaded.scaler);
      out.unknown_categories = loaded.unknown_categories;
    }
    return out;
  });
}

Pipeline build_pipeline(const ExperimentConfig& c, const RowMatrix* calibration, std::optional<double> i_sat) {
  return in_stage("pipeline", [&] {
    Pipeline p;
    const LayoutSpec& l = c.layout;
    if (l.kind == LayoutKind::image) {
      p.encoder.layout = GridLayout::image(l.image_rows, l.image_cols, l.cell, l.grid_side);
    } else {
      if (!calibration) fail(Errc::invalid_parameter, "block layout needs the attribute count");
      p.encoder.layout = GridLayout::equal_blocks(static_cast<int>(calibration->cols()), l.grid_side);
    }
    p.encoder.layout.pad_phase = l.pad_phase;
    p.encoder.phase_scale = c.phase_scale;
    p.encoder.phase_levels = c.effective_phase_levels();
    p.encoder.validate();

    EmbeddingSpec e = c.embedding;
    e.seed = c.embedding_seed.value_or(0);
    p.embedding = build_embedding(e, l.grid_side);

    OperatorSpec o = c.op;
    o.seed = c.operator_seed.value_or(0);
    p.op = TransferOperator::make(o, l.grid_side);

    const DetectorSpec& d = c.detector;
    p.detector.exposure = d.exposure;
    p.detector.calibration_samples = d.calibration_samples;
    p.detector.linear = d.linear;
    p.detector.noise_sigma = d.noise_sigma;
    p.detector.noise_seed = d.noise_seed.value_or(0);
    p.detector.readout_levels = c.effective_readout_levels();
    p.detector.channels = ChannelLayout::centered(d.channels, d.bin, p.op.output_side());
    p.config_hash = feature_hash(c);

    if (i_sat) {
      p.i_sat = *i_sat;
    } else if (d.i_sat) {
      p.i_sat = *d.i_sat;
    } else {
      if (!calibration) fail(Errc::invalid_parameter, "auto-exposure needs calibration samples");
      p.i_sat = calibrate_exposure(p, *calibration, c.threads);
    }
    p.detector.i_sat = p.i_sat;
    p.validate();
    return p;
  });
}

RunResult run_experiment(const ExperimentConfig& c, const PreparedData& data, RunArtifacts* artifacts,
                         const RunOptions& options) {
  const auto t_start = clock_type::now();
  c.validate();
  RunResult r;
  r.config_hash = config_hash(c);
  r.feature_hash = feature_hash(c);
  r.split_seed = c.dataset.split_seed.value_or(0);
  r.embedding_seed = c.embedding_seed;
  r.operator_seed = c.operator_seed;
  r.noise_seed = c.detector.noise_seed;
  r.n_train = data.train.size();
  r.n_test = data.test.size();
  r.m_channels = c.detector.channels;
  r.classification = data.train.task.is_classification();

  double feature_seconds = 0.0;
  const auto t_pipe = clock_type::now();
  std::optional<double> cached_isat;
  if (options.cached && artifacts && artifacts->pipeline.i_sat > 0.0) cached_isat = artifacts->pipeline.i_sat;
  Pipeline pipeline = build_pipeline(c, &data.train.samples, cached_isat);
  feature_seconds += seconds_since(t_pipe);
  r.i_sat = pipeline.i_sat;
  const Eigen::Index n = data.train.size();
  const Eigen::Index m = pipeline.n_channels();

  const RowMatrix* stored_train = nullptr;
  const RowMatrix* stored_test = nullptr;
  FeatureSplits local;
  if (options.cached) {
    const FeatureSplits& fc = *options.cached;
    if (fc.train.config_hash != r.feature_hash || fc.train.values.rows() != n || fc.train.values.cols() != m ||
        (r.n_test > 0 && (fc.test.values.rows() != r.n_test || fc.test.values.cols() != m)))
      fail(Errc::dimension_mismatch, "features: cached features do not match this configuration");
    stored_train = &fc.train.values;
    stored_test = r.n_test > 0 ? &fc.test.values : nullptr;
  } else {
    const double bytes = static_cast<double>(n + r.n_test) * static_cast<double>(m) * sizeof(double);
    if (options.keep_features || bytes <= static_cast<double>(c.memory_budget_mb) * 1024.0 * 1024.0) {
      const auto t0 = clock_type::now();
      local.train = in_stage("features", [&] { return build_features(data.train.samples, pipeline, c.threads, 0); });
      if (r.n_test > 0)
        local.test = in_stage("features", [&] { return build_features(data.test.samples, pipeline, c.threads, kTestStream); });
      else
        local.test.values.resize(0, m);
      local.test.config_hash = pipeline.config_hash;
      feature_seconds += seconds_since(t0);
      stored_train = &local.train.values;
      stored_test = r.n_test > 0 ? &local.test.values : nullptr;
    }
  }

  FeatureSource train_src(pipeline, data.train.samples, stored_train, 0, c.threads, feature_seconds);
  FeatureSource test_src(pipeline, data.test.samples, stored_test, kTestStream, c.threads, feature_seconds);

  const TargetMatrix targets = TargetMatrix::from(data.train);
  const bool search = !c.readout.lambda && c.readout.lambda_grid.size() > 1;
  const Eigen::Index n_val = search ? static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * c.readout.validation_fraction)) : 0;
  const Eigen::Index n_fit = n - n_val;
  if (search && (n_val < 1 || n_fit < 1)) fail(Errc::invalid_parameter, "readout: training set too small for a validation hold-out");

  GramAccumulator fit(m, targets.values.cols());
  GramAccumulator val(m, targets.values.cols());
  RowMatrix h_val(n_val, m);
  const double t_feat_before = feature_seconds;
  const auto t_acc = clock_type::now();
  in_stage("readout", [&] {
    train_src.for_blocks([&](Eigen::Index b, const RowMatrix& h) {
      const Eigen::Index rows = h.rows();
      const Eigen::Index in_fit = std::clamp<Eigen::Index>(n_fit - b, 0, rows);
      if (in_fit > 0) fit.add(h.topRows(in_fit), targets.values.middleRows(b, in_fit));
      if (in_fit < rows) {
        const Eigen::Index nv = rows - in_fit;
        val.add(h.bottomRows(nv), targets.values.middleRows(b + in_fit, nv));
        h_val.middleRows(b + in_fit - n_fit, nv) = h.bottomRows(nv);
      }
    });
  });

  double readout_seconds = seconds_since(t_acc) - (feature_seconds - t_feat_before);
  const auto t_solve = clock_type::now();
  double lambda = c.readout.lambda ? *c.readout.lambda : c.readout.lambda_grid.front();
  if (search) {
    const Vector val_targets = data.train.targets.tail(n_val);
    double best = std::numeric_limits<double>::infinity();
    for (double l : c.readout.lambda_grid) {
      double loss = std::numeric_limits<double>::infinity();
      try {
        const ReadoutModel trial = solve_ridge(fit.hth, fit.htt, l, targets.encoding);
        loss = selection_loss(predict(h_val, trial), val_targets, data.train.task);
      } catch (const Error& e) {
        if (e.code() != Errc::singular_system) throw Error(e.code(), std::string("readout: ") + e.what());
      }
      r.lambda_scores.push_back({l, loss});
      if (loss < best) {
        best = loss;
        lambda = l;
      }
    }
    if (!std::isfinite(best)) fail(Errc::singular_system, "readout: every lambda in the grid failed");
  }
  fit += val;
  ReadoutModel model = in_stage("readout", [&] { return solve_ridge(fit.hth, fit.htt, lambda, targets.encoding); });
  model.pipeline_hash = r.feature_hash;
  r.lambda = lambda;
  readout_seconds += seconds_since(t_solve);

  in_stage("evaluate", [&] {
    r.train = evaluate(train_src.predict_all(model), data.train);
    if (r.n_test > 0) {
      Matrix y = test_src.predict_all(model);
      r.test = evaluate(y, data.test);
      if (artifacts) artifacts->test_predictions = std::move(y);
    }
  });

  r.seconds_features = feature_seconds;
  r.seconds_readout = readout_seconds;
  r.seconds_total = seconds_since(t_start);
  if (artifacts) {
    artifacts->model = model;
    artifacts->pipeline = pipeline;
    if (stored_train && !options.cached) artifacts->features = std::move(local);
  }
  return r;
}

RunResult run_experiment(const ExperimentConfig& c) {
  const PreparedData data = prepare_data(c);
  RunArtifacts art;
  RunOptions opt;
  opt.keep_features = !c.output.features.empty();
  RunResult r = run_experiment(c, data, &art, opt);

  if (!c.output.model.empty()) {
    ModelFile mf;
    mf.config = c;
    mf.readout = *art.model;
    mf.i_sat = art.pipeline.i_sat;
    mf.task = data.train.task;
    mf.class_names = data.train.class_names;
    mf.codebook = data.codebook;
    mf.load_scaler = data.load_scaler;
    mf.train_scaler = data.train_scaler;
    mf.feature_hash = r.feature_hash;
    mf.config_hash = r.config_hash;
    in_stage("output", [&] { save_model(c.output.model, mf); });
  }
  if (!c.output.features.empty() && art.features) {
    in_stage("output", [&] {
      const std::string prefix = c.output.features.string();
      write_features(prefix + ".train.feat", art.features->train, c.output.binary_features);
      if (r.n_test > 0) write_features(prefix + ".test.feat", art.features->test, c.output.binary_features);
    });
  }
  if (!c.output.dir.empty()) {
    SweepReport rep;
    rep.name = c.name;
    rep.runs.push_back(r);
    rep.summary = summarize(rep.runs);
    in_stage("output", [&] { emit_report(rep, c.output.dir, data.train.class_names); });
  }
  return r;
}

RunResult evaluate_saved(const ModelFile& model, const Dataset& data, int threads, Matrix* predictions) {
  const auto t0 = clock_type::now();
  const ExperimentConfig& c = model.config;
  if (data.task != model.task) fail(Errc::schema_mismatch, "evaluation data task differs from the model task");
  Pipeline p = build_pipeline(c, &data.samples, model.i_sat);
  if (p.config_hash != model.feature_hash) fail(Errc::count_mismatch, "pipeline hash differs from the model");
  RunResult r;
  r.config_hash = model.config_hash;
  r.feature_hash = model.feature_hash;
  r.split_seed = c.dataset.split_seed.value_or(0);
  r.embedding_seed = c.embedding_seed;
  r.operator_seed = c.operator_seed;
  r.noise_seed = c.detector.noise_seed;
  r.n_test = data.size();
  r.m_channels = p.n_channels();
  r.lambda = model.readout.lambda;
  r.i_sat = p.i_sat;
  r.classification = data.task.is_classification();
  double feature_seconds = 0.0;
  FeatureSource src(p, data.samples, nullptr, kTestStream, threads, feature_seconds);
  Matrix y = in_stage("evaluate", [&] { return src.predict_all(model.readout); });
  r.test = in_stage("evaluate", [&] { return evaluate(y, data); });
  r.seconds_features = feature_seconds;
  r.seconds_total = seconds_since(t0);
  if (predictions) *predictions = std::move(y);
  return r;
}

Dataset load_for_model(const ModelFile& model, const std::filesystem::path& path, const std::filesystem::path& labels_path) {
  return in_stage("data", [&] {
    Dataset d;
    const ExperimentConfig& c = model.config;
    if (c.dataset.kind == DatasetKind::mnist) {
      if (labels_path.empty()) fail(Errc::missing_field, "IDX evaluation needs both an image and a label file");
      d = load_mnist(path, labels_path);
    } else {
      d = load_uci_csv(path, c.dataset.schema, model.codebook ? &*model.codebook : nullptr,
                       model.load_scaler ? &*model.load_scaler : nullptr)
              .dataset;
    }
    if (model.train_scaler) model.train_scaler->apply(d.samples);
    return d;
  });
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "rho") return SweepAxis::rho;
  if (s == "rho_pi") return SweepAxis::rho_pi;
  if (s == "l" || s == "correlation_length") return SweepAxis::correlation_length;
  if (s == "n" || s == "n_frequencies") return SweepAxis::n_frequencies;
  if (s == "M" || s == "m" || s == "channels") return SweepAxis::m_channels;
  if (s == "i_sat") return SweepAxis::i_sat;
  if (s == "lambda") return SweepAxis::lambda;
  fail(Errc::invalid_parameter, "unknown sweep axis '" + s + "'");
}

std::string axis_name(SweepAxis a) {
  switch (a) {
  case SweepAxis::rho: return "rho";
  case SweepAxis::rho_pi: return "rho_pi";
  case SweepAxis::correlation_length: return "l";
  case SweepAxis::n_frequencies: return "n";
  case SweepAxis::m_channels: return "M";
  case SweepAxis::i_sat: return "i_sat";
  case SweepAxis::lambda: return "lambda";
  }
  return "?";
}

void SweepSpec::validate() const {
  if (values.empty()) fail(Errc::invalid_parameter, "sweep needs at least one value");
  if (repeats < 1) fail(Errc::invalid_parameter, "sweep repeats must be >= 1");
  for (double v : values) sweep_cell(*this, v, 0);
}

SweepSpec parse_sweep(const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::invalid_parameter, std::string("sweep is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("sweep")) fail(Errc::missing_field, "sweep file needs a \"sweep\" section");
  const auto& s = j.at("sweep");
  SweepSpec spec;
  try {
    spec.axis = parse_axis(s.at("axis").get<std::string>());
    spec.values = s.at("values").get<std::vector<double>>();
    spec.repeats = s.value("repeats", 1);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_parameter, std::string("sweep section: ") + e.what());
  }
  nlohmann::json base = j;
  base.erase("sweep");
  spec.base = parse_config(base.dump(), base_dir);
  spec.validate();
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::missing_field, "cannot open sweep " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep(buf.str(), std::filesystem::absolute(path).parent_path());
}

ExperimentConfig sweep_cell(const SweepSpec& spec, double v, int repeat) {
  ExperimentConfig c = spec.base;
  auto as_int = [&](const char* what) {
    if (v != std::round(v)) fail(Errc::invalid_parameter, std::string(what) + " sweep values must be integers");
    return static_cast<int>(v);
  };
  switch (spec.axis) {
  case SweepAxis::rho: c.embedding.rho = v; break;
  case SweepAxis::rho_pi: c.embedding.rho = v * kPi; break;
  case SweepAxis::correlation_length: c.embedding.correlation_length = as_int("l"); break;
  case SweepAxis::n_frequencies: c.embedding.n_frequencies = as_int("n"); c.embedding.carrier_phases.clear(); break;
  case SweepAxis::m_channels: c.detector.channels = as_int("M"); break;
  case SweepAxis::i_sat: c.detector.i_sat = v; break;
  case SweepAxis::lambda: c.readout.lambda = v; break;
  }
  if (repeat > 0) {
    if (c.embedding_seed) c.embedding_seed = remix(*c.embedding_seed, repeat);
    if (c.operator_seed) c.operator_seed = remix(*c.operator_seed, repeat);
    if (c.detector.noise_seed) c.detector.noise_seed = remix(*c.detector.noise_seed, repeat);
  }
  c.validate();
  return c;
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<const RunResult*>> groups;
  for (const auto& r : runs) {
    std::size_t g = 0;
    while (g < rows.size() && !(rows[g].axis == r.axis && rows[g].value == r.axis_value)) ++g;
    if (g == rows.size()) {
      rows.push_back({r.axis, r.axis_value});
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  auto stats = [](const std::vector<double>& xs, double& mean, double& sd) {
    mean = sd = 0.0;
    if (xs.empty()) {
      mean = sd = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
      for (double x : xs) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
    }
  };
  for (std::size_t g = 0; g < rows.size(); ++g) {
    std::vector<double> test, train, rmsd;
    for (const RunResult* r : groups[g]) {
      if (!r->ok()) {
        ++rows[g].failed;
        continue;
      }
      ++rows[g].n;
      train.push_back(r->train_score());
      if (r->test) {
        test.push_back(r->test_score());
        rmsd.push_back(r->test->rmsd);
      }
    }
    stats(test, rows[g].test_mean, rows[g].test_std);
    stats(train, rows[g].train_mean, rows[g].train_std);
    stats(rmsd, rows[g].rmsd_mean, rows[g].rmsd_std);
  }
  return rows;
}

SweepReport run_sweep(const SweepSpec& spec, const PreparedData& data, const ProgressFn& progress) {
  spec.validate();
  SweepReport rep;
  rep.name = spec.base.name;
  rep.axis = axis_name(spec.axis);
  const std::size_t nv = spec.values.size();
  std::vector<std::optional<RunResult>> cells(nv * static_cast<std::size_t>(spec.repeats));

  auto failed = [&](double v, int rep_i, const std::string& why) {
    RunResult r;
    r.axis = axis_name(spec.axis);
    r.axis_value = v;
    r.repeat = rep_i;
    r.status = "failed: " + why;
    return r;
  };
  auto finish = [&](std::size_t vi, int rep_i, RunResult r) {
    r.axis = axis_name(spec.axis);
    r.axis_value = spec.values[vi];
    r.repeat = rep_i;
    if (progress) progress(r);
    cells[vi * static_cast<std::size_t>(spec.repeats) + static_cast<std::size_t>(rep_i)] = std::move(r);
  };

  if (spec.axis == SweepAxis::lambda) {
    for (int rep_i = 0; rep_i < spec.repeats; ++rep_i) {
      RunArtifacts art;
      std::optional<FeatureSplits> feats;
      for (std::size_t vi = 0; vi < nv; ++vi) {
        try {
          const ExperimentConfig c = sweep_cell(spec, spec.values[vi], rep_i);
          RunOptions opt;
          if (feats) {
            opt.cached = &*feats;
          } else {
            opt.keep_features = true;
          }
          RunResult r = run_experiment(c, data, &art, opt);
          if (!feats && art.features) feats = std::move(art.features);
          finish(vi, rep_i, std::move(r));
        } catch (const std::exception& e) {
          finish(vi, rep_i, failed(spec.values[vi], rep_i, e.what()));
        }
      }
    }
  } else {
    for (std::size_t vi = 0; vi < nv; ++vi)
      for (int rep_i = 0; rep_i < spec.repeats; ++rep_i) {
        try {
          finish(vi, rep_i, run_experiment(sweep_cell(spec, spec.values[vi], rep_i), data));
        } catch (const std::exception& e) {
          finish(vi, rep_i, failed(spec.values[vi], rep_i, e.what()));
        }
      }
  }
  for (auto& c : cells) rep.runs.push_back(std::move(*c));
  rep.summary = summarize(rep.runs);
  return rep;
}

SweepReport run_sweep(const SweepSpec& spec, const ProgressFn& progress) {
  const PreparedData data = prepare_data(spec.base);
  SweepReport rep = run_sweep(spec, data, progress);
  if (!spec.base.output.dir.empty()) emit_report(rep, spec.base.output.dir, data.train.class_names);
  return rep;
}

} // namespace pelm
