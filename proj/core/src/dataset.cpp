#include "pelm/dataset.hpp"

#include "pelm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace pelm {

std::vector<int> Dataset::labels() const {
  std::vector<int> out(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) out[static_cast<std::size_t>(i)] = label(i);
  return out;
}

void Dataset::validate() const {
  auto bad = [](const std::string& why) { fail(Errc::invalid_dataset, why); };
  if (samples.rows() <= 0) bad("dataset has no samples");
  if (samples.cols() <= 0) bad("dataset has no attributes");
  if (targets.size() != samples.rows()) bad("targets length differs from sample count");
  if (!feature_names.empty() && static_cast<Eigen::Index>(feature_names.size()) != samples.cols())
    bad("feature_names length differs from attribute count");
  if (!samples.allFinite()) bad("non-finite sample value");
  if (samples.minCoeff() < 0.0 || samples.maxCoeff() > 1.0) bad("sample value outside [0,1]");
  if (task.is_classification()) {
    if (task.n_classes < 2) bad("classification task needs at least two classes");
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      const double t = targets(i);
      if (t != std::floor(t) || t < 0 || t >= task.n_classes) {
        std::ostringstream os;
        os << "class index " << t << " at row " << i << " outside [0," << task.n_classes << ")";
        bad(os.str());
      }
    }
  } else if (!targets.allFinite()) {
    bad("non-finite regression target");
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.task = task;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.samples.resize(static_cast<Eigen::Index>(rows.size()), dims());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out.samples.row(i) = samples.row(rows[r]);
    out.targets(i) = targets(rows[r]);
  }
  return out;
}

MinMaxScaler MinMaxScaler::fit(const RowMatrix& samples) {
  MinMaxScaler s;
  s.lo = samples.colwise().minCoeff().transpose();
  s.hi = samples.colwise().maxCoeff().transpose();
  return s;
}

void MinMaxScaler::apply(RowMatrix& samples) const {
  if (samples.cols() != lo.size()) fail(Errc::dimension_mismatch, "scaler fitted on a different width");
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    const double range = hi(j) - lo(j);
    auto col = samples.col(j);
    if (!(range > 0.0)) {
      col.setConstant(0.5);
      continue;
    }
    for (Eigen::Index i = 0; i < col.size(); ++i)
      col(i) = std::clamp((col(i) - lo(j)) / range, 0.0, 1.0);
  }
}

void SplitSpec::validate(Eigen::Index n_available) const {
  if (n_train < 0 || n_test < 0) fail(Errc::invalid_parameter, "split counts must be non-negative");
  if (n_train == 0) fail(Errc::invalid_parameter, "split needs at least one training sample");
  if (n_train + n_test > n_available) {
    std::ostringstream os;
    os << "requested " << n_train << " + " << n_test << " samples but dataset has " << n_available;
    fail(Errc::split_too_large, os.str());
  }
}

namespace {

/// Largest-remainder apportionment of `total` across `weights` (sum(weights) > 0).
std::vector<Eigen::Index> apportion(Eigen::Index total, const std::vector<Eigen::Index>& weights) {
  const double sum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), Eigen::Index{0}));
  std::vector<Eigen::Index> out(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  Eigen::Index assigned = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(weights[c]) / sum;
    out[c] = static_cast<Eigen::Index>(std::floor(exact));
    assigned += out[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) out[remainders[k % remainders.size()].second] += 1;
  return out;
}

} // namespace

std::vector<Eigen::Index> split_order(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate(dataset.size());
  std::mt19937_64 rng(spec.shuffle_seed);
  const Eigen::Index n = dataset.size();

  if (!spec.stratified || !dataset.task.is_classification()) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(spec.n_train + spec.n_test));
    return order;
  }

  const int k = dataset.task.n_classes;
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) by_class[static_cast<std::size_t>(dataset.label(i))].push_back(i);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) counts[static_cast<std::size_t>(c)] = static_cast<Eigen::Index>(by_class[static_cast<std::size_t>(c)].size());

  const auto used = apportion(spec.n_train + spec.n_test, counts);
  auto train = apportion(spec.n_train, counts);
  // Rounding can leave a class with more train rows than it has in total;
  // move the excess to classes that still have room.
  Eigen::Index excess = 0;
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (train[cu] > used[cu]) {
      excess += train[cu] - used[cu];
      train[cu] = used[cu];
    }
  }
  for (int c = 0; c < k && excess > 0; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const Eigen::Index room = used[cu] - train[cu];
    const Eigen::Index take = std::min(room, excess);
    train[cu] += take;
    excess -= take;
  }

  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    auto& rows = by_class[cu];
    std::shuffle(rows.begin(), rows.end(), rng);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + train[cu]);
    test_rows.insert(test_rows.end(), rows.begin() + train[cu], rows.begin() + used[cu]);
  }
  std::shuffle(train_rows.begin(), train_rows.end(), rng);
  std::shuffle(test_rows.begin(), test_rows.end(), rng);
  train_rows.insert(train_rows.end(), test_rows.begin(), test_rows.end());
  return train_rows;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec, MinMaxScaler* fitted) {
  const auto order = split_order(dataset, spec);
  const auto mid = order.begin() + spec.n_train;
  Dataset train = dataset.subset({order.begin(), mid});
  Dataset test = dataset.subset({mid, order.end()});
  if (spec.normalize) {
    const auto scaler = MinMaxScaler::fit(train.samples);
    scaler.apply(train.samples);
    if (test.size() > 0) scaler.apply(test.samples);
    if (fitted) *fitted = scaler;
  }
  return {std::move(train), std::move(test)};
}

} // namespace pelm
