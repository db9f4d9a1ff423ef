#pragma once

#include "pelm/dataset.hpp"
#include "pelm/types.hpp"

#include <cstdint>
#include <vector>

namespace pelm {

enum class TargetEncoding { one_hot_pm1, scalar, sign_binary };

struct TargetMatrix {
  Matrix values; ///< N x K
  TargetEncoding encoding = TargetEncoding::scalar;

  /// multiclass -> one_hot_pm1, binary -> sign_binary (class 1 is +1),
  /// regression -> scalar.
  static TargetMatrix from(const Vector& targets, const Task& task);
  static TargetMatrix from(const Dataset& dataset) { return from(dataset.targets, dataset.task); }
};

TargetEncoding encoding_for(const Task& task);

/// Running sums H^T H and H^T T over row chunks.
struct GramAccumulator {
  Matrix hth;
  Matrix htt;
  Eigen::Index n_rows = 0;

  GramAccumulator() = default;
  GramAccumulator(Eigen::Index m, Eigen::Index k) : hth(Matrix::Zero(m, m)), htt(Matrix::Zero(m, k)) {}

  void add(const RowMatrix& h, const Matrix& t);
  GramAccumulator& operator+=(const GramAccumulator& other);
};

struct ReadoutModel {
  Matrix beta; ///< M x K
  double lambda = 0.0;
  TargetEncoding encoding = TargetEncoding::scalar;
  std::uint64_t pipeline_hash = 0;
};

/// Solves (hth + lambda I) beta = htt by Cholesky, falling back to a
/// rank-revealing decomposition. lambda = 0 with a rank-deficient hth throws
/// Errc::singular_system.
ReadoutModel solve_ridge(const Matrix& hth, const Matrix& htt, double lambda, TargetEncoding encoding);
ReadoutModel train_ridge(const RowMatrix& h, const TargetMatrix& t, double lambda);

Matrix predict(const RowMatrix& h, const ReadoutModel& model);

/// Binary (one column): +1 or -1 per row, 0 maps to +1. Otherwise the index of
/// the row maximum, lowest index on ties.
std::vector<int> decide(const Matrix& y, const Task& task);
/// decide() mapped to class indices (binary -1 -> 0, +1 -> 1).
std::vector<int> decide_classes(const Matrix& y, const Task& task);

struct Metrics {
  Eigen::Index n = 0;
  double accuracy = 0.0; ///< classification only
  Eigen::MatrixXi confusion; ///< K x K, rows true class, columns predicted
  double rmsd = 0.0;
  double nrmsd = 0.0;    ///< rmsd / (max T - min T) of the evaluated targets
};

/// Classification: accuracy, confusion, and rmsd/nrmsd of y against the
/// encoded targets. Regression: rmsd and nrmsd; a constant target range throws
/// Errc::degenerate_target_range.
Metrics evaluate(const Matrix& y, const Vector& targets, const Task& task);
inline Metrics evaluate(const Matrix& y, const Dataset& dataset) { return evaluate(y, dataset.targets, dataset.task); }

/// Held-out score used for lambda selection: error rate for classification,
/// rmsd for regression (lower is better).
double selection_loss(const Matrix& y, const Vector& targets, const Task& task);

inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{1e-6, 1e-4, 1e-2, 1.0, 1e2};
  return grid;
}

} // namespace pelm
