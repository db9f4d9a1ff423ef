#include "pelm/readout.hpp"

#include "pelm/errors.hpp"

#include <cmath>
#include <sstream>

namespace pelm {

TargetEncoding encoding_for(const Task& task) {
  switch (task.kind) {
  case TaskKind::multiclass: return TargetEncoding::one_hot_pm1;
  case TaskKind::binary: return TargetEncoding::sign_binary;
  case TaskKind::regression: return TargetEncoding::scalar;
  }
  return TargetEncoding::scalar;
}

TargetMatrix TargetMatrix::from(const Vector& targets, const Task& task) {
  TargetMatrix t;
  t.encoding = encoding_for(task);
  const Eigen::Index n = targets.size();
  switch (t.encoding) {
  case TargetEncoding::one_hot_pm1:
    t.values = Matrix::Constant(n, task.n_classes, -1.0);
    for (Eigen::Index i = 0; i < n; ++i) t.values(i, static_cast<Eigen::Index>(targets(i))) = 1.0;
    break;
  case TargetEncoding::sign_binary:
    t.values.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) t.values(i, 0) = targets(i) > 0.5 ? 1.0 : -1.0;
    break;
  case TargetEncoding::scalar:
    if (!targets.allFinite()) fail(Errc::non_finite_input, "non-finite regression target");
    t.values = targets;
    break;
  }
  return t;
}

void GramAccumulator::add(const RowMatrix& h, const Matrix& t) {
  if (h.rows() != t.rows()) fail(Errc::dimension_mismatch, "feature and target row counts differ");
  if (hth.size() == 0) {
    hth = Matrix::Zero(h.cols(), h.cols());
    htt = Matrix::Zero(h.cols(), t.cols());
  }
  if (h.cols() != hth.rows() || t.cols() != htt.cols()) fail(Errc::dimension_mismatch, "chunk width differs from accumulator");
  if (!h.allFinite()) fail(Errc::non_finite_input, "non-finite feature value");
  hth.selfadjointView<Eigen::Lower>().rankUpdate(h.transpose());
  htt.noalias() += h.transpose() * t;
  n_rows += h.rows();
}

GramAccumulator& GramAccumulator::operator+=(const GramAccumulator& o) {
  if (o.hth.size() == 0) return *this;
  if (hth.size() == 0) return *this = o;
  hth += o.hth;
  htt += o.htt;
  n_rows += o.n_rows;
  return *this;
}

ReadoutModel solve_ridge(const Matrix& hth_lower, const Matrix& htt, double lambda, TargetEncoding encoding) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(Errc::invalid_parameter, "lambda must be finite and >= 0");
  if (hth_lower.rows() != hth_lower.cols() || hth_lower.rows() != htt.rows())
    fail(Errc::dimension_mismatch, "normal-equation shapes disagree");
  if (!hth_lower.allFinite() || !htt.allFinite()) fail(Errc::non_finite_input, "non-finite normal equations");

  // Only the lower triangle of hth is trusted.
  Matrix a = hth_lower.selfadjointView<Eigen::Lower>();
  a.diagonal().array() += lambda;

  ReadoutModel model;
  model.lambda = lambda;
  model.encoding = encoding;

  Eigen::LLT<Matrix> llt(a);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    model.beta = llt.solve(htt);
    const Matrix r = htt - a * model.beta;
    model.beta += llt.solve(r);
    ok = model.beta.allFinite();
  }
  if (!ok) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    if (lambda == 0.0 && cod.rank() < a.rows()) {
      std::ostringstream os;
      os << "H^T H has rank " << cod.rank() << " < " << a.rows() << " with lambda = 0";
      fail(Errc::singular_system, os.str());
    }
    model.beta = cod.solve(htt);
  }
  if (lambda == 0.0 && ok) {
    // Cholesky can succeed on a numerically singular matrix; reject those too.
    const double diag_max = a.diagonal().cwiseAbs().maxCoeff();
    const double piv_min = llt.matrixL().toDenseMatrix().diagonal().cwiseAbs2().minCoeff();
    if (!(piv_min > diag_max * 1e-13)) fail(Errc::singular_system, "H^T H is numerically singular with lambda = 0");
  }
  if (!model.beta.allFinite()) fail(Errc::non_finite_input, "ridge solution is not finite");
  return model;
}

ReadoutModel train_ridge(const RowMatrix& h, const TargetMatrix& t, double lambda) {
  GramAccumulator acc;
  acc.add(h, t.values);
  return solve_ridge(acc.hth, acc.htt, lambda, t.encoding);
}

Matrix predict(const RowMatrix& h, const ReadoutModel& model) {
  if (h.cols() != model.beta.rows()) {
    std::ostringstream os;
    os << "features have " << h.cols() << " columns, model expects " << model.beta.rows();
    fail(Errc::dimension_mismatch, os.str());
  }
  return h * model.beta;
}

std::vector<int> decide(const Matrix& y, const Task& task) {
  std::vector<int> out(static_cast<std::size_t>(y.rows()));
  const bool sign = task.kind == TaskKind::binary || y.cols() == 1;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    if (sign) {
      out[static_cast<std::size_t>(i)] = y(i, 0) >= 0.0 ? 1 : -1;
    } else {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < y.cols(); ++k)
        if (y(i, k) > y(i, best)) best = k;
      out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  }
  return out;
}

std::vector<int> decide_classes(const Matrix& y, const Task& task) {
  auto labels = decide(y, task);
  if (task.kind == TaskKind::binary)
    for (int& l : labels) l = l > 0 ? 1 : 0;
  return labels;
}

namespace {

double rmsd_of(const Matrix& y, const Matrix& t) {
  return std::sqrt((y - t).squaredNorm() / static_cast<double>(y.rows()));
}

} // namespace

Metrics evaluate(const Matrix& y, const Vector& targets, const Task& task) {
  if (y.rows() != targets.size()) {
    std::ostringstream os;
    os << y.rows() << " predictions for " << targets.size() << " targets";
    fail(Errc::dimension_mismatch, os.str());
  }
  Metrics m;
  m.n = y.rows();
  if (m.n == 0) return m;
  if (!y.allFinite()) fail(Errc::non_finite_input, "non-finite predictions");
  const TargetMatrix t = TargetMatrix::from(targets, task);
  if (t.values.cols() != y.cols()) fail(Errc::dimension_mismatch, "prediction width differs from target encoding");
  m.rmsd = rmsd_of(y, t.values);

  if (task.is_classification()) {
    const int k = task.n_classes;
    m.confusion = Eigen::MatrixXi::Zero(k, k);
    const auto pred = decide_classes(y, task);
    for (Eigen::Index i = 0; i < m.n; ++i) m.confusion(static_cast<int>(targets(i)), pred[static_cast<std::size_t>(i)]) += 1;
    m.accuracy = static_cast<double>(m.confusion.trace()) / static_cast<double>(m.n);
    m.nrmsd = m.rmsd / 2.0;
  } else {
    const double range = targets.maxCoeff() - targets.minCoeff();
    if (!(range > 0.0)) fail(Errc::degenerate_target_range, "test targets are constant; nrmsd undefined");
    m.nrmsd = m.rmsd / range;
  }
  return m;
}

double selection_loss(const Matrix& y, const Vector& targets, const Task& task) {
  if (task.is_classification()) {
    const auto pred = decide_classes(y, task);
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < targets.size(); ++i) wrong += pred[static_cast<std::size_t>(i)] != static_cast<int>(targets(i));
    return static_cast<double>(wrong) / static_cast<double>(targets.size());
  }
  return rmsd_of(y, TargetMatrix::from(targets, task).values);
}

} // namespace pelm
