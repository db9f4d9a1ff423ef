#include "pelm/propagation.hpp"

#include "pelm/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

namespace pelm {

namespace {

// The FFTW planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

void check_side(const ComplexGrid& g, int side, const char* what) {
  if (g.rows() != side || g.cols() != side) {
    std::ostringstream os;
    os << what << ": expected " << side << "x" << side << " field, got " << g.rows() << "x" << g.cols();
    fail(Errc::dimension_mismatch, os.str());
  }
}

} // namespace

struct TransferOperator::Plans {
  int q = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Plans(int side) : q(side) {
    FftwBuffer scratch(static_cast<std::size_t>(q) * static_cast<std::size_t>(q));
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_2d(q, q, scratch.data, scratch.data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_2d(q, q, scratch.data, scratch.data, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward || !backward) fail(Errc::invalid_parameter, "FFTW could not plan a " + std::to_string(q) + " grid");
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

TransferOperator TransferOperator::dft2(int grid_side, int pad_factor) {
  if (grid_side < 1) fail(Errc::invalid_parameter, "grid_side must be positive");
  if (pad_factor < 1) fail(Errc::invalid_parameter, "pad_factor must be >= 1");
  TransferOperator op;
  op.spec_.kind = OperatorKind::dft2;
  op.spec_.pad_factor = pad_factor;
  op.input_side_ = grid_side;
  op.output_side_ = grid_side * pad_factor;
  op.plans_ = std::make_shared<const Plans>(op.output_side_);
  return op;
}

TransferOperator TransferOperator::gaussian(int grid_side, int output_side, std::uint64_t seed) {
  if (grid_side < 1) fail(Errc::invalid_parameter, "grid_side must be positive");
  if (output_side == 0) output_side = grid_side;
  if (output_side < 1) fail(Errc::invalid_parameter, "output_side must be positive");
  TransferOperator op;
  op.spec_.kind = OperatorKind::gaussian;
  op.spec_.output_side = output_side;
  op.spec_.seed = seed;
  op.input_side_ = grid_side;
  op.output_side_ = output_side;

  const Eigen::Index d = static_cast<Eigen::Index>(output_side) * output_side;
  const Eigen::Index p2 = static_cast<Eigen::Index>(grid_side) * grid_side;
  auto m = std::make_shared<Eigen::MatrixXcd>(d, p2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Real and imaginary parts each carry variance 1/2, so |m_ij|^2 averages 1/P^2.
  const double scale = std::sqrt(0.5 / static_cast<double>(p2));
  for (Eigen::Index c = 0; c < p2; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      (*m)(r, c) = complex(re * scale, im * scale);
    }
  op.matrix_ = std::move(m);
  return op;
}

TransferOperator TransferOperator::make(const OperatorSpec& spec, int grid_side) {
  switch (spec.kind) {
  case OperatorKind::dft2: return dft2(grid_side, spec.pad_factor);
  case OperatorKind::gaussian: return gaussian(grid_side, spec.output_side, spec.seed);
  }
  fail(Errc::invalid_parameter, "unknown operator kind");
}

const Eigen::MatrixXcd& TransferOperator::matrix() const {
  if (!matrix_) fail(Errc::invalid_parameter, "operator has no dense matrix");
  return *matrix_;
}

ComplexGrid TransferOperator::propagate(const ComplexGrid& field) const {
  if (!plans_ && !matrix_) fail(Errc::invalid_parameter, "operator not initialised");
  check_side(field, input_side_, "propagate");

  if (spec_.kind == OperatorKind::gaussian) {
    const Eigen::Map<const Eigen::VectorXcd> flat(field.data(), field.size());
    Eigen::VectorXcd out = (*matrix_) * flat;
    ComplexGrid grid(output_side_, output_side_);
    std::copy(out.data(), out.data() + out.size(), grid.data());
    return grid;
  }

  const int q = output_side_;
  const int p = input_side_;
  FftwBuffer buf(static_cast<std::size_t>(q) * static_cast<std::size_t>(q));
  auto* z = reinterpret_cast<complex*>(buf.data);
  std::fill(z, z + static_cast<std::ptrdiff_t>(q) * q, complex(0.0, 0.0));
  for (int r = 0; r < p; ++r)
    std::copy(field.data() + static_cast<std::ptrdiff_t>(r) * p, field.data() + static_cast<std::ptrdiff_t>(r + 1) * p,
              z + static_cast<std::ptrdiff_t>(r) * q);
  fftw_execute_dft(plans_->forward, buf.data, buf.data);

  ComplexGrid out(q, q);
  const double norm = 1.0 / q;
  const int h = q / 2;
  for (int r = 0; r < q; ++r) {
    const int rr = (r + h) % q;
    for (int c = 0; c < q; ++c) out(rr, (c + h) % q) = z[static_cast<std::ptrdiff_t>(r) * q + c] * norm;
  }
  return out;
}

ComplexGrid TransferOperator::inverse(const ComplexGrid& spectrum) const {
  if (spec_.kind != OperatorKind::dft2 || !plans_) fail(Errc::invalid_parameter, "inverse is only defined for dft2");
  const int q = output_side_;
  check_side(spectrum, q, "inverse");
  FftwBuffer buf(static_cast<std::size_t>(q) * static_cast<std::size_t>(q));
  auto* z = reinterpret_cast<complex*>(buf.data);
  const int h = q / 2;
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) z[static_cast<std::ptrdiff_t>(r) * q + c] = spectrum((r + h) % q, (c + h) % q);
  fftw_execute_dft(plans_->backward, buf.data, buf.data);
  const double norm = 1.0 / q;
  const int keep = input_side_;
  ComplexGrid out(keep, keep);
  for (int r = 0; r < keep; ++r)
    for (int c = 0; c < keep; ++c) out(r, c) = z[static_cast<std::ptrdiff_t>(r) * q + c] * norm;
  return out;
}

double energy(const ComplexGrid& field) { return field.cwiseAbs2().sum(); }

ComplexGrid fftshift(const ComplexGrid& grid) {
  const Eigen::Index nr = grid.rows(), nc = grid.cols();
  ComplexGrid out(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) out((r + nr / 2) % nr, (c + nc / 2) % nc) = grid(r, c);
  return out;
}

ComplexGrid ifftshift(const ComplexGrid& grid) {
  const Eigen::Index nr = grid.rows(), nc = grid.cols();
  ComplexGrid out(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) out(r, c) = grid((r + nr / 2) % nr, (c + nc / 2) % nc);
  return out;
}

} // namespace pelm
