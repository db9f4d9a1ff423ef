#pragma once

#include "pelm/types.hpp"

#include <cstdint>
#include <memory>

namespace pelm {

enum class OperatorKind { dft2, gaussian };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::dft2;
  int pad_factor = 1;     ///< dft2: field is zero-padded to pad_factor * P before the transform
  int output_side = 0;    ///< gaussian: output laid out as output_side^2 = D values; 0 means P
  std::uint64_t seed = 0; ///< gaussian only
};

/// Linear map from a P x P input field to the detector plane.
///
/// dft2 returns the centered (zero frequency at index Q/2) unitary DFT of the
/// padded Q x Q field, Q = pad_factor * P. gaussian returns D = output_side^2
/// values of M f for a fixed complex normal D x P^2 matrix with entries of
/// variance 1/P^2, laid out row-major on an output_side grid.
///
/// Copies share the underlying plan/matrix; propagate() is safe to call
/// concurrently.
class TransferOperator {
public:
  TransferOperator() = default;

  static TransferOperator dft2(int grid_side, int pad_factor = 1);
  static TransferOperator gaussian(int grid_side, int output_side, std::uint64_t seed);
  static TransferOperator make(const OperatorSpec& spec, int grid_side);

  const OperatorSpec& spec() const { return spec_; }
  OperatorKind kind() const { return spec_.kind; }
  int input_side() const { return input_side_; }
  int output_side() const { return output_side_; }

  ComplexGrid propagate(const ComplexGrid& field) const;
  /// Inverse of propagate for dft2; the padding is cropped away.
  ComplexGrid inverse(const ComplexGrid& spectrum) const;

  /// The dense D x P^2 matrix of the gaussian kind.
  const Eigen::MatrixXcd& matrix() const;

private:
  struct Plans;
  OperatorSpec spec_;
  int input_side_ = 0;
  int output_side_ = 0;
  std::shared_ptr<const Plans> plans_;
  std::shared_ptr<const Eigen::MatrixXcd> matrix_;
};

/// Sum of squared moduli.
double energy(const ComplexGrid& field);

/// Zero frequency moved from index 0 to index n/2 along both axes.
ComplexGrid fftshift(const ComplexGrid& grid);
ComplexGrid ifftshift(const ComplexGrid& grid);

} // namespace pelm
