#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace pelm {

using complex = std::complex<double>;

/// Row-major dense matrices: datasets and feature matrices are assembled one
/// sample (row) at a time, and 2-D optical grids are traversed row-major.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealGrid = RowMatrix;
using ComplexGrid = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// SplitMix64 finalizer. Used to derive independent, reproducible seeds
/// (per-sample noise streams, per-repeat embedding seeds) from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace pelm
