#pragma once

#include <cstddef>
#include <vector>

#include "psr/raster.hpp"

namespace psr {

/// Band means plus an orthonormal eigenbasis of the band covariance.
/// Column k of `basis` is the k-th principal direction; columns are ordered by
/// decreasing variance and oriented so that their largest-magnitude entry is
/// positive.
struct PcaBasis {
  std::vector<double> mean;       // length M
  std::vector<double> basis;      // M×M, row-major: basis[m * M + k]
  std::vector<double> variances;  // length M, descending, clamped at 0

  std::size_t bands() const noexcept { return mean.size(); }
  double at(std::size_t m, std::size_t k) const noexcept { return basis[m * bands() + k]; }
};

struct SymmetricEigen {
  std::vector<double> values;   // unsorted, as produced by the rotations
  std::vector<double> vectors;  // n×n row-major, column k pairs with values[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric n×n matrix (row-major).
SymmetricEigen jacobi_eigen(std::vector<double> matrix, std::size_t n);

/// Population (divisor N) band covariance, row-major M×M.
std::vector<double> band_covariance(const MultiBandImage& image, std::vector<double>* mean = nullptr);

PcaBasis fit_pca(const MultiBandImage& image);
/// Band 0 of the result is the structural component, bands 1..M-1 the chromatic ones.
MultiBandImage forward_pca(const MultiBandImage& image, const PcaBasis& basis);
MultiBandImage inverse_pca(const MultiBandImage& components, const PcaBasis& basis);

}  // namespace psr
