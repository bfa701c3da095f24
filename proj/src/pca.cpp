#include "psr/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "psr/error.hpp"
#include "psr/parallel.hpp"

namespace psr {
namespace {

constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
  double sum = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) sum += a[p * n + q] * a[p * n + q];
  return std::sqrt(2.0 * sum);
}

std::size_t argmax_abs(const std::vector<double>& v, std::size_t n, std::size_t column) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < n; ++m)
    if (std::abs(v[m * n + column]) > std::abs(v[best * n + column])) best = m;
  return best;
}

}  // namespace

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw InvalidArgument("jacobi_eigen: matrix is not n×n");
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  const double threshold = 1e-15 * scale;

  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a, n) > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        // Rotation annihilating a[p][q]; t is the smaller root of t² + 2θt - 1 = 0.
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  SymmetricEigen result;
  result.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.values[i] = a[i * n + i];
  result.vectors = std::move(v);
  return result;
}

std::vector<double> band_covariance(const MultiBandImage& image, std::vector<double>* mean_out) {
  const std::size_t bands = image.bands();
  const std::size_t n = image.pixels();
  std::vector<double> mean(bands, 0.0);
  for (std::size_t m = 0; m < bands; ++m) {
    const auto band = image.band(m);
    mean[m] = std::accumulate(band.begin(), band.end(), 0.0) / static_cast<double>(n);
  }
  std::vector<double> cov(bands * bands, 0.0);
  for (std::size_t a = 0; a < bands; ++a) {
    const auto ba = image.band(a);
    for (std::size_t b = a; b < bands; ++b) {
      const auto bb = image.band(b);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += (ba[i] - mean[a]) * (bb[i] - mean[b]);
      cov[a * bands + b] = cov[b * bands + a] = sum / static_cast<double>(n);
    }
  }
  if (mean_out) *mean_out = std::move(mean);
  return cov;
}

PcaBasis fit_pca(const MultiBandImage& image) {
  const std::size_t bands = image.bands();
  if (bands < 2) throw InvalidArgument("PCA needs at least two bands");
  if (image.pixels() < bands)
    throw DegenerateInput("PCA needs at least as many pixels as bands");

  PcaBasis out;
  const std::vector<double> cov = band_covariance(image, &out.mean);
  SymmetricEigen eig = jacobi_eigen(cov, bands);

  // Orientation first, so that the tie-break below sees the final vectors.
  std::vector<std::size_t> pivot(bands);
  for (std::size_t k = 0; k < bands; ++k) {
    pivot[k] = argmax_abs(eig.vectors, bands, k);
    if (eig.vectors[pivot[k] * bands + k] < 0.0)
      for (std::size_t m = 0; m < bands; ++m) eig.vectors[m * bands + k] = -eig.vectors[m * bands + k];
    eig.values[k] = std::max(eig.values[k], 0.0);
  }

  std::vector<std::size_t> order(bands);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t l, std::size_t r) {
    if (eig.values[l] != eig.values[r]) return eig.values[l] > eig.values[r];
    return pivot[l] < pivot[r];
  });

  out.basis.assign(bands * bands, 0.0);
  out.variances.resize(bands);
  for (std::size_t k = 0; k < bands; ++k) {
    out.variances[k] = eig.values[order[k]];
    for (std::size_t m = 0; m < bands; ++m) out.basis[m * bands + k] = eig.vectors[m * bands + order[k]];
  }
  return out;
}

namespace {

void check_basis(const MultiBandImage& image, const PcaBasis& basis) {
  if (image.bands() != basis.bands())
    throw DimensionMismatch("image has " + std::to_string(image.bands()) + " bands, basis has " +
                            std::to_string(basis.bands()));
  if (basis.basis.size() != basis.bands() * basis.bands())
    throw InvalidArgument("PCA basis matrix is not M×M");
}

}  // namespace

MultiBandImage forward_pca(const MultiBandImage& image, const PcaBasis& basis) {
  check_basis(image, basis);
  const std::size_t bands = image.bands();
  MultiBandImage out(image.width(), image.height(), bands);
  const auto src = image.samples();
  auto dst = out.samples();
  const std::size_t n = image.pixels();
  parallel::for_range(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> centered(bands);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t m = 0; m < bands; ++m) centered[m] = src[m * n + i] - basis.mean[m];
      for (std::size_t k = 0; k < bands; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < bands; ++m) acc += basis.at(m, k) * centered[m];
        dst[k * n + i] = acc;
      }
    }
  }, 4096);
  return out;
}

MultiBandImage inverse_pca(const MultiBandImage& components, const PcaBasis& basis) {
  check_basis(components, basis);
  const std::size_t bands = components.bands();
  MultiBandImage out(components.width(), components.height(), bands);
  const auto src = components.samples();
  auto dst = out.samples();
  const std::size_t n = components.pixels();
  parallel::for_range(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t m = 0; m < bands; ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k < bands; ++k) acc += basis.at(m, k) * src[k * n + i];
        dst[m * n + i] = basis.mean[m] + acc;
      }
    }
  }, 4096);
  return out;
}

}  // namespace psr
