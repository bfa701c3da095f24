#include "psr/nlweights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psr/error.hpp"
#include "psr/parallel.hpp"

namespace psr {
namespace {

std::ptrdiff_t reflect(std::ptrdiff_t idx, std::ptrdiff_t n) {
  // Half-sample symmetric: -1 -> 0, n -> n-1. Valid for |overhang| <= n.
  if (idx < 0) return -idx - 1;
  if (idx >= n) return 2 * n - idx - 1;
  return idx;
}

/// PAN extended by `r` samples on every side by symmetric reflection.
struct PaddedPan {
  std::size_t stride;
  int r;
  std::vector<double> data;

  PaddedPan(const Field& pan, int radius) : stride(pan.width() + 2 * radius), r(radius) {
    const auto w = static_cast<std::ptrdiff_t>(pan.width());
    const auto h = static_cast<std::ptrdiff_t>(pan.height());
    data.resize(stride * (pan.height() + 2 * radius));
    for (std::ptrdiff_t y = -r; y < h + r; ++y)
      for (std::ptrdiff_t x = -r; x < w + r; ++x)
        data[(y + r) * stride + (x + r)] = pan(reflect(x, w), reflect(y, h));
  }

  double ssd(std::size_t xi, std::size_t yi, std::size_t xj, std::size_t yj) const {
    double sum = 0.0;
    for (int a = 0; a < 2 * r + 1; ++a) {
      const double* pi = &data[(yi + a) * stride + xi];
      const double* pj = &data[(yj + a) * stride + xj];
      for (int b = 0; b < 2 * r + 1; ++b) {
        const double d = pi[b] - pj[b];
        sum += d * d;
      }
    }
    return sum;
  }
};

void check_patch_fits(const Field& pan, int patch_radius) {
  const auto side = static_cast<std::size_t>(2 * patch_radius + 1);
  if (pan.width() < side || pan.height() < side)
    throw InvalidArgument("PAN (" + std::to_string(pan.width()) + "x" + std::to_string(pan.height()) +
                          ") is smaller than the " + std::to_string(side) + "x" + std::to_string(side) +
                          " comparison patch");
}

}  // namespace

void WeightParams::validate() const {
  if (nu_r < 1) throw InvalidArgument("nu_r must be >= 1");
  if (patch_radius < 0) throw InvalidArgument("patch radius must be >= 0");
  if (!(h_spt > 0.0) || !std::isfinite(h_spt)) throw InvalidArgument("h_spt must be positive");
  if (h_sim && (!(*h_sim > 0.0) || !std::isfinite(*h_sim)))
    throw InvalidArgument("h_sim must be positive");
}

double default_h_sim(const Field& pan) {
  const auto [lo, hi] = std::ranges::minmax(pan.values());
  return hi > lo ? 0.04 * (hi - lo) : 0.04;
}

std::vector<WindowOffset> window_offsets(int nu_r) {
  std::vector<WindowOffset> offsets;
  offsets.reserve(static_cast<std::size_t>((2 * nu_r + 1) * (2 * nu_r + 1)));
  for (int dy = -nu_r; dy <= nu_r; ++dy)
    for (int dx = -nu_r; dx <= nu_r; ++dx) offsets.push_back({dx, dy});
  return offsets;
}

WeightGraph::WeightGraph(std::size_t width, std::size_t height, int nu_r, std::vector<double> planes)
    : width_(width), height_(height), nu_r_(nu_r), offsets_(window_offsets(nu_r)), planes_(std::move(planes)) {
  if (nu_r < 1) throw InvalidArgument("nu_r must be >= 1");
  if (planes_.size() != offsets_.size() * width * height)
    throw InvalidArgument("weight storage does not match (2nu_r+1)^2 * W * H");
  for (std::size_t k = 0; k < offsets_.size(); ++k)
    for (std::size_t i = 0; i < pixels(); ++i) {
      const double w = planes_[k * pixels() + i];
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and nonnegative");
      if (w != 0.0 && !neighbor(i, k)) throw InvalidArgument("nonzero weight towards a pixel outside the image");
    }
}

std::optional<std::size_t> WeightGraph::neighbor(std::size_t i, std::size_t k) const noexcept {
  const auto x = static_cast<std::ptrdiff_t>(i % width_) + offsets_[k].dx;
  const auto y = static_cast<std::ptrdiff_t>(i / width_) + offsets_[k].dy;
  if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(width_) || y >= static_cast<std::ptrdiff_t>(height_))
    return std::nullopt;
  return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
}

double patch_distance(const Field& pan, std::size_t i, std::size_t j, int patch_radius) {
  if (i >= pan.size() || j >= pan.size()) throw InvalidArgument("patch_distance: pixel index out of range");
  if (patch_radius < 0) throw InvalidArgument("patch radius must be >= 0");
  check_patch_fits(pan, patch_radius);
  const auto w = static_cast<std::ptrdiff_t>(pan.width());
  const auto h = static_cast<std::ptrdiff_t>(pan.height());
  const auto xi = static_cast<std::ptrdiff_t>(i) % w, yi = static_cast<std::ptrdiff_t>(i) / w;
  const auto xj = static_cast<std::ptrdiff_t>(j) % w, yj = static_cast<std::ptrdiff_t>(j) / w;
  double sum = 0.0;
  for (int a = -patch_radius; a <= patch_radius; ++a) {
    for (int b = -patch_radius; b <= patch_radius; ++b) {
      const double d = pan(reflect(xi + b, w), reflect(yi + a, h)) - pan(reflect(xj + b, w), reflect(yj + a, h));
      sum += d * d;
    }
  }
  return sum;
}

double similarity_kernel(const Field& pan, std::size_t i, std::size_t j, const WeightParams& params) {
  params.validate();
  if (!params.h_sim) throw InvalidArgument("similarity_kernel requires an explicit h_sim");
  const auto w = static_cast<std::ptrdiff_t>(pan.width());
  const auto dx = static_cast<double>(static_cast<std::ptrdiff_t>(i) % w - static_cast<std::ptrdiff_t>(j) % w);
  const auto dy = static_cast<double>(static_cast<std::ptrdiff_t>(i) / w - static_cast<std::ptrdiff_t>(j) / w);
  const double spatial = (dx * dx + dy * dy) / (params.h_spt * params.h_spt);
  const double similar = patch_distance(pan, i, j, params.patch_radius) / (*params.h_sim * *params.h_sim);
  return std::exp(-spatial - similar);
}

WeightGraph compute_weights(const Field& pan, const WeightParams& params) {
  params.validate();
  check_patch_fits(pan, params.patch_radius);
  const double h_sim = params.h_sim.value_or(default_h_sim(pan));
  const double inv_spt2 = 1.0 / (params.h_spt * params.h_spt);
  const double inv_sim2 = 1.0 / (h_sim * h_sim);

  const std::size_t width = pan.width();
  const std::size_t height = pan.height();
  const std::size_t n = width * height;
  const auto offsets = window_offsets(params.nu_r);
  const std::size_t window = offsets.size();
  const PaddedPan padded(pan, params.patch_radius);

  std::vector<double> planes(window * n, 0.0);
  parallel::for_range(height, [&](std::size_t y_begin, std::size_t y_end) {
    std::vector<double> row(window);
    for (std::size_t y = y_begin; y < y_end; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t i = y * width + x;
        double gamma = 0.0;
        for (std::size_t k = 0; k < window; ++k) {
          const auto xj = static_cast<std::ptrdiff_t>(x) + offsets[k].dx;
          const auto yj = static_cast<std::ptrdiff_t>(y) + offsets[k].dy;
          if (xj < 0 || yj < 0 || xj >= static_cast<std::ptrdiff_t>(width) ||
              yj >= static_cast<std::ptrdiff_t>(height)) {
            row[k] = 0.0;
            continue;
          }
          const double d2 = static_cast<double>(offsets[k].dx * offsets[k].dx + offsets[k].dy * offsets[k].dy);
          const double ssd = padded.ssd(x, y, static_cast<std::size_t>(xj), static_cast<std::size_t>(yj));
          row[k] = std::exp(-d2 * inv_spt2 - ssd * inv_sim2);
          gamma += row[k];
        }
        // The self term contributes exp(0) = 1, so gamma >= 1.
        for (std::size_t k = 0; k < window; ++k) planes[k * n + i] = row[k] / gamma;
      }
    }
  });
  return WeightGraph(width, height, params.nu_r, std::move(planes));
}

}  // namespace psr
