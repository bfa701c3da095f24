#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "psr/raster.hpp"

namespace psr {

struct WeightParams {
  int nu_r = 7;          // search window radius, window side 2·nu_r+1
  int patch_radius = 1;  // 3×3 patches
  double h_spt = 2.5;
  /// Similarity decay in PAN intensity units; unset means default_h_sim(pan).
  std::optional<double> h_sim;

  void validate() const;
};

/// 0.04 · (max(P) - min(P)), or 0.04 when the PAN is constant.
double default_h_sim(const Field& pan);

/// Offset k of a (2ν+1)² search window, k = (dy + ν)·(2ν + 1) + (dx + ν).
struct WindowOffset {
  int dx;
  int dy;
};

std::vector<WindowOffset> window_offsets(int nu_r);

/// Row-normalized nonlocal weights ω(i, j) for every pixel i and every j in the
/// clipped (2ν+1)² window around i.
///
/// Storage is offset-major: one W×H plane per window offset, so that
/// weight(i, k) = plane(k)[i]. Entries whose neighbor falls outside the image
/// are zero. The window offset reaching j from i is the mirror of the one
/// reaching i from j: mirror(k) = K - 1 - k.
class WeightGraph {
 public:
  WeightGraph() = default;
  WeightGraph(std::size_t width, std::size_t height, int nu_r, std::vector<double> planes);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixels() const noexcept { return width_ * height_; }
  int nu_r() const noexcept { return nu_r_; }
  std::size_t window_size() const noexcept { return offsets_.size(); }
  const WindowOffset& offset(std::size_t k) const noexcept { return offsets_[k]; }
  std::size_t mirror(std::size_t k) const noexcept { return offsets_.size() - 1 - k; }

  double weight(std::size_t i, std::size_t k) const noexcept { return planes_[k * pixels() + i]; }
  std::span<const double> plane(std::size_t k) const noexcept {
    return std::span<const double>(planes_).subspan(k * pixels(), pixels());
  }

  /// Linear index of the k-th neighbor of pixel i, or nullopt outside the image.
  std::optional<std::size_t> neighbor(std::size_t i, std::size_t k) const noexcept;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  int nu_r_ = 0;
  std::vector<WindowOffset> offsets_;
  std::vector<double> planes_;
};

/// Sum of squared differences between the PAN patches centered at pixels i and
/// j. Samples outside the image come from half-sample symmetric extension.
double patch_distance(const Field& pan, std::size_t i, std::size_t j, int patch_radius);

/// exp(-|x_i - x_j|² / h_spt² - patch_distance / h_sim²), before normalization.
/// Symmetric in (i, j). Requires params.h_sim to be set.
double similarity_kernel(const Field& pan, std::size_t i, std::size_t j, const WeightParams& params);

WeightGraph compute_weights(const Field& pan, const WeightParams& params);

}  // namespace psr
