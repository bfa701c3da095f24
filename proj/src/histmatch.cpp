#include "psr/histmatch.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "psr/error.hpp"
#include "psr/parallel.hpp"

namespace psr {
namespace {

struct Moments {
  double mean;
  double sd;
};

struct Rect {
  std::size_t x0, y0, x1, y1;  // half-open
};

Moments moments(const Field& f, const Rect& r) {
  const double count = static_cast<double>((r.x1 - r.x0) * (r.y1 - r.y0));
  double sum = 0.0;
  for (std::size_t y = r.y0; y < r.y1; ++y)
    for (std::size_t x = r.x0; x < r.x1; ++x) sum += f(x, y);
  const double mean = sum / count;
  double ss = 0.0;
  for (std::size_t y = r.y0; y < r.y1; ++y)
    for (std::size_t x = r.x0; x < r.x1; ++x) ss += (f(x, y) - mean) * (f(x, y) - mean);
  return {mean, std::sqrt(ss / count)};
}

std::vector<std::size_t> patch_origins(std::size_t extent, std::size_t window, std::size_t stride) {
  if (window >= extent) return {0};
  std::vector<std::size_t> origins;
  const std::size_t last = extent - window;
  for (std::size_t o = 0; o <= last; o += stride) origins.push_back(o);
  if (origins.back() != last) origins.push_back(last);
  return origins;
}

/// Affine moment map applied to one sample; shared by the global and local paths.
double matched(double p, const Moments& pan, const Moments& target) {
  return (target.sd / pan.sd) * (p - pan.mean) + target.mean;
}

void check_pair(const Field& pan, const Field& target) {
  if (!pan.same_shape(target)) throw DimensionMismatch("PAN and target differ in shape");
}

}  // namespace

void MatchParams::validate() const {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("histogram window must be a positive odd size");
  if (stride < 1) throw InvalidArgument("histogram stride must be >= 1");
}

Field match_global(const Field& pan, const Field& target) {
  check_pair(pan, target);
  const Rect all{0, 0, pan.width(), pan.height()};
  const Moments mp = moments(pan, all);
  const Moments mt = moments(target, all);
  if (mp.sd == 0.0) throw DegenerateInput("cannot match a constant PAN");
  Field out(pan.width(), pan.height());
  for (std::size_t i = 0; i < pan.size(); ++i) out[i] = matched(pan[i], mp, mt);
  return out;
}

Field match_local(const Field& pan, const Field& target, const MatchParams& params) {
  check_pair(pan, target);
  params.validate();
  const auto window = static_cast<std::size_t>(params.window);
  // A stride wider than the window would leave pixels uncovered.
  const auto stride = std::min(static_cast<std::size_t>(params.stride), window);
  const std::size_t width = pan.width();
  const std::size_t height = pan.height();
  const auto xs = patch_origins(width, window, stride);
  const auto ys = patch_origins(height, window, stride);
  const std::size_t wx = std::min(window, width);
  const std::size_t wy = std::min(window, height);

  const auto [lo, hi] = std::ranges::minmax(pan.values());
  const double flat = 1e-12 * (hi - lo);

  struct PatchStats {
    Moments pan;
    Moments target;
    bool degenerate;
  };
  std::vector<PatchStats> stats(xs.size() * ys.size());
  parallel::for_range(ys.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t py = b; py < e; ++py) {
      for (std::size_t px = 0; px < xs.size(); ++px) {
        const Rect r{xs[px], ys[py], xs[px] + wx, ys[py] + wy};
        const Moments mp = moments(pan, r);
        const Moments mt = moments(target, r);
        stats[py * xs.size() + px] = {mp, mt, !(mp.sd > flat) || mp.sd == 0.0};
      }
    }
  });

  // Gather per pixel, visiting covering patches in origin row-major order.
  Field out(width, height);
  parallel::for_range(height, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      // Patches covering row y: origins in [y - wy + 1, y].
      const auto py_lo = std::lower_bound(ys.begin(), ys.end(), y + 1 >= wy ? y + 1 - wy : 0) - ys.begin();
      const auto py_hi = std::upper_bound(ys.begin(), ys.end(), y) - ys.begin();
      for (std::size_t x = 0; x < width; ++x) {
        const auto px_lo = std::lower_bound(xs.begin(), xs.end(), x + 1 >= wx ? x + 1 - wx : 0) - xs.begin();
        const auto px_hi = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
        const double p = pan(x, y);
        double sum = 0.0;
        for (auto py = py_lo; py < py_hi; ++py) {
          for (auto px = px_lo; px < px_hi; ++px) {
            const PatchStats& s = stats[static_cast<std::size_t>(py) * xs.size() + static_cast<std::size_t>(px)];
            sum += s.degenerate ? s.target.mean : matched(p, s.pan, s.target);
          }
        }
        const auto count = static_cast<double>((py_hi - py_lo) * (px_hi - px_lo));
        out(x, y) = sum / count;
      }
    }
  }, 2);
  return out;
}

}  // namespace psr
