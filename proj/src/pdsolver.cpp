#include "psr/pdsolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "psr/error.hpp"
#include "psr/parallel.hpp"

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace psr {
namespace {

constexpr std::size_t kRowsPerChunk = 4;
constexpr std::size_t kBlockRows = 32;

/// Flushes subnormals to zero on the calling thread for its lifetime. Products
/// of tiny weights otherwise fall into the slow subnormal path.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

struct Span1D {
  std::size_t begin;
  std::size_t end;
};

/// Columns x for which x + dx stays inside [0, width).
Span1D shifted_columns(std::size_t width, int dx) {
  const auto w = static_cast<std::ptrdiff_t>(width);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dx);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(w, w - dx);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

bool row_inside(std::size_t y, int dy, std::size_t height) {
  const auto yj = static_cast<std::ptrdiff_t>(y) + dy;
  return yj >= 0 && yj < static_cast<std::ptrdiff_t>(height);
}

std::ptrdiff_t linear_shift(const WindowOffset& o, std::size_t width) {
  return static_cast<std::ptrdiff_t>(o.dy) * static_cast<std::ptrdiff_t>(width) + o.dx;
}

}  // namespace

DualField::DualField(std::size_t width, std::size_t height, int nu_r)
    : width_(width),
      height_(height),
      nu_r_(nu_r),
      window_(static_cast<std::size_t>((2 * nu_r + 1) * (2 * nu_r + 1))),
      values_(window_ * width * height, 0.0) {
  if (nu_r < 1) throw InvalidArgument("nu_r must be >= 1");
}

double DualField::pixel_norm(std::size_t i) const noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < window_; ++k) sum += at(i, k) * at(i, k);
  return std::sqrt(sum);
}

void SolverParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  if (tau && !(*tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (sigma && !(*sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
  if (max_iters < 1) throw InvalidArgument("max_iters must be positive");
  if (!(rel_tol >= 0.0)) throw InvalidArgument("rel_tol must be >= 0");
}

NonlocalOperator::NonlocalOperator(const WeightGraph& weights)
    : width_(weights.width()),
      height_(weights.height()),
      nu_r_(weights.nu_r()),
      offsets_(window_offsets(weights.nu_r())),
      norm_bound_(estimate_operator_norm(weights)) {
  const std::size_t n = pixels();
  root_weights_.resize(offsets_.size() * n);
  for (std::size_t k = 0; k < offsets_.size(); ++k) {
    const auto plane = weights.plane(k);
    for (std::size_t i = 0; i < n; ++i) root_weights_[k * n + i] = std::sqrt(plane[i]);
  }
}

void NonlocalOperator::check(const Field& u) const {
  if (u.width() != width_ || u.height() != height_)
    throw DimensionMismatch("field is " + std::to_string(u.width()) + "x" + std::to_string(u.height()) +
                            ", weight graph is " + std::to_string(width_) + "x" + std::to_string(height_));
}

DualField NonlocalOperator::gradient(const Field& u) const {
  check(u);
  DualField out(width_, height_, nu_r_);
  const std::size_t n = pixels();
  auto dst = out.values();
  const auto src = u.values();
  parallel::for_range(height_, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t k = 0; k < offsets_.size(); ++k) {
        if (!row_inside(y, offsets_[k].dy, height_)) continue;
        const auto cols = shifted_columns(width_, offsets_[k].dx);
        const std::ptrdiff_t shift = linear_shift(offsets_[k], width_);
        const double* s = &root_weights_[k * n];
        double* g = &dst[k * n];
        for (std::size_t x = cols.begin; x < cols.end; ++x) {
          const std::size_t i = y * width_ + x;
          g[i] = s[i] * (src[i + shift] - src[i]);
        }
      }
    }
  }, kRowsPerChunk);
  return out;
}

Field NonlocalOperator::divergence(const DualField& q) const {
  if (q.width() != width_ || q.height() != height_ || q.nu_r() != nu_r_)
    throw DimensionMismatch("dual field does not match the weight graph");
  Field out(width_, height_);
  const std::size_t n = pixels();
  const auto qv = q.values();
  auto dst = out.values();
  parallel::for_range(height_, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      double* d = &dst[y * width_];
      for (std::size_t k = 0; k < offsets_.size(); ++k) {
        const WindowOffset& o = offsets_[k];
        const double* s = &root_weights_[k * n];
        const double* qk = &qv[k * n];
        if (row_inside(y, o.dy, height_)) {
          const auto cols = shifted_columns(width_, o.dx);
          for (std::size_t x = cols.begin; x < cols.end; ++x) {
            const std::size_t i = y * width_ + x;
            d[x] += s[i] * qk[i];
          }
        }
        // Pixel i is the k-th neighbor of i - o.
        if (row_inside(y, -o.dy, height_)) {
          const auto cols = shifted_columns(width_, -o.dx);
          const std::ptrdiff_t shift = linear_shift(o, width_);
          for (std::size_t x = cols.begin; x < cols.end; ++x) {
            const std::size_t j = y * width_ + x - shift;
            d[x] -= s[j] * qk[j];
          }
        }
      }
    }
  }, kRowsPerChunk);
  return out;
}

double NonlocalOperator::energy(const Field& u, const Field& f, double lambda) const {
  check(u);
  check(f);
  const std::size_t n = pixels();
  const auto uv = u.values();
  std::vector<double> row_tv(height_, 0.0);
  parallel::for_range(height_, [&](std::size_t y0, std::size_t y1) {
    std::vector<double> norm2(width_);
    for (std::size_t y = y0; y < y1; ++y) {
      std::ranges::fill(norm2, 0.0);
      for (std::size_t k = 0; k < offsets_.size(); ++k) {
        if (!row_inside(y, offsets_[k].dy, height_)) continue;
        const auto cols = shifted_columns(width_, offsets_[k].dx);
        const std::ptrdiff_t shift = linear_shift(offsets_[k], width_);
        const double* s = &root_weights_[k * n];
        for (std::size_t x = cols.begin; x < cols.end; ++x) {
          const std::size_t i = y * width_ + x;
          const double g = s[i] * (uv[i + shift] - uv[i]);
          norm2[x] += g * g;
        }
      }
      double sum = 0.0;
      for (double v : norm2) sum += std::sqrt(v);
      row_tv[y] = sum;
    }
  }, kRowsPerChunk);
  const double tv = std::accumulate(row_tv.begin(), row_tv.end(), 0.0);
  double fidelity = 0.0;
  for (std::size_t i = 0; i < n; ++i) fidelity += (uv[i] - f[i]) * (uv[i] - f[i]);
  return lambda * tv + 0.5 * fidelity;
}

template <class T>
FilterResult NonlocalOperator::solve_with(const Field& f, const SolverParams& params,
                                          const IterationObserver& observer) const {
  const double step = 0.99 / norm_bound_;
  const double tau = params.tau.value_or(step);
  const double sigma = params.sigma.value_or(step);
  if (sigma * tau * norm_bound_ * norm_bound_ > 1.0 + 1e-12)
    throw InvalidArgument("step sizes violate sigma*tau*L^2 <= 1 (L = " + std::to_string(norm_bound_) + ")");
  const double lambda = params.lambda;
  const double theta = params.theta;
  const double inv_one_plus_tau = 1.0 / (1.0 + tau);

  const std::size_t n = pixels();
  const std::size_t window = offsets_.size();
  const auto nu = static_cast<std::size_t>(nu_r_);
  const auto fv = f.values();

  // Rows are swept in fixed blocks. Each block scatters its divergence
  // contributions into a private buffer covering the block plus a halo of nu
  // rows, so the summation order never depends on the thread count. Rows at
  // least nu away from the block edges receive contributions from their own
  // block only and are updated inside the sweep; the rest are finished after
  // all blocks are done.
  struct Block {
    std::size_t begin, end;  // rows
    std::size_t halo_begin;  // first row covered by div
    std::vector<double> div;
  };
  std::vector<Block> blocks;
  for (std::size_t y = 0; y < height_; y += kBlockRows) {
    Block blk;
    blk.begin = y;
    blk.end = std::min(height_, y + kBlockRows);
    blk.halo_begin = blk.begin >= nu ? blk.begin - nu : 0;
    blk.div.resize((std::min(height_, blk.end + nu) - blk.halo_begin) * width_);
    blocks.push_back(std::move(blk));
  }
  auto interior = [&](const Block& blk, std::size_t y) {
    return (blk.begin == 0 || y >= blk.begin + nu) && (blk.end == height_ || y + nu < blk.end);
  };

  std::vector<T> q(window * n, T{0});
  std::vector<T> root(root_weights_.size());
  {
    const FlushDenormals ftz;
    std::ranges::transform(root_weights_, root.begin(), [](double v) { return static_cast<T>(v); });
  }
  const auto step_sigma = static_cast<T>(sigma);
  Field u = f;
  std::vector<T> u_bar(fv.begin(), fv.end());
  std::vector<double> row_change(height_), row_norm(height_);

  auto primal_row = [&](std::size_t y, const double* div) {
    double change = 0.0, norm = 0.0;
    for (std::size_t x = 0; x < width_; ++x) {
      const std::size_t i = y * width_ + x;
      const double previous = u[i];
      const double next = fv[i] + (previous + tau * div[x] - fv[i]) * inv_one_plus_tau;
      u[i] = next;
      u_bar[i] = static_cast<T>(next + theta * (next - previous));
      change += (next - previous) * (next - previous);
      norm += previous * previous;
    }
    row_change[y] = change;
    row_norm[y] = norm;
  };

  auto sweep = [&](Block& blk) {
    const FlushDenormals ftz;
    std::ranges::fill(blk.div, 0.0);
    std::vector<T> norm2(width_), scale(width_), own(width_);
    auto div_row = [&](std::size_t y) { return &blk.div[(y - blk.halo_begin) * width_]; };
    for (std::size_t y = blk.begin; y < blk.end; ++y) {
      // Dual ascent.
      std::ranges::fill(norm2, 0.0);
      for (std::size_t k = 0; k < window; ++k) {
        if (!row_inside(y, offsets_[k].dy, height_)) continue;
        const auto cols = shifted_columns(width_, offsets_[k].dx);
        const std::ptrdiff_t shift = linear_shift(offsets_[k], width_);
        const T* __restrict s = &root[k * n + y * width_];
        T* __restrict qk = &q[k * n + y * width_];
        const T* __restrict ub = &u_bar[y * width_];
        T* __restrict acc = norm2.data();
        for (std::size_t x = cols.begin; x < cols.end; ++x) {
          const T t = qk[x] + step_sigma * s[x] * (ub[x + shift] - ub[x]);
          qk[x] = t;
          acc[x] += t * t;
        }
      }
      // Projection onto {|q_i| <= lambda} and divergence scatter.
      T* __restrict sc = scale.data();
      for (std::size_t x = 0; x < width_; ++x) {
        const double norm = std::sqrt(static_cast<double>(norm2[x]));
        sc[x] = norm <= lambda ? T{1} : static_cast<T>(lambda / norm);
      }
      std::ranges::fill(own, 0.0);
      for (std::size_t k = 0; k < window; ++k) {
        const WindowOffset& o = offsets_[k];
        if (!row_inside(y, o.dy, height_)) continue;
        const auto cols = shifted_columns(width_, o.dx);
        const T* __restrict s = &root[k * n + y * width_];
        T* __restrict qk = &q[k * n + y * width_];
        T* __restrict acc = own.data();
        double* __restrict other = div_row(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + o.dy)) + o.dx;
        for (std::size_t x = cols.begin; x < cols.end; ++x) {
          const T projected = qk[x] * sc[x];
          qk[x] = projected;
          const T v = s[x] * projected;
          acc[x] += v;
          other[x] -= v;
        }
      }
      double* row = div_row(y);
      for (std::size_t x = 0; x < width_; ++x) row[x] += static_cast<double>(own[x]);
      // Primal step for the row whose divergence just became complete.
      if (y >= blk.begin + nu && interior(blk, y - nu)) primal_row(y - nu, div_row(y - nu));
    }
    for (std::size_t y = blk.end > nu ? std::max(blk.begin, blk.end - nu) : blk.begin; y < blk.end; ++y)
      if (interior(blk, y)) primal_row(y, div_row(y));
  };

  std::vector<std::size_t> deferred;
  for (const Block& blk : blocks)
    for (std::size_t y = blk.begin; y < blk.end; ++y)
      if (!interior(blk, y)) deferred.push_back(y);

  FilterResult result{f, 0, false, 0.0};
  for (int iter = 1; iter <= params.max_iters; ++iter) {
    parallel::for_range(blocks.size(), [&](std::size_t b0, std::size_t b1) {
      for (std::size_t b = b0; b < b1; ++b) sweep(blocks[b]);
    });
    parallel::for_range(deferred.size(), [&](std::size_t d0, std::size_t d1) {
      std::vector<double> div(width_);
      for (std::size_t d = d0; d < d1; ++d) {
        const std::size_t y = deferred[d];
        std::ranges::fill(div, 0.0);
        for (const Block& blk : blocks) {
          if (y < blk.halo_begin || y >= blk.halo_begin + blk.div.size() / width_) continue;
          const double* src = &blk.div[(y - blk.halo_begin) * width_];
          for (std::size_t x = 0; x < width_; ++x) div[x] += src[x];
        }
        primal_row(y, div.data());
      }
    }, kRowsPerChunk);

    const double change = std::sqrt(std::accumulate(row_change.begin(), row_change.end(), 0.0));
    const double norm = std::sqrt(std::accumulate(row_norm.begin(), row_norm.end(), 0.0));
    const double relative = norm > 0.0 ? change / norm : (change == 0.0 ? 0.0 : INFINITY);
    result.iterations = iter;
    result.final_change = relative;
    if (observer) observer(IterationInfo{iter, relative, u});
    if (change == 0.0 || relative < params.rel_tol) {
      result.converged = true;
      break;
    }
  }
  result.u = std::move(u);
  return result;
}

FilterResult NonlocalOperator::solve(const Field& f, const SolverParams& params,
                                     const IterationObserver& observer) const {
  check(f);
  params.validate();
  const bool single = params.precision == DualPrecision::single_precision ||
                      (params.precision == DualPrecision::automatic &&
                       offsets_.size() * pixels() > kSinglePrecisionThreshold);
  return single ? solve_with<float>(f, params, observer) : solve_with<double>(f, params, observer);
}

DualField nonlocal_gradient(const Field& u, const WeightGraph& weights) {
  return NonlocalOperator(weights).gradient(u);
}

Field nonlocal_divergence(const DualField& q, const WeightGraph& weights) {
  return NonlocalOperator(weights).divergence(q);
}

Field prox_data(const Field& u, const Field& f, double tau) {
  if (!u.same_shape(f)) throw DimensionMismatch("prox_data: u and f differ in shape");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  Field out(u.width(), u.height());
  const double inv = 1.0 / (1.0 + tau);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f[i] + (u[i] - f[i]) * inv;
  return out;
}

DualField prox_dual(const DualField& q, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  DualField out = q;
  for (std::size_t i = 0; i < q.pixels(); ++i) {
    const double norm = q.pixel_norm(i);
    if (norm <= lambda) continue;
    const double factor = lambda / norm;
    for (std::size_t k = 0; k < q.window_size(); ++k) out.at(i, k) *= factor;
  }
  return out;
}

double energy(const Field& u, const Field& f, const WeightGraph& weights, double lambda) {
  if (!u.same_shape(f)) throw DimensionMismatch("energy: u and f differ in shape");
  return NonlocalOperator(weights).energy(u, f, lambda);
}

double estimate_operator_norm(const WeightGraph& weights) {
  const std::size_t n = weights.pixels();
  std::vector<double> column(n, 0.0);
  double max_row = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < weights.window_size(); ++k) {
      const double w = weights.weight(i, k);
      if (w == 0.0) continue;
      row += w;
      if (auto j = weights.neighbor(i, k)) column[*j] += w;
    }
    max_row = std::max(max_row, row);
  }
  const double max_column = *std::ranges::max_element(column);
  return std::sqrt(2.0 * (max_row + max_column));
}

FilterResult filter_component(const Field& f, const WeightGraph& weights, const SolverParams& params,
                              const IterationObserver& observer) {
  return NonlocalOperator(weights).solve(f, params, observer);
}

}  // namespace psr
