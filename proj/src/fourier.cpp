#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "psr/error.hpp"
#include "psr/pipeline.hpp"

namespace psr {
namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

class Spectrum {
 public:
  Spectrum(std::size_t width, std::size_t height)
      : width_(width), height_(height), data_(fftw_alloc_complex(width * height)) {
    if (!data_) throw std::bad_alloc();
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::complex<double>& operator()(std::size_t kx, std::size_t ky) noexcept {
    return reinterpret_cast<std::complex<double>*>(data_.get())[ky * width_ + kx];
  }

  void transform(int sign) {
    fftw_plan plan;
    {
      std::lock_guard lock(planner_mutex());
      plan = fftw_plan_dft_2d(static_cast<int>(height_), static_cast<int>(width_), data_.get(), data_.get(), sign,
                              FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

 private:
  std::size_t width_;
  std::size_t height_;
  std::unique_ptr<fftw_complex, FftwDeleter> data_;
};

/// Signed frequency index of DFT bin k for length n.
long signed_bin(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

std::vector<double> downsample_band(std::span<const double> band, std::size_t width, std::size_t height,
                                    std::size_t factor, double cut_value, bool hard_cut) {
  Spectrum s(width, height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) s(x, y) = band[y * width + x];
  s.transform(FFTW_FORWARD);

  // H(ξ) = cut^((|ξ| / (π/factor))²), i.e. a Gaussian equal to cut at the target Nyquist.
  const double log_cut = std::log(cut_value);
  const double nyquist = std::numbers::pi / static_cast<double>(factor);
  const double max_x = static_cast<double>(width) / (2.0 * static_cast<double>(factor));
  const double max_y = static_cast<double>(height) / (2.0 * static_cast<double>(factor));
  for (std::size_t ky = 0; ky < height; ++ky) {
    const long sy = signed_bin(ky, height);
    const double fy = 2.0 * std::numbers::pi * static_cast<double>(sy) / static_cast<double>(height);
    for (std::size_t kx = 0; kx < width; ++kx) {
      const long sx = signed_bin(kx, width);
      if (hard_cut && (std::abs(static_cast<double>(sx)) > max_x || std::abs(static_cast<double>(sy)) > max_y)) {
        s(kx, ky) = 0.0;
        continue;
      }
      const double fx = 2.0 * std::numbers::pi * static_cast<double>(sx) / static_cast<double>(width);
      const double r2 = (fx * fx + fy * fy) / (nyquist * nyquist);
      s(kx, ky) *= std::exp(log_cut * r2);
    }
  }
  s.transform(FFTW_BACKWARD);

  const std::size_t out_w = width / factor;
  const std::size_t out_h = height / factor;
  const double norm = 1.0 / static_cast<double>(width * height);
  std::vector<double> out(out_w * out_h);
  for (std::size_t y = 0; y < out_h; ++y)
    for (std::size_t x = 0; x < out_w; ++x) out[y * out_w + x] = s(x * factor, y * factor).real() * norm;
  return out;
}

/// Destination bins and weights of source bin k when zero-padding n -> n·factor.
struct PadTarget {
  std::size_t first;
  std::size_t second;
  double weight;  // 0.5 when the Nyquist bin is split, else 1 and second == first
};

PadTarget pad_target(std::size_t k, std::size_t n, std::size_t factor) {
  const std::size_t big = n * factor;
  if (n % 2 == 0 && k == n / 2 && factor > 1) return {n / 2, big - n / 2, 0.5};
  if (k <= n / 2) return {k, k, 1.0};
  const std::size_t d = k + big - n;
  return {d, d, 1.0};
}

void check_factor(std::size_t factor) {
  if (factor < 1) throw InvalidArgument("resampling factor must be >= 1");
}

}  // namespace

Field mtf_downsample(const Field& field, std::size_t factor, double cut_value, bool hard_cut) {
  check_factor(factor);
  if (!(cut_value > 0.0 && cut_value <= 1.0)) throw InvalidArgument("MTF cut value must lie in (0, 1]");
  if (field.width() % factor != 0 || field.height() % factor != 0)
    throw InvalidArgument("image size " + std::to_string(field.width()) + "x" + std::to_string(field.height()) +
                          " is not divisible by factor " + std::to_string(factor));
  return Field(field.width() / factor, field.height() / factor,
               downsample_band(field.values(), field.width(), field.height(), factor, cut_value, hard_cut));
}

MultiBandImage mtf_downsample(const MultiBandImage& image, std::size_t factor, double cut_value, bool hard_cut) {
  std::vector<Field> bands;
  for (std::size_t m = 0; m < image.bands(); ++m)
    bands.push_back(mtf_downsample(image.band_field(m), factor, cut_value, hard_cut));
  return MultiBandImage::from_bands(bands);
}

MultiBandImage upsample(const MultiBandImage& image, std::size_t factor) {
  check_factor(factor);
  if (factor == 1) return image;
  const std::size_t w = image.width(), h = image.height();
  const std::size_t big_w = w * factor, big_h = h * factor;
  MultiBandImage out(big_w, big_h, image.bands());
  for (std::size_t m = 0; m < image.bands(); ++m) {
    const auto band = image.band(m);
    Spectrum small(w, h);
    for (std::size_t i = 0; i < w * h; ++i) small(i % w, i / w) = band[i];
    small.transform(FFTW_FORWARD);

    Spectrum big(big_w, big_h);
    for (std::size_t y = 0; y < big_h; ++y)
      for (std::size_t x = 0; x < big_w; ++x) big(x, y) = 0.0;
    for (std::size_t ky = 0; ky < h; ++ky) {
      const PadTarget ty = pad_target(ky, h, factor);
      for (std::size_t kx = 0; kx < w; ++kx) {
        const PadTarget tx = pad_target(kx, w, factor);
        const std::complex<double> v = small(kx, ky) * (tx.weight * ty.weight);
        big(tx.first, ty.first) += v;
        if (tx.second != tx.first) big(tx.second, ty.first) += v;
        if (ty.second != ty.first) big(tx.first, ty.second) += v;
        if (tx.second != tx.first && ty.second != ty.first) big(tx.second, ty.second) += v;
      }
    }
    big.transform(FFTW_BACKWARD);

    auto dst = out.band(m);
    const double norm = 1.0 / static_cast<double>(w * h);
    for (std::size_t y = 0; y < big_h; ++y)
      for (std::size_t x = 0; x < big_w; ++x) dst[y * big_w + x] = big(x, y).real() * norm;
  }
  return out;
}

}  // namespace psr
