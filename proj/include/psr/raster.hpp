#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace psr {

/// Single-band W×H raster, row-major: pixel (x, y) lives at index y·W + x.
/// Used for PCA components, the PAN, and every scalar intermediate.
class Field {
 public:
  Field() = default;
  Field(std::size_t width, std::size_t height, double fill = 0.0);
  /// Throws InvalidArgument when the size disagrees or a value is not finite.
  Field(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool same_shape(const Field& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator()(std::size_t x, std::size_t y) const noexcept { return values_[y * width_ + x]; }
  double& operator()(std::size_t x, std::size_t y) noexcept { return values_[y * width_ + x]; }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

/// The panchromatic guidance image. A distinct type so that APIs can say
/// which argument is the PAN; it converts to Field wherever a plain
/// scalar image is expected.
class PanImage : public Field {
 public:
  using Field::Field;
  PanImage() = default;
  explicit PanImage(Field field) : Field(std::move(field)) {}
};

/// W×H×M raster stored band-sequentially; each band is row-major.
class MultiBandImage {
 public:
  MultiBandImage() = default;
  MultiBandImage(std::size_t width, std::size_t height, std::size_t bands, double fill = 0.0);
  MultiBandImage(std::size_t width, std::size_t height, std::size_t bands,
                 std::vector<double> samples);
  static MultiBandImage from_bands(std::span<const Field> bands);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixels() const noexcept { return width_ * height_; }
  bool same_shape(const MultiBandImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && bands_ == other.bands_;
  }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<double> samples() noexcept { return samples_; }
  std::span<const double> band(std::size_t m) const;
  std::span<double> band(std::size_t m);
  Field band_field(std::size_t m) const;
  void set_band(std::size_t m, const Field& values);

  double at(std::size_t x, std::size_t y, std::size_t m) const noexcept {
    return samples_[(m * height_ + y) * width_ + x];
  }

  friend bool operator==(const MultiBandImage&, const MultiBandImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> samples_;
};

// MBR container: "MBR1", u32 width, u32 height, u32 bands, 4 zero bytes, then
// W·H·M little-endian binary32 samples, band 0 first.
inline constexpr std::size_t kMbrHeaderBytes = 20;

MultiBandImage load_image(const std::filesystem::path& path);
void save_image(const MultiBandImage& image, const std::filesystem::path& path);
/// Loads a single-band MBR file as PAN.
PanImage load_pan(const std::filesystem::path& path);
void save_field(const Field& field, const std::filesystem::path& path);

MultiBandImage gamma_correct(const MultiBandImage& image, double gamma);
/// Per band, maps [min, max] affinely onto [0, 1]; a constant band becomes 0.
MultiBandImage linear_rescale(const MultiBandImage& image);

// 8-bit visualizations: linear_rescale, then gamma_correct, then round.
void export_pgm(const Field& field, const std::filesystem::path& path, double gamma = 0.75);
void export_ppm(const MultiBandImage& image, const std::array<std::size_t, 3>& rgb_bands,
                const std::filesystem::path& path, double gamma = 0.75);

}  // namespace psr
