#include "psr/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "psr/error.hpp"

namespace psr {
namespace {

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("raster contains a non-finite sample");
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw InvalidArgument(std::string(what) + " does not fit the MBR header");
  return static_cast<std::uint32_t>(v);
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string encode_mbr(std::size_t w, std::size_t h, std::size_t m, std::span<const double> samples) {
  std::string bytes;
  bytes.reserve(kMbrHeaderBytes + 4 * samples.size());
  bytes.append("MBR1", 4);
  put_u32(bytes, checked_u32(w, "width"));
  put_u32(bytes, checked_u32(h, "height"));
  put_u32(bytes, checked_u32(m, "band count"));
  put_u32(bytes, 0);
  for (double s : samples) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
  return bytes;
}

std::uint8_t to_byte(double unit) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0));
}

}  // namespace

Field::Field(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill) {
  if (width == 0 || height == 0) throw InvalidArgument("field dimensions must be positive");
  require_finite(std::span<const double>(&fill, 1));
}

Field::Field(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width == 0 || height == 0) throw InvalidArgument("field dimensions must be positive");
  if (values_.size() != width * height) throw InvalidArgument("field sample count != width*height");
  require_finite(values_);
}

MultiBandImage::MultiBandImage(std::size_t width, std::size_t height, std::size_t bands, double fill)
    : width_(width), height_(height), bands_(bands), samples_(width * height * bands, fill) {
  if (width == 0 || height == 0 || bands == 0)
    throw InvalidArgument("image dimensions must be positive");
  require_finite(std::span<const double>(&fill, 1));
}

MultiBandImage::MultiBandImage(std::size_t width, std::size_t height, std::size_t bands,
                               std::vector<double> samples)
    : width_(width), height_(height), bands_(bands), samples_(std::move(samples)) {
  if (width == 0 || height == 0 || bands == 0)
    throw InvalidArgument("image dimensions must be positive");
  if (samples_.size() != width * height * bands)
    throw InvalidArgument("image sample count != width*height*bands");
  require_finite(samples_);
}

MultiBandImage MultiBandImage::from_bands(std::span<const Field> bands) {
  if (bands.empty()) throw InvalidArgument("at least one band is required");
  MultiBandImage image(bands[0].width(), bands[0].height(), bands.size());
  for (std::size_t m = 0; m < bands.size(); ++m) image.set_band(m, bands[m]);
  return image;
}

std::span<const double> MultiBandImage::band(std::size_t m) const {
  if (m >= bands_) throw InvalidArgument("band index out of range");
  return std::span<const double>(samples_).subspan(m * pixels(), pixels());
}

std::span<double> MultiBandImage::band(std::size_t m) {
  if (m >= bands_) throw InvalidArgument("band index out of range");
  return std::span<double>(samples_).subspan(m * pixels(), pixels());
}

Field MultiBandImage::band_field(std::size_t m) const {
  auto b = band(m);
  return Field(width_, height_, std::vector<double>(b.begin(), b.end()));
}

void MultiBandImage::set_band(std::size_t m, const Field& values) {
  if (values.width() != width_ || values.height() != height_)
    throw DimensionMismatch("band shape differs from image shape");
  std::ranges::copy(values.values(), band(m).begin());
}

MultiBandImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");

  if (bytes.size() < kMbrHeaderBytes || bytes.compare(0, 4, "MBR1") != 0)
    throw MalformedHeader("'" + path.string() + "' is not an MBR1 file");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t w = get_u32(raw + 4);
  const std::uint64_t h = get_u32(raw + 8);
  const std::uint64_t m = get_u32(raw + 12);
  if (get_u32(raw + 16) != 0) throw MalformedHeader("MBR reserved bytes must be zero");
  if (w == 0 || h == 0 || m == 0) throw MalformedHeader("MBR header declares an empty image");

  // w·h fits in 64 bits; the remaining products are checked explicitly.
  const std::uint64_t max_samples =
      std::min<std::uint64_t>(std::numeric_limits<std::size_t>::max(), (std::uint64_t{1} << 62)) / 4;
  const std::uint64_t plane = w * h;
  if (plane > max_samples / m) throw DimensionOverflow("MBR dimensions overflow the sample count");
  const std::uint64_t count = plane * m;

  const std::uint64_t payload = bytes.size() - kMbrHeaderBytes;
  if (payload < 4 * count)
    throw TruncatedPayload("'" + path.string() + "' holds " + std::to_string(payload) +
                           " payload bytes, header requires " + std::to_string(4 * count));
  if (payload > 4 * count) throw MalformedHeader("trailing bytes after the MBR payload");

  std::vector<double> samples(count);
  const unsigned char* p = raw + kMbrHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i, p += 4)
    samples[i] = static_cast<double>(std::bit_cast<float>(get_u32(p)));
  try {
    return MultiBandImage(w, h, m, std::move(samples));
  } catch (const InvalidArgument&) {
    throw MalformedHeader("'" + path.string() + "' contains non-finite samples");
  }
}

void save_image(const MultiBandImage& image, const std::filesystem::path& path) {
  write_bytes(encode_mbr(image.width(), image.height(), image.bands(), image.samples()), path);
}

PanImage load_pan(const std::filesystem::path& path) {
  MultiBandImage image = load_image(path);
  if (image.bands() != 1)
    throw InvalidArgument("'" + path.string() + "' has " + std::to_string(image.bands()) +
                          " bands, a PAN image must have exactly one");
  return PanImage(image.band_field(0));
}

void save_field(const Field& field, const std::filesystem::path& path) {
  write_bytes(encode_mbr(field.width(), field.height(), 1, field.values()), path);
}

MultiBandImage gamma_correct(const MultiBandImage& image, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
  std::vector<double> out(image.samples().begin(), image.samples().end());
  for (double& s : out) {
    if (s < 0.0 || s > 1.0) throw InvalidArgument("gamma_correct expects samples in [0, 1]");
    s = std::pow(s, gamma);
  }
  return MultiBandImage(image.width(), image.height(), image.bands(), std::move(out));
}

MultiBandImage linear_rescale(const MultiBandImage& image) {
  MultiBandImage out = image;
  for (std::size_t m = 0; m < image.bands(); ++m) {
    auto band = out.band(m);
    const auto [lo, hi] = std::ranges::minmax(band);
    if (hi == lo) {
      std::ranges::fill(band, 0.0);
      continue;
    }
    const double span = hi - lo;
    for (double& s : band) s = std::clamp((s - lo) / span, 0.0, 1.0);
  }
  return out;
}

void export_pgm(const Field& field, const std::filesystem::path& path, double gamma) {
  const std::vector<double> values(field.values().begin(), field.values().end());
  const MultiBandImage shown =
      gamma_correct(linear_rescale(MultiBandImage(field.width(), field.height(), 1, values)), gamma);
  std::string bytes = "P5\n" + std::to_string(field.width()) + " " + std::to_string(field.height()) +
                      "\n255\n";
  for (double s : shown.samples()) bytes.push_back(static_cast<char>(to_byte(s)));
  write_bytes(bytes, path);
}

void export_ppm(const MultiBandImage& image, const std::array<std::size_t, 3>& rgb_bands,
                const std::filesystem::path& path, double gamma) {
  std::vector<Field> channels;
  for (std::size_t b : rgb_bands) channels.push_back(image.band_field(b));
  const MultiBandImage shown = gamma_correct(linear_rescale(MultiBandImage::from_bands(channels)), gamma);
  std::string bytes = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                      "\n255\n";
  for (std::size_t i = 0; i < shown.pixels(); ++i)
    for (std::size_t c = 0; c < 3; ++c) bytes.push_back(static_cast<char>(to_byte(shown.band(c)[i])));
  write_bytes(bytes, path);
}

}  // namespace psr
