#include "psr/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "psr/error.hpp"

namespace psr {
namespace {

constexpr std::size_t kBands = 4;
using Spectrum = std::array<double, kBands>;

// Rough reflectance signatures scaled to a 12-bit-like range.
constexpr std::array<Spectrum, 8> kMaterials{{
    {180, 320, 210, 1150},  // vegetation
    {240, 420, 300, 1400},  // grass
    {420, 520, 600, 720},   // bare soil
    {220, 260, 200, 90},    // water
    {700, 720, 740, 760},   // concrete roof
    {330, 340, 350, 370},   // asphalt
    {520, 380, 300, 420},   // red tiles
    {300, 500, 620, 900},   // dry field
}};

class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::mt19937_64 engine_;
};

/// Bilinearly interpolated lattice noise in [0, 1] with the given cell size.
class ValueNoise {
 public:
  ValueNoise(Random& rng, std::size_t width, std::size_t height, double cell)
      : cell_(cell), cols_(static_cast<std::size_t>(width / cell) + 2), rows_(static_cast<std::size_t>(height / cell) + 2) {
    lattice_.resize(cols_ * rows_);
    for (double& v : lattice_) v = rng.uniform();
  }

  double operator()(double x, double y) const {
    const double gx = x / cell_, gy = y / cell_;
    const auto ix = static_cast<std::size_t>(gx), iy = static_cast<std::size_t>(gy);
    const double fx = gx - static_cast<double>(ix), fy = gy - static_cast<double>(iy);
    const double sx = fx * fx * (3 - 2 * fx), sy = fy * fy * (3 - 2 * fy);
    auto at = [&](std::size_t cx, std::size_t cy) { return lattice_[cy * cols_ + cx]; };
    const double top = at(ix, iy) + sx * (at(ix + 1, iy) - at(ix, iy));
    const double bottom = at(ix, iy + 1) + sx * (at(ix + 1, iy + 1) - at(ix, iy + 1));
    return top + sy * (bottom - top);
  }

 private:
  double cell_;
  std::size_t cols_, rows_;
  std::vector<double> lattice_;
};

Spectrum perturbed(Random& rng, const Spectrum& base) {
  Spectrum s = base;
  const double gain = rng.uniform(0.8, 1.2);
  for (double& v : s) v *= gain * rng.uniform(0.9, 1.1);
  return s;
}

struct Shape {
  enum Kind { box, disk, stripe_field } kind;
  double cx, cy, a, b, angle;
  Spectrum spectrum;
  double texture_freq, texture_angle, texture_amp;
  double c = 1.0, s = 0.0, tc = 1.0, ts = 0.0;

  bool contains(double x, double y) const {
    const double u = c * (x - cx) + s * (y - cy);
    const double v = -s * (x - cx) + c * (y - cy);
    if (kind == disk) return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    return std::abs(u) <= a && std::abs(v) <= b;
  }

  double texture(double x, double y) const {
    const double t = x * tc + y * ts;
    const double wave = std::sin(2.0 * std::numbers::pi * texture_freq * t);
    // Stripe fields get a square wave to carry sharp, aliasing-prone edges.
    return 1.0 + texture_amp * (kind == stripe_field ? (wave >= 0 ? 1.0 : -1.0) : wave);
  }
};

}  // namespace

MultiBandImage generate_scene(const SceneSpec& spec) {
  if (spec.width < 8 || spec.height < 8) throw InvalidArgument("scene must be at least 8x8");
  Random rng(spec.seed);
  const auto w = static_cast<double>(spec.width), h = static_cast<double>(spec.height);

  const Spectrum ground_a = perturbed(rng, kMaterials[rng.index(kMaterials.size())]);
  const Spectrum ground_b = perturbed(rng, kMaterials[rng.index(kMaterials.size())]);
  const ValueNoise coarse(rng, spec.width, spec.height, std::max(w, h) / 4.0);
  const ValueNoise medium(rng, spec.width, spec.height, 24.0);
  const ValueNoise fine(rng, spec.width, spec.height, 2.5);

  std::vector<Shape> shapes;
  for (std::size_t s = 0; s < spec.objects; ++s) {
    Shape shape{};
    const double pick = rng.uniform();
    shape.kind = pick < 0.45 ? Shape::box : (pick < 0.8 ? Shape::disk : Shape::stripe_field);
    shape.cx = rng.uniform(0, w);
    shape.cy = rng.uniform(0, h);
    const double scale = std::min(w, h);
    shape.a = rng.uniform(0.02, 0.12) * scale;
    shape.b = rng.uniform(0.02, 0.12) * scale;
    shape.angle = rng.uniform(0, std::numbers::pi);
    shape.spectrum = perturbed(rng, kMaterials[rng.index(kMaterials.size())]);
    shape.texture_freq = rng.uniform(0.01, 0.12);
    shape.texture_angle = rng.uniform(0, std::numbers::pi);
    shape.texture_amp = shape.kind == Shape::stripe_field ? rng.uniform(0.15, 0.35) : rng.uniform(0.0, 0.15);
    shape.c = std::cos(shape.angle);
    shape.s = std::sin(shape.angle);
    shape.tc = std::cos(shape.texture_angle);
    shape.ts = std::sin(shape.texture_angle);
    shapes.push_back(shape);
  }

  MultiBandImage image(spec.width, spec.height, kBands);
  const std::size_t n = spec.width * spec.height;
  auto samples = image.samples();
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const double fx = static_cast<double>(x) + 0.5, fy = static_cast<double>(y) + 0.5;
      const double mix = coarse(fx, fy);
      Spectrum value;
      for (std::size_t m = 0; m < kBands; ++m) value[m] = ground_a[m] + mix * (ground_b[m] - ground_a[m]);
      double texture = 0.85 + 0.3 * medium(fx, fy);
      // Later shapes are drawn on top.
      for (auto it = shapes.rbegin(); it != shapes.rend(); ++it) {
        if (!it->contains(fx, fy)) continue;
        value = it->spectrum;
        texture = it->texture(fx, fy);
        break;
      }
      const double grain = 1.0 + 0.04 * (fine(fx, fy) - 0.5);
      for (std::size_t m = 0; m < kBands; ++m) samples[m * n + y * spec.width + x] = value[m] * texture * grain;
    }
  }
  return image;
}

}  // namespace psr
