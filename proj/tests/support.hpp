#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "psr/nlweights.hpp"
#include "psr/raster.hpp"

namespace psr::test {

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline Field random_field(std::size_t w, std::size_t h, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return Field(w, h, random_values(w * h, rng, lo, hi));
}

inline MultiBandImage random_image(std::size_t w, std::size_t h, std::size_t m, std::mt19937_64& rng,
                                   double lo = 0.0, double hi = 1.0) {
  return MultiBandImage(w, h, m, random_values(w * h * m, rng, lo, hi));
}

/// Random row-stochastic graph with zeros towards pixels outside the image.
inline WeightGraph random_graph(std::size_t w, std::size_t h, int nu_r, std::mt19937_64& rng) {
  const auto offsets = window_offsets(nu_r);
  const std::size_t n = w * h;
  std::vector<double> planes(offsets.size() * n, 0.0);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<long>(i % w), y = static_cast<long>(i / w);
    double sum = 0.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const long xj = x + offsets[k].dx, yj = y + offsets[k].dy;
      if (xj < 0 || yj < 0 || xj >= static_cast<long>(w) || yj >= static_cast<long>(h)) continue;
      planes[k * n + i] = dist(rng);
      sum += planes[k * n + i];
    }
    for (std::size_t k = 0; k < offsets.size(); ++k) planes[k * n + i] /= sum;
  }
  return WeightGraph(w, h, nu_r, std::move(planes));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("psr-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path);

}  // namespace psr::test
