#pragma once

#include <cstddef>
#include <cstdint>

#include "psr/raster.hpp"

namespace psr {

/// Procedural 4-band (B, G, R, NIR) scene: smoothly varying land cover with
/// sharp-edged objects, striped and noisy textures. Deterministic in `seed`.
struct SceneSpec {
  std::size_t width = 768;
  std::size_t height = 768;
  std::uint64_t seed = 1;
  std::size_t objects = 70;
};

MultiBandImage generate_scene(const SceneSpec& spec);

}  // namespace psr
