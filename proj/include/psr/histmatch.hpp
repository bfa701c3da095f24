#pragma once

#include "psr/raster.hpp"

namespace psr {

struct MatchParams {
  int window = 15;  // odd side of the sliding square patch
  int stride = 1;

  void validate() const;
};

/// Moment matching: (sd(target) / sd(pan)) (pan - mean(pan)) + mean(target),
/// population statistics over the whole image. Throws DegenerateInput for a
/// constant PAN.
Field match_global(const Field& pan, const Field& target);

/// Moment matching on sliding window×window patches whose contributions are
/// averaged per pixel.
///
/// Patch origins run 0, stride, 2·stride, ... along each axis, with the last
/// in-bounds origin appended when the stride skips it, so every pixel is
/// covered; a stride larger than the window is reduced to the window. Along an axis shorter than the window the patch is clipped to
/// the image. A patch whose PAN is flat (sd < 1e-12 · PAN range) contributes
/// the target patch mean.
Field match_local(const Field& pan, const Field& target, const MatchParams& params);

}  // namespace psr
