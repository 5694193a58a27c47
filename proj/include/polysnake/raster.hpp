#pragma once

#include <cstddef>
#include <stdexcept>

#include "polysnake/geometry.hpp"
#include "polysnake/image.hpp"

namespace polysnake {

/// Binary mask of the polygon: pixel (x, y) is set iff its center is inside
/// under the even-odd rule, matching point_in_polygon pixel for pixel.
inline Mask rasterize_polygon(const Polygon& poly, std::size_t width,
                              std::size_t height) {
  Mask m(width, height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      m.at(x, y) = point_in_polygon(poly, {static_cast<double>(x) + 0.5,
                                           static_cast<double>(y) + 0.5})
                       ? 1
                       : 0;
  return m;
}

/// Intersection over union of two binary masks. Two empty masks are
/// identical, so they score 1.
inline double mask_iou(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument("mask dimensions differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t y = 0; y < a.height(); ++y)
    for (std::size_t x = 0; x < a.width(); ++x) {
      const bool pa = a.at(x, y) != 0;
      const bool pb = b.at(x, y) != 0;
      inter += pa && pb;
      uni += pa || pb;
    }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace polysnake
