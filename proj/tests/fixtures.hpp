// Synthetic single-object scenes with analytic ground truth: bright shape on
// a dark background plus seeded Gaussian noise. The mask is the shape
// predicate evaluated at pixel centers; the box is the shape's tight bounds.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "polysnake/geometry.hpp"
#include "polysnake/image.hpp"

namespace fixtures {

struct SyntheticScene {
  std::string name;
  polysnake::ImagePatch image;
  polysnake::Mask mask;
  polysnake::Box box;
};

namespace detail {

inline SyntheticScene render_scene(
    const std::string& name, std::size_t size,
    const std::function<bool(polysnake::Vec2)>& inside, polysnake::Box box,
    std::uint64_t seed, double noise_sigma = 0.02) {
  const polysnake::Color bg{0.06, 0.07, 0.08};
  const polysnake::Color fg{0.95, 0.93, 0.90};
  polysnake::ImagePatch img(size, size);
  polysnake::Mask mask(size, size);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const polysnake::Vec2 p{static_cast<double>(x) + 0.5,
                              static_cast<double>(y) + 0.5};
      const bool in = inside(p);
      mask.at(x, y) = in ? 1 : 0;
      const polysnake::Color base = in ? fg : bg;
      img.at(x, y) = {std::clamp(base.r + noise(rng), 0.0, 1.0),
                      std::clamp(base.g + noise(rng), 0.0, 1.0),
                      std::clamp(base.b + noise(rng), 0.0, 1.0)};
    }
  return {name, std::move(img), std::move(mask), box};
}

}  // namespace detail

inline SyntheticScene disk_scene(std::uint64_t seed = 11,
                                 std::size_t size = 96) {
  const polysnake::Vec2 c{0.5 * static_cast<double>(size),
                          0.5 * static_cast<double>(size)};
  const double r = 30.0;
  return detail::render_scene(
      "disk", size,
      [c, r](polysnake::Vec2 p) { return polysnake::norm(p - c) <= r; },
      {c.x - r, c.y - r, c.x + r, c.y + r}, seed);
}

inline SyntheticScene rotated_square_scene(std::uint64_t seed = 12,
                                           std::size_t size = 96) {
  const polysnake::Vec2 c{0.5 * static_cast<double>(size),
                          0.5 * static_cast<double>(size)};
  const double half = 24.0;
  const double angle = std::numbers::pi / 6.0;  // 30 degrees
  const double co = std::cos(angle), si = std::sin(angle);
  const double ext = half * (std::abs(co) + std::abs(si));
  return detail::render_scene(
      "rotated_square", size,
      [c, half, co, si](polysnake::Vec2 p) {
        const polysnake::Vec2 d = p - c;
        const double u = co * d.x + si * d.y;
        const double v = -si * d.x + co * d.y;
        return std::abs(u) <= half && std::abs(v) <= half;
      },
      {c.x - ext, c.y - ext, c.x + ext, c.y + ext}, seed);
}

inline SyntheticScene star_scene(std::uint64_t seed = 13,
                                 std::size_t size = 96) {
  const polysnake::Vec2 c{0.5 * static_cast<double>(size),
                          0.5 * static_cast<double>(size)};
  const double r0 = 24.0;
  const double amp = 0.35;
  const int lobes = 5;
  const auto radius = [r0, amp, lobes](double theta) {
    return r0 * (1.0 + amp * std::cos(lobes * theta));
  };
  // Tight bounds by dense sweep (the lobed boundary has no closed form).
  double x1 = c.x, y1 = c.y, x2 = c.x, y2 = c.y;
  for (int i = 0; i < 200000; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 200000.0;
    const double r = radius(t);
    x1 = std::min(x1, c.x + r * std::cos(t));
    x2 = std::max(x2, c.x + r * std::cos(t));
    y1 = std::min(y1, c.y + r * std::sin(t));
    y2 = std::max(y2, c.y + r * std::sin(t));
  }
  return detail::render_scene(
      "star", size,
      [c, radius](polysnake::Vec2 p) {
        const polysnake::Vec2 d = p - c;
        return polysnake::norm(d) <= radius(std::atan2(d.y, d.x));
      },
      {x1, y1, x2, y2}, seed);
}

inline std::vector<SyntheticScene> synthetic_suite() {
  std::vector<SyntheticScene> suite;
  suite.push_back(disk_scene());
  suite.push_back(rotated_square_scene());
  suite.push_back(star_scene());
  return suite;
}

}  // namespace fixtures
