#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "polysnake/geometry.hpp"
#include "polysnake/image.hpp"

namespace polysnake {

/// Layout of the fixed evaluation window: an interior grid with a pad ring on
/// each side, S = grid + 2*pad pixels per axis.
struct ClipConfig {
  std::size_t grid = 64;
  std::size_t pad = 4;

  std::size_t size() const { return grid + 2 * pad; }

  void validate() const {
    if (grid < 8) throw std::invalid_argument("clip grid must be >= 8");
  }
};

namespace detail {

// Resolve one axis of a bilinear lookup: neighbor indices and weights for
// position x in pixel-index space, clamped to the image border.
inline void linear_axis(double x, std::size_t size, std::size_t& i0,
                        std::size_t& i1, double& w0, double& w1) {
  if (x <= 0.0) {
    i0 = i1 = 0;
    w0 = 1.0;
    w1 = 0.0;
  } else if (x >= static_cast<double>(size - 1)) {
    i0 = i1 = size - 1;
    w0 = 1.0;
    w1 = 0.0;
  } else {
    i0 = static_cast<std::size_t>(x);
    i1 = i0 + 1;
    w1 = x - static_cast<double>(i0);
    w0 = 1.0 - w1;
  }
}

}  // namespace detail

/// Bilinear sample at image point (px, py), where pixel (x, y) holds the
/// value at its center (x + 0.5, y + 0.5). Points outside the pixel-center
/// lattice clamp to the border.
inline Color bilinear_sample(const ImagePatch& img, double px, double py) {
  std::size_t x0, x1, y0, y1;
  double wx0, wx1, wy0, wy1;
  detail::linear_axis(px - 0.5, img.width(), x0, x1, wx0, wx1);
  detail::linear_axis(py - 0.5, img.height(), y0, y1, wy0, wy1);
  return wy0 * (wx0 * img.at(x0, y0) + wx1 * img.at(x1, y0)) +
         wy1 * (wx0 * img.at(x0, y1) + wx1 * img.at(x1, y1));
}

/// Affine frame tying the image to the evaluation window: the anchor box maps
/// onto [pad, pad+grid]^2, so the pad ring around it samples real image
/// content just outside the box. Scales are per axis.
class ClipFrame {
 public:
  ClipFrame(const Box& anchor, const ClipConfig& cfg, ImagePatch patch)
      : x1_(anchor.x1),
        y1_(anchor.y1),
        sx_(static_cast<double>(cfg.grid) / anchor.width()),
        sy_(static_cast<double>(cfg.grid) / anchor.height()),
        pad_(static_cast<double>(cfg.pad)),
        size_(cfg.size()),
        patch_(std::move(patch)) {}

  double scale_x() const { return sx_; }
  double scale_y() const { return sy_; }
  std::size_t size() const { return size_; }
  const ImagePatch& patch() const { return patch_; }

  Vec2 to_grid(Vec2 p) const {
    return {pad_ + (p.x - x1_) * sx_, pad_ + (p.y - y1_) * sy_};
  }
  Vec2 to_image(Vec2 g) const {
    return {x1_ + (g.x - pad_) / sx_, y1_ + (g.y - pad_) / sy_};
  }

  Polygon to_grid(const Polygon& poly) const {
    std::vector<Vec2> pts;
    pts.reserve(poly.size());
    for (const Vec2& p : poly.vertices()) pts.push_back(to_grid(p));
    return Polygon(std::move(pts));
  }
  Polygon to_image(const Polygon& poly) const {
    std::vector<Vec2> pts;
    pts.reserve(poly.size());
    for (const Vec2& p : poly.vertices()) pts.push_back(to_image(p));
    return Polygon(std::move(pts));
  }

  Box to_grid(const Box& b) const {
    const Vec2 a = to_grid(Vec2{b.x1, b.y1});
    const Vec2 c = to_grid(Vec2{b.x2, b.y2});
    return {a.x, a.y, c.x, c.y};
  }

  /// Chain a gradient taken w.r.t. grid-frame vertex coordinates into the
  /// image frame (d/dx_image = s_x * d/dx_grid). Layout [x0, y0, x1, y1, ...].
  std::vector<double> grad_to_image(const std::vector<double>& grad_grid) const {
    std::vector<double> g(grad_grid.size());
    for (std::size_t i = 0; i + 1 < grad_grid.size(); i += 2) {
      g[i] = sx_ * grad_grid[i];
      g[i + 1] = sy_ * grad_grid[i + 1];
    }
    return g;
  }

  /// Inverse chain: image-frame gradient into grid-frame coordinates.
  std::vector<double> grad_to_grid(const std::vector<double>& grad_image) const {
    std::vector<double> g(grad_image.size());
    for (std::size_t i = 0; i + 1 < grad_image.size(); i += 2) {
      g[i] = grad_image[i] / sx_;
      g[i + 1] = grad_image[i + 1] / sy_;
    }
    return g;
  }

 private:
  double x1_, y1_, sx_, sy_, pad_;
  std::size_t size_;
  ImagePatch patch_;
};

/// Build the evaluation window for one annotation box: resample the image
/// bilinearly at the S x S window pixel centers mapped back into the image.
inline ClipFrame make_clip_frame(const Box& gt, const ImagePatch& img,
                                 const ClipConfig& cfg) {
  cfg.validate();
  if (!gt.valid() || gt.width() <= 0.0 || gt.height() <= 0.0)
    throw std::invalid_argument("anchor box must have positive area");

  const std::size_t s = cfg.size();
  ImagePatch patch(s, s);
  ClipFrame frame(gt, cfg, ImagePatch(1, 1));
  for (std::size_t y = 0; y < s; ++y)
    for (std::size_t x = 0; x < s; ++x) {
      const Vec2 center{static_cast<double>(x) + 0.5,
                        static_cast<double>(y) + 0.5};
      const Vec2 p = frame.to_image(center);
      patch.at(x, y) = bilinear_sample(img, p.x, p.y);
    }
  return ClipFrame(gt, cfg, std::move(patch));
}

}  // namespace polysnake
