#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace polysnake {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return s * a; }
inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline bool finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Axis-aligned rectangle in corner form, x1 <= x2 and y1 <= y2.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (x1 + x2), 0.5 * (y1 + y2)}; }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 <= x2 && y1 <= y2;
  }
};

inline bool operator==(const Box& a, const Box& b) {
  return a.x1 == b.x1 && a.y1 == b.y1 && a.x2 == b.x2 && a.y2 == b.y2;
}

/// Closed contour given by K >= 3 ordered vertices. Index order defines the
/// contour; initializers produce counterclockwise order (positive shoelace
/// area). Self-intersections are permitted.
class Polygon {
 public:
  explicit Polygon(std::vector<Vec2> vertices) : pts_(std::move(vertices)) {
    if (pts_.size() < 3)
      throw std::invalid_argument("polygon needs at least 3 vertices");
    for (const Vec2& p : pts_)
      if (!finite(p))
        throw std::invalid_argument("polygon vertex is not finite");
  }

  std::size_t size() const { return pts_.size(); }
  const Vec2& operator[](std::size_t i) const { return pts_[i]; }
  const std::vector<Vec2>& vertices() const { return pts_; }

 private:
  std::vector<Vec2> pts_;
};

/// Shoelace area; positive for counterclockwise vertex order.
inline double signed_area(const Polygon& poly) {
  double acc = 0.0;
  const std::size_t k = poly.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % k];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

inline double perimeter(const Polygon& poly) {
  double acc = 0.0;
  const std::size_t k = poly.size();
  for (std::size_t i = 0; i < k; ++i) acc += norm(poly[(i + 1) % k] - poly[i]);
  return acc;
}

/// Tight bounding box of a polygon plus, per side, the index of the vertex
/// attaining it. The lowest index wins ties so the subgradient routing is
/// deterministic.
struct PolygonBounds {
  Box box;
  std::size_t min_x_vertex = 0;
  std::size_t min_y_vertex = 0;
  std::size_t max_x_vertex = 0;
  std::size_t max_y_vertex = 0;
};

inline PolygonBounds bbox_of(const Polygon& poly) {
  PolygonBounds r;
  r.box = {poly[0].x, poly[0].y, poly[0].x, poly[0].y};
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    if (p.x < r.box.x1) { r.box.x1 = p.x; r.min_x_vertex = i; }
    if (p.y < r.box.y1) { r.box.y1 = p.y; r.min_y_vertex = i; }
    if (p.x > r.box.x2) { r.box.x2 = p.x; r.max_x_vertex = i; }
    if (p.y > r.box.y2) { r.box.y2 = p.y; r.max_y_vertex = i; }
  }
  return r;
}

/// Even-odd (crossing number) containment test. Points exactly on an edge
/// count as inside.
inline bool point_in_polygon(const Polygon& poly, Vec2 p) {
  const std::size_t k = poly.size();
  bool inside = false;
  for (std::size_t i = 0, j = k - 1; i < k; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    const Vec2 e = b - a;
    const Vec2 w = p - a;
    if (cross(e, w) == 0.0) {
      const double t = dot(w, e);
      if (t >= 0.0 && t <= dot(e, e)) return true;  // on the edge
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

enum class SegmentZone { before, interior, after };

/// Distance from a query point to the nearest contour segment, the projection
/// parameter u, which branch of the piecewise distance applied, and the
/// derivative of the distance with respect to the segment endpoints. Only the
/// four coordinates of the nearest segment carry gradient.
struct SegmentDistanceResult {
  double distance = 0.0;
  std::size_t segment_index = 0;  // segment (v[i], v[(i+1) % K])
  double u = 0.0;
  SegmentZone zone = SegmentZone::before;
  Vec2 d_first{};   // d distance / d v[segment_index]
  Vec2 d_second{};  // d distance / d v[(segment_index+1) % K]

  /// Expand to a 2K vector laid out [x0, y0, x1, y1, ...].
  std::vector<double> dense_gradient(std::size_t vertex_count) const {
    std::vector<double> g(2 * vertex_count, 0.0);
    const std::size_t i = segment_index;
    const std::size_t j = (segment_index + 1) % vertex_count;
    g[2 * i] += d_first.x;
    g[2 * i + 1] += d_first.y;
    g[2 * j] += d_second.x;
    g[2 * j + 1] += d_second.y;
    return g;
  }
};

namespace detail {

struct SegmentProbe {
  double dist2;
  double u;
  SegmentZone zone;
};

inline SegmentProbe probe_segment(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 e = b - a;
  const double len2 = dot(e, e);
  if (len2 == 0.0) {
    const Vec2 w = p - a;
    return {dot(w, w), 0.0, SegmentZone::before};  // degenerate: a point
  }
  const Vec2 w = p - a;
  const double u = dot(w, e) / len2;
  if (u <= 0.0) return {dot(w, w), u, SegmentZone::before};
  if (u >= 1.0) {
    const Vec2 w2 = p - b;
    return {dot(w2, w2), u, SegmentZone::after};
  }
  const Vec2 foot = a + u * e;
  const Vec2 r = p - foot;
  return {dot(r, r), u, SegmentZone::interior};
}

}  // namespace detail

inline SegmentDistanceResult nearest_segment_distance(const Polygon& poly,
                                                      Vec2 p) {
  const std::size_t k = poly.size();
  SegmentDistanceResult best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const auto pr = detail::probe_segment(poly[i], poly[(i + 1) % k], p);
    if (pr.dist2 < best_d2) {
      best_d2 = pr.dist2;
      best.segment_index = i;
      best.u = pr.u;
      best.zone = pr.zone;
    }
  }
  best.distance = std::sqrt(best_d2);

  const Vec2 a = poly[best.segment_index];
  const Vec2 b = poly[(best.segment_index + 1) % k];
  const double d = best.distance;
  if (d == 0.0) return best;  // on the contour: subgradient zero

  switch (best.zone) {
    case SegmentZone::before:
      best.d_first = (1.0 / d) * (a - p);
      break;
    case SegmentZone::after:
      best.d_second = (1.0 / d) * (b - p);
      break;
    case SegmentZone::interior: {
      // d = |c| / L with c the edge-by-offset cross product.
      const Vec2 e = b - a;
      const double len = norm(e);
      const double c = cross(e, p - a);
      const double s = c >= 0.0 ? 1.0 : -1.0;
      best.d_first.x = (s * (b.y - p.y) + d * e.x / len) / len;
      best.d_first.y = (s * (p.x - b.x) + d * e.y / len) / len;
      best.d_second.x = (s * (p.y - a.y) - d * e.x / len) / len;
      best.d_second.y = (s * (a.x - p.x) - d * e.y / len) / len;
      break;
    }
  }
  return best;
}

namespace detail {

inline void require_positive_box(const Box& box) {
  if (!box.valid() || box.width() <= 0.0 || box.height() <= 0.0)
    throw std::invalid_argument("box must have positive width and height");
}

/// Place `count` points at equal arc-length spacing along the closed
/// polyline `loop` (last point connects back to the first). The first output
/// point sits at arc length zero.
inline std::vector<Vec2> points_at_uniform_arcs(std::span<const Vec2> loop,
                                                std::size_t count) {
  const std::size_t n = loop.size();
  std::vector<double> seg_len(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    seg_len[i] = norm(loop[(i + 1) % n] - loop[i]);
    total += seg_len[i];
  }
  if (total <= 0.0)
    throw std::invalid_argument("contour has zero perimeter");

  std::vector<Vec2> out;
  out.reserve(count);
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const double s = total * static_cast<double>(j) / static_cast<double>(count);
    while (seg + 1 < n && s > seg_start + seg_len[seg]) {
      seg_start += seg_len[seg];
      ++seg;
    }
    const Vec2 a = loop[seg];
    const Vec2 b = loop[(seg + 1) % n];
    const double t = seg_len[seg] > 0.0 ? (s - seg_start) / seg_len[seg] : 0.0;
    out.push_back(a + t * (b - a));
  }
  return out;
}

}  // namespace detail

/// K vertices on the ellipse inscribed in the box, at angles 2*pi*j/K,
/// counterclockwise starting from the +x direction.
inline Polygon init_ellipse(const Box& box, std::size_t vertex_count) {
  detail::require_positive_box(box);
  if (vertex_count < 3)
    throw std::invalid_argument("need at least 3 vertices");
  const Vec2 c = box.center();
  const double ax = 0.5 * box.width();
  const double ay = 0.5 * box.height();
  std::vector<Vec2> pts;
  pts.reserve(vertex_count);
  for (std::size_t j = 0; j < vertex_count; ++j) {
    const double theta =
        2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(vertex_count);
    pts.push_back({c.x + ax * std::cos(theta), c.y + ay * std::sin(theta)});
  }
  return Polygon(std::move(pts));
}

/// K vertices equally spaced by arc length along the box perimeter,
/// counterclockwise starting at the midpoint of the right edge.
inline Polygon init_square(const Box& box, std::size_t vertex_count) {
  detail::require_positive_box(box);
  if (vertex_count < 3)
    throw std::invalid_argument("need at least 3 vertices");
  const double yc = 0.5 * (box.y1 + box.y2);
  const Vec2 loop[5] = {{box.x2, yc},
                        {box.x2, box.y2},
                        {box.x1, box.y2},
                        {box.x1, box.y1},
                        {box.x2, box.y1}};
  return Polygon(detail::points_at_uniform_arcs(loop, vertex_count));
}

/// Redistribute K vertices at equal arc-length spacing along the existing
/// contour. The first output vertex keeps the original first vertex's
/// position; orientation is preserved.
inline Polygon resample_uniform(const Polygon& poly, std::size_t vertex_count) {
  if (vertex_count < 3)
    throw std::invalid_argument("need at least 3 vertices");
  return Polygon(detail::points_at_uniform_arcs(poly.vertices(), vertex_count));
}

}  // namespace polysnake
