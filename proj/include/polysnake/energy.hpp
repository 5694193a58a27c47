#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polysnake/clip.hpp"
#include "polysnake/geometry.hpp"
#include "polysnake/image.hpp"

namespace polysnake {

struct EnergyConfig {
  double alpha = 1.0;   // box-fit term weight
  double beta = 0.5;    // local pairwise weight
  double gamma = 0.03;  // global (region) pairwise weight
  double tau = 0.1;     // membership relaxation temperature, grid pixels
  double sigma_i = 1.0; // color affinity temperature
  std::size_t window = 3;
  std::size_t dilation = 2;
  enum class Unary { ciou, giou };
  Unary unary_kind = Unary::ciou;
  // Differentiate the region term through the region means too, instead of
  // treating the means as constants per evaluation.
  bool region_full_gradient = false;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
      throw std::invalid_argument("loss weights must be >= 0");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(sigma_i > 0.0)) throw std::invalid_argument("sigma_i must be positive");
    if (window < 3 || window % 2 == 0)
      throw std::invalid_argument("window must be odd and >= 3");
    if (dilation < 1) throw std::invalid_argument("dilation must be >= 1");
  }
};

/// Scalar loss plus its gradient w.r.t. vertex coordinates, laid out
/// [x0, y0, x1, y1, ...].
struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;
};

// ---------------------------------------------------------------------------
// Box-overlap losses

/// IoU-style score of box `a` against reference `b`, differentiated w.r.t.
/// the four coordinates of `a`. `alpha_c` is the aspect coupling factor of
/// the complete-IoU form; it is held constant during differentiation.
struct IouResult {
  double value = 0.0;
  std::array<double, 4> gradient{};  // d value / d (a.x1, a.y1, a.x2, a.y2)
  double alpha_c = 0.0;
};

namespace detail {

// IoU of a against b with d(IoU)/d(a), plus the enclosing-box extents the
// penalty terms need. Ties in the min/max selections resolve toward `a` so
// the subgradient choice is deterministic.
struct BoxOverlap {
  double iou = 0.0;
  double uni = 0.0;
  double ew = 0.0, eh = 0.0;
  std::array<double, 4> d_iou{}, d_uni{}, d_ew{}, d_eh{};
};

inline BoxOverlap overlap(const Box& a, const Box& b) {
  BoxOverlap o;
  const double wa = a.width(), ha = a.height();
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  o.uni = wa * ha + b.width() * b.height() - inter;
  o.iou = inter / o.uni;

  std::array<double, 4> d_inter{};
  if (iw > 0.0 && ih > 0.0) {
    d_inter[0] = a.x1 >= b.x1 ? -ih : 0.0;
    d_inter[1] = a.y1 >= b.y1 ? -iw : 0.0;
    d_inter[2] = a.x2 <= b.x2 ? ih : 0.0;
    d_inter[3] = a.y2 <= b.y2 ? iw : 0.0;
  }
  const std::array<double, 4> d_area{-ha, -wa, ha, wa};
  for (int i = 0; i < 4; ++i) {
    o.d_uni[i] = d_area[i] - d_inter[i];
    o.d_iou[i] = (d_inter[i] * o.uni - inter * o.d_uni[i]) / (o.uni * o.uni);
  }

  o.ew = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  o.eh = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  o.d_ew = {a.x1 <= b.x1 ? -1.0 : 0.0, 0.0, a.x2 >= b.x2 ? 1.0 : 0.0, 0.0};
  o.d_eh = {0.0, a.y1 <= b.y1 ? -1.0 : 0.0, 0.0, a.y2 >= b.y2 ? 1.0 : 0.0};
  return o;
}

inline void require_reference_box(const Box& b) {
  if (!b.valid() || b.width() <= 0.0 || b.height() <= 0.0)
    throw std::invalid_argument("reference box must have positive area");
}

// Aspect angle arctan(w/h). Both extents zero is the collapsed-box case,
// pinned to arctan(1) so the penalty stays finite; its derivative is zero.
inline double aspect_angle(double w, double h) {
  return (w == 0.0 && h == 0.0) ? std::numbers::pi / 4.0 : std::atan2(w, h);
}

}  // namespace detail

/// Complete IoU: IoU minus the normalized center distance and an
/// aspect-ratio penalty. Equals 1 iff the boxes coincide. A degenerate
/// (zero-area) `a` is legal and scores IoU = 0.
inline IouResult ciou(const Box& a, const Box& b) {
  detail::require_reference_box(b);
  const auto o = detail::overlap(a, b);

  const double dcx = 0.5 * (a.x1 + a.x2) - 0.5 * (b.x1 + b.x2);
  const double dcy = 0.5 * (a.y1 + a.y2) - 0.5 * (b.y1 + b.y2);
  const double rho2 = dcx * dcx + dcy * dcy;
  const double c2 = o.ew * o.ew + o.eh * o.eh;  // > 0: b has positive area
  const std::array<double, 4> d_rho2{dcx, dcy, dcx, dcy};

  const double wa = a.width(), ha = a.height();
  const double qa = detail::aspect_angle(wa, ha);
  const double qb = detail::aspect_angle(b.width(), b.height());
  const double dq = qb - qa;
  const double four_over_pi2 = 4.0 / (std::numbers::pi * std::numbers::pi);
  const double v = four_over_pi2 * dq * dq;

  IouResult r;
  const double denom = (1.0 - o.iou) + v;
  r.alpha_c = denom > 0.0 ? v / denom : 0.0;
  r.value = o.iou - rho2 / c2 - r.alpha_c * v;

  std::array<double, 4> d_qa{};
  const double n2 = wa * wa + ha * ha;
  if (n2 > 0.0) {
    const double dq_dw = ha / n2;
    const double dq_dh = -wa / n2;
    d_qa = {-dq_dw, -dq_dh, dq_dw, dq_dh};
  }
  for (int i = 0; i < 4; ++i) {
    const double d_c2 = 2.0 * o.ew * o.d_ew[i] + 2.0 * o.eh * o.d_eh[i];
    const double d_pen = (d_rho2[i] * c2 - rho2 * d_c2) / (c2 * c2);
    const double d_v = four_over_pi2 * 2.0 * dq * (-d_qa[i]);
    r.gradient[i] = o.d_iou[i] - d_pen - r.alpha_c * d_v;
  }
  return r;
}

/// CIoU value with the aspect coupling pinned to a given constant. This is
/// the function the analytic gradient differentiates, so finite-difference
/// probes should use it with alpha_c taken from the base evaluation.
inline double ciou_value(const Box& a, const Box& b, double frozen_alpha_c) {
  detail::require_reference_box(b);
  const auto o = detail::overlap(a, b);
  const double dcx = 0.5 * (a.x1 + a.x2) - 0.5 * (b.x1 + b.x2);
  const double dcy = 0.5 * (a.y1 + a.y2) - 0.5 * (b.y1 + b.y2);
  const double rho2 = dcx * dcx + dcy * dcy;
  const double c2 = o.ew * o.ew + o.eh * o.eh;
  const double dq = detail::aspect_angle(b.width(), b.height()) -
                    detail::aspect_angle(a.width(), a.height());
  const double v = 4.0 / (std::numbers::pi * std::numbers::pi) * dq * dq;
  return o.iou - rho2 / c2 - frozen_alpha_c * v;
}

/// Generalized IoU: IoU minus the enclosing-box slack fraction.
inline IouResult giou(const Box& a, const Box& b) {
  detail::require_reference_box(b);
  const auto o = detail::overlap(a, b);
  const double encl = o.ew * o.eh;
  IouResult r;
  r.value = o.iou - 1.0 + o.uni / encl;
  for (int i = 0; i < 4; ++i) {
    const double d_encl = o.d_ew[i] * o.eh + o.ew * o.d_eh[i];
    r.gradient[i] = o.d_iou[i] + (o.d_uni[i] * encl - o.uni * d_encl) / (encl * encl);
  }
  return r;
}

/// Box-fit term: 1 minus the overlap score of the polygon's bounding box
/// against the annotation box. The gradient lands only on the four vertex
/// coordinates that attain the bounding box.
inline LossValue unary_loss(const Polygon& poly, const Box& gt,
                            const EnergyConfig& cfg) {
  const PolygonBounds b = bbox_of(poly);
  const IouResult r = cfg.unary_kind == EnergyConfig::Unary::giou
                          ? giou(b.box, gt)
                          : ciou(b.box, gt);
  LossValue out;
  out.value = 1.0 - r.value;
  out.gradient.assign(2 * poly.size(), 0.0);
  out.gradient[2 * b.min_x_vertex] -= r.gradient[0];
  out.gradient[2 * b.min_y_vertex + 1] -= r.gradient[1];
  out.gradient[2 * b.max_x_vertex] -= r.gradient[2];
  out.gradient[2 * b.max_y_vertex + 1] -= r.gradient[3];
  return out;
}

// ---------------------------------------------------------------------------
// Relaxed membership field

inline double sigmoid(double a) {
  if (a >= 0.0) {
    const double e = std::exp(-a);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

/// Per-pixel soft membership sampled at pixel centers: sigmoid of the signed
/// contour distance over tau. Each pixel's gradient w.r.t. the vertices is
/// sparse — only the endpoints of its nearest segment contribute — so it is
/// stored as four coefficients plus the segment index.
struct MembershipField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t vertex_count = 0;
  std::vector<double> value;           // soft membership in [0,1]
  std::vector<std::uint8_t> hard;      // 1 = pixel center inside
  std::vector<std::uint32_t> segment;  // nearest segment per pixel
  std::vector<double> gx1, gy1, gx2, gy2;  // d value / d segment endpoints

  std::size_t index(std::size_t x, std::size_t y) const { return y * width + x; }
  double at(std::size_t x, std::size_t y) const { return value[index(x, y)]; }

  /// Add coeff * (d value[i] / d vertices) into a 2K gradient accumulator.
  void accumulate(std::size_t i, double coeff, std::vector<double>& grad) const {
    const std::size_t a = segment[i];
    const std::size_t b = (a + 1) % vertex_count;
    grad[2 * a] += coeff * gx1[i];
    grad[2 * a + 1] += coeff * gy1[i];
    grad[2 * b] += coeff * gx2[i];
    grad[2 * b + 1] += coeff * gy2[i];
  }
};

/// Build the membership field of a polygon over a width x height pixel grid.
/// The inside/outside sign is recomputed per call but carries no gradient;
/// `frozen_hard` substitutes a previously captured sign field so that
/// finite-difference probes see the same piecewise branch the analytic
/// gradient differentiates.
inline MembershipField relaxed_field(
    const Polygon& poly, std::size_t width, std::size_t height, double tau,
    const std::vector<std::uint8_t>* frozen_hard = nullptr) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  MembershipField f;
  f.width = width;
  f.height = height;
  f.vertex_count = poly.size();
  const std::size_t n = width * height;
  f.value.resize(n);
  f.hard.resize(n);
  f.segment.resize(n);
  f.gx1.resize(n);
  f.gy1.resize(n);
  f.gx2.resize(n);
  f.gy2.resize(n);

  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t i = f.index(x, y);
      const Vec2 p{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
      const bool inside =
          frozen_hard ? (*frozen_hard)[i] != 0 : point_in_polygon(poly, p);
      const SegmentDistanceResult d = nearest_segment_distance(poly, p);
      const double s = inside ? 1.0 : -1.0;
      const double u = sigmoid(s * d.distance / tau);
      const double coeff = u * (1.0 - u) * s / tau;
      f.value[i] = u;
      f.hard[i] = inside ? 1 : 0;
      f.segment[i] = static_cast<std::uint32_t>(d.segment_index);
      f.gx1[i] = coeff * d.d_first.x;
      f.gy1[i] = coeff * d.d_first.y;
      f.gx2[i] = coeff * d.d_second.x;
      f.gy2[i] = coeff * d.d_second.y;
    }
  return f;
}

// ---------------------------------------------------------------------------
// Local pairwise term

/// Color affinity of two pixels: exp(-||c1-c2|| / (2 sigma^2)), unsquared
/// Euclidean distance over the channels.
inline double affinity_weight(Color c1, Color c2, double sigma_i) {
  return std::exp(-norm(c1 - c2) / (2.0 * sigma_i * sigma_i));
}

namespace detail {

// Offsets covering half of the dilated window so each unordered pixel pair
// is visited exactly once.
inline std::vector<std::pair<int, int>> forward_offsets(std::size_t window,
                                                        std::size_t dilation) {
  const int r = (static_cast<int>(window) - 1) / 2;
  const int d = static_cast<int>(dilation);
  std::vector<std::pair<int, int>> out;
  for (int q = -r; q <= r; ++q)
    for (int p = -r; p <= r; ++p) {
      if (q > 0 || (q == 0 && p > 0)) out.emplace_back(p * d, q * d);
    }
  return out;
}

}  // namespace detail

/// Precomputed affinity weights for every (pixel, forward offset) pair of a
/// patch. A zero entry marks a neighbor outside the grid; real affinities
/// are strictly positive, so zero doubles as the skip sentinel.
struct AffinityCache {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::pair<int, int>> offsets;
  std::vector<std::vector<double>> weights;  // one plane per offset
};

inline AffinityCache build_affinity_cache(const ImagePatch& img,
                                          const EnergyConfig& cfg) {
  AffinityCache c;
  c.width = img.width();
  c.height = img.height();
  c.offsets = detail::forward_offsets(cfg.window, cfg.dilation);
  c.weights.assign(c.offsets.size(),
                   std::vector<double>(c.width * c.height, 0.0));
  const auto w = static_cast<std::ptrdiff_t>(c.width);
  const auto h = static_cast<std::ptrdiff_t>(c.height);
  for (std::size_t oi = 0; oi < c.offsets.size(); ++oi) {
    const auto [p, q] = c.offsets[oi];
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const std::ptrdiff_t nx = x + p, ny = y + q;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        c.weights[oi][static_cast<std::size_t>(y * w + x)] = affinity_weight(
            img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)),
            img.at(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)),
            cfg.sigma_i);
      }
  }
  return c;
}

/// Windowed smoothness term: sum over dilated-window pixel pairs of the
/// color affinity times |membership difference|. Pairs at exact equality
/// contribute a zero subgradient.
inline LossValue local_pairwise_loss(const MembershipField& field,
                                     const AffinityCache& cache) {
  LossValue out;
  out.gradient.assign(2 * field.vertex_count, 0.0);
  const auto w = static_cast<std::ptrdiff_t>(field.width);
  const auto h = static_cast<std::ptrdiff_t>(field.height);
  for (std::size_t oi = 0; oi < cache.offsets.size(); ++oi) {
    const auto [p, q] = cache.offsets[oi];
    const std::vector<double>& plane = cache.weights[oi];
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y * w + x);
        const double wt = plane[i];
        if (wt == 0.0) continue;
        const std::size_t j = static_cast<std::size_t>((y + q) * w + (x + p));
        const double diff = field.value[i] - field.value[j];
        if (diff == 0.0) continue;
        out.value += wt * std::abs(diff);
        const double s = diff > 0.0 ? wt : -wt;
        field.accumulate(i, s, out.gradient);
        field.accumulate(j, -s, out.gradient);
      }
  }
  return out;
}

inline LossValue local_pairwise_loss(const MembershipField& field,
                                     const ImagePatch& img,
                                     const EnergyConfig& cfg) {
  if (img.width() != field.width || img.height() != field.height)
    throw std::invalid_argument("field and image dimensions differ");
  return local_pairwise_loss(field, build_affinity_cache(img, cfg));
}

/// Hard-membership counterpart of the windowed term: same pair sum with the
/// binary inside/outside indicator instead of the relaxed field. Serves as
/// the small-tau reference value; no gradient.
inline double discrete_local_energy(const Polygon& poly, const ImagePatch& img,
                                    const EnergyConfig& cfg) {
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  std::vector<std::uint8_t> hard(static_cast<std::size_t>(w * h));
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x)
      hard[static_cast<std::size_t>(y * w + x)] =
          point_in_polygon(poly, {static_cast<double>(x) + 0.5,
                                  static_cast<double>(y) + 0.5})
              ? 1
              : 0;

  double energy = 0.0;
  for (const auto [p, q] : detail::forward_offsets(cfg.window, cfg.dilation))
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const std::ptrdiff_t nx = x + p, ny = y + q;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        const std::size_t i = static_cast<std::size_t>(y * w + x);
        const std::size_t j = static_cast<std::size_t>(ny * w + nx);
        if (hard[i] == hard[j]) continue;
        energy += affinity_weight(
            img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)),
            img.at(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)),
            cfg.sigma_i);
      }
  return energy;
}

// ---------------------------------------------------------------------------
// Global (region) pairwise term

/// Membership-weighted mean colors of the inside and outside regions. The
/// two masses partition the pixel count.
struct RegionMeans {
  Color u_in{};
  Color u_out{};
  double in_mass = 0.0;
  double out_mass = 0.0;
};

inline RegionMeans region_means(const MembershipField& field,
                                const ImagePatch& img) {
  if (img.width() != field.width || img.height() != field.height)
    throw std::invalid_argument("field and image dimensions differ");
  RegionMeans m;
  Color in_sum{}, out_sum{};
  for (std::size_t y = 0; y < field.height; ++y)
    for (std::size_t x = 0; x < field.width; ++x) {
      const double u = field.at(x, y);
      const Color& c = img.at(x, y);
      m.in_mass += u;
      in_sum = in_sum + u * c;
      out_sum = out_sum + (1.0 - u) * c;
    }
  const double count = static_cast<double>(field.width * field.height);
  m.out_mass = count - m.in_mass;
  // Fully saturated fields can drive a mass to zero; keep the means finite.
  m.u_in = (1.0 / std::max(m.in_mass, 1e-12)) * in_sum;
  m.u_out = (1.0 / std::max(m.out_mass, 1e-12)) * out_sum;
  return m;
}

/// Region homogeneity term evaluated against externally supplied means:
/// sum of ||I - u_in|| weighted by membership plus ||I - u_out|| weighted by
/// its complement. The gradient flows through the membership only, which is
/// exactly the detached-means derivative.
inline LossValue global_pairwise_loss_at(const MembershipField& field,
                                         const ImagePatch& img,
                                         const RegionMeans& means) {
  if (img.width() != field.width || img.height() != field.height)
    throw std::invalid_argument("field and image dimensions differ");
  LossValue out;
  out.gradient.assign(2 * field.vertex_count, 0.0);
  for (std::size_t y = 0; y < field.height; ++y)
    for (std::size_t x = 0; x < field.width; ++x) {
      const std::size_t i = field.index(x, y);
      const Color& c = img.at(x, y);
      const double rin = norm(c - means.u_in);
      const double rout = norm(c - means.u_out);
      const double u = field.value[i];
      out.value += rin * u + rout * (1.0 - u);
      field.accumulate(i, rin - rout, out.gradient);
    }
  return out;
}

inline LossValue global_pairwise_loss(const MembershipField& field,
                                      const ImagePatch& img,
                                      const EnergyConfig& cfg = {}) {
  const RegionMeans m = region_means(field, img);
  LossValue out = global_pairwise_loss_at(field, img, m);
  if (!cfg.region_full_gradient) return out;

  // Extra terms from the means' own dependence on the membership. With
  // A_in = sum_j u_j (I_j - u_in)/||I_j - u_in|| (A_out analogous), pixel k
  // additionally receives -A_in.(I_k - u_in)/M_in + A_out.(I_k - u_out)/M_out.
  Color a_in{}, a_out{};
  for (std::size_t y = 0; y < field.height; ++y)
    for (std::size_t x = 0; x < field.width; ++x) {
      const std::size_t i = field.index(x, y);
      const Color& c = img.at(x, y);
      const double rin = norm(c - m.u_in);
      const double rout = norm(c - m.u_out);
      if (rin > 0.0) a_in = a_in + (field.value[i] / rin) * (c - m.u_in);
      if (rout > 0.0)
        a_out = a_out + ((1.0 - field.value[i]) / rout) * (c - m.u_out);
    }
  const double min = std::max(m.in_mass, 1e-12);
  const double mout = std::max(m.out_mass, 1e-12);
  for (std::size_t y = 0; y < field.height; ++y)
    for (std::size_t x = 0; x < field.width; ++x) {
      const std::size_t i = field.index(x, y);
      const Color& c = img.at(x, y);
      const double extra =
          -dot(a_in, c - m.u_in) / min + dot(a_out, c - m.u_out) / mout;
      field.accumulate(i, extra, out.gradient);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted total

/// Raw (unweighted) values of the participating terms. Terms whose weight is
/// zero are skipped and report 0.
struct EnergyBreakdown {
  double total = 0.0;
  double unary = 0.0;
  double local_pairwise = 0.0;
  double global_pairwise = 0.0;
};

namespace detail {

inline void axpy(double a, const std::vector<double>& x,
                 std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace detail

/// Total energy with the gradient in grid-frame vertex coordinates. The
/// polygon lives in the window's grid frame; the box-fit term is evaluated
/// in the image frame (where the annotation box is exact) and chained back.
/// Pass a prebuilt affinity cache when evaluating the same window repeatedly.
inline LossValue total_loss_grid(const Polygon& poly_grid, const Box& gt,
                                 const ClipFrame& frame,
                                 const EnergyConfig& cfg,
                                 const AffinityCache* cache = nullptr,
                                 EnergyBreakdown* breakdown = nullptr) {
  const std::size_t n = 2 * poly_grid.size();
  EnergyBreakdown bd;
  LossValue out;
  out.gradient.assign(n, 0.0);

  const LossValue u = unary_loss(frame.to_image(poly_grid), gt, cfg);
  bd.unary = u.value;
  out.value = cfg.alpha * u.value;
  detail::axpy(cfg.alpha, frame.grad_to_grid(u.gradient), out.gradient);

  if (cfg.beta > 0.0 || cfg.gamma > 0.0) {
    const std::size_t s = frame.size();
    const MembershipField field = relaxed_field(poly_grid, s, s, cfg.tau);
    if (cfg.beta > 0.0) {
      const LossValue lp = cache
                               ? local_pairwise_loss(field, *cache)
                               : local_pairwise_loss(field, frame.patch(), cfg);
      bd.local_pairwise = lp.value;
      out.value += cfg.beta * lp.value;
      detail::axpy(cfg.beta, lp.gradient, out.gradient);
    }
    if (cfg.gamma > 0.0) {
      const LossValue gp = global_pairwise_loss(field, frame.patch(), cfg);
      bd.global_pairwise = gp.value;
      out.value += cfg.gamma * gp.value;
      detail::axpy(cfg.gamma, gp.gradient, out.gradient);
    }
  }
  bd.total = out.value;
  if (breakdown) *breakdown = bd;
  return out;
}

/// Total energy of an image-frame polygon against its annotation box:
/// alpha * box-fit + beta * local pairwise + gamma * region term, the
/// pairwise terms evaluated on the resampled window and chained back into
/// image-frame vertex coordinates.
inline LossValue total_loss(const Polygon& poly, const Box& gt,
                            const ImagePatch& img, const EnergyConfig& cfg,
                            const ClipConfig& ccfg = {},
                            EnergyBreakdown* breakdown = nullptr) {
  cfg.validate();
  const std::size_t n = 2 * poly.size();
  EnergyBreakdown bd;

  const LossValue u = unary_loss(poly, gt, cfg);
  bd.unary = u.value;
  LossValue out;
  out.value = cfg.alpha * u.value;
  out.gradient.assign(n, 0.0);
  detail::axpy(cfg.alpha, u.gradient, out.gradient);

  if (cfg.beta > 0.0 || cfg.gamma > 0.0) {
    const ClipFrame frame = make_clip_frame(gt, img, ccfg);
    const Polygon poly_grid = frame.to_grid(poly);
    const std::size_t s = frame.size();
    const MembershipField field = relaxed_field(poly_grid, s, s, cfg.tau);
    if (cfg.beta > 0.0) {
      const LossValue lp = local_pairwise_loss(field, frame.patch(), cfg);
      bd.local_pairwise = lp.value;
      out.value += cfg.beta * lp.value;
      detail::axpy(cfg.beta, frame.grad_to_image(lp.gradient), out.gradient);
    }
    if (cfg.gamma > 0.0) {
      const LossValue gp = global_pairwise_loss(field, frame.patch(), cfg);
      bd.global_pairwise = gp.value;
      out.value += cfg.gamma * gp.value;
      detail::axpy(cfg.gamma, frame.grad_to_image(gp.gradient), out.gradient);
    }
  }
  bd.total = out.value;
  if (breakdown) *breakdown = bd;
  return out;
}

}  // namespace polysnake
