#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polysnake/clip.hpp"
#include "polysnake/energy.hpp"
#include "polysnake/geometry.hpp"
#include "polysnake/image.hpp"

namespace polysnake {

/// Finite-difference validation of every analytic gradient. Each loss is
/// checked against central differences of the exact function the gradient
/// differentiates: the aspect coupling, the inside/outside signs, and the
/// region means are frozen at the base point, since all three are constants
/// per evaluation by definition. Configurations falling inside a non-smooth
/// neighborhood (bounding-box ties, nearest-segment ties, projection-case
/// switches, membership-difference sign changes) are resampled.
struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  double fd_step = 1e-4;
  double tolerance = 1e-3;  // relative error bound
  std::string corrupt_term;  // fault-injection hook for the negative control
};

struct TermReport {
  std::string term;
  std::size_t trials = 0;
  double worst_rel = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<TermReport> terms;
  bool pass = true;
};

namespace detail {

constexpr double kKinkMargin = 1e-3;   // non-smooth neighborhood radius

inline double rel_error(const std::vector<double>& analytic,
                        const std::vector<double>& fd) {
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double d = analytic[i] - fd[i];
    diff2 += d * d;
    ref2 += fd[i] * fd[i];
  }
  return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-8);
}

template <class F>
std::vector<double> central_fd(std::vector<double> x, double h, F&& f) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double hi = f(x);
    x[i] = x0 - h;
    const double lo = f(x);
    x[i] = x0;
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

inline Polygon unflatten(const std::vector<double>& x) {
  std::vector<Vec2> pts(x.size() / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = {x[2 * i], x[2 * i + 1]};
  return Polygon(std::move(pts));
}

inline std::vector<double> flatten(const Polygon& p) {
  std::vector<double> x(2 * p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    x[2 * i] = p[i].x;
    x[2 * i + 1] = p[i].y;
  }
  return x;
}

/// Star-shaped polygon around `center`: jittered angles, random radii.
inline Polygon random_star(std::mt19937_64& rng, Vec2 center, double rmin,
                           double rmax, std::size_t k) {
  std::uniform_real_distribution<double> radius(rmin, rmax);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::vector<Vec2> pts(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double theta = 2.0 * std::numbers::pi *
                         (static_cast<double>(j) + jitter(rng)) /
                         static_cast<double>(k);
    const double r = radius(rng);
    pts[j] = {center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
  }
  return Polygon(std::move(pts));
}

inline ImagePatch random_image(std::mt19937_64& rng, std::size_t w,
                               std::size_t h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImagePatch img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) img.at(x, y) = {u(rng), u(rng), u(rng)};
  return img;
}

// Margin to the second-nearest distinct distance branch. Adjacent segments
// whose closest point is their shared vertex form a single smooth branch
// (the point distance to that vertex), not a tie; only genuinely different
// attaining points - the medial axis - make the minimum non-smooth.
inline double tie_margin(const Polygon& poly, Vec2 p) {
  const std::size_t k = poly.size();
  std::vector<double> dist(k);
  std::vector<Vec2> attain(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % k];
    const auto pr = probe_segment(a, b, p);
    const double u = std::clamp(pr.u, 0.0, 1.0);
    dist[i] = std::sqrt(pr.dist2);
    attain[i] = a + u * (b - a);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (dist[i] < dist[best]) best = i;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    if (i == best) continue;
    const bool adjacent = (i + 1) % k == best || (best + 1) % k == i;
    if (adjacent && norm(attain[i] - attain[best]) < 1e-9) continue;
    margin = std::min(margin, dist[i] - dist[best]);
  }
  return margin;
}

// A pixel is FD-safe when it is either inert (saturated sigmoid, so its
// contribution cannot move the check) or no finite-difference step of size
// `step` can switch the piecewise branch its distance is evaluated on.
inline bool pixel_fd_safe(const Polygon& poly, const MembershipField& field,
                          std::size_t x, std::size_t y, double step) {
  const std::size_t i = field.index(x, y);
  const double u = field.value[i];
  if (u * (1.0 - u) < 1e-9) return true;
  const Vec2 p{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
  const SegmentDistanceResult d = nearest_segment_distance(poly, p);
  // The unsigned distance kinks where the contour sweeps across the pixel.
  if (d.distance < kKinkMargin) return false;
  if (std::abs(d.u) < kKinkMargin || std::abs(d.u - 1.0) < kKinkMargin)
    return false;
  // Branch distances move by at most `step` per probed coordinate, so their
  // order is stable whenever the runner-up trails by a few steps.
  return tie_margin(poly, p) >= 4.0 * step;
}

inline bool field_fd_safe(const Polygon& poly, const MembershipField& field,
                          double step) {
  for (std::size_t y = 0; y < field.height; ++y)
    for (std::size_t x = 0; x < field.width; ++x)
      if (!pixel_fd_safe(poly, field, x, y, step)) return false;
  return true;
}

// |u_i - u_j| kinks at equality. A probe of one coordinate changes the
// difference by at most step * (u_i' + u_j') / tau, so the sign is stable
// outside that window; saturated pairs shrink the window to nothing.
inline bool pairs_fd_safe(const MembershipField& field,
                          const EnergyConfig& cfg, double step) {
  const auto w = static_cast<std::ptrdiff_t>(field.width);
  const auto h = static_cast<std::ptrdiff_t>(field.height);
  for (const auto [p, q] : forward_offsets(cfg.window, cfg.dilation))
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const std::ptrdiff_t nx = x + p, ny = y + q;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        const std::size_t i = static_cast<std::size_t>(y * w + x);
        const std::size_t j = static_cast<std::size_t>(ny * w + nx);
        const double ui = field.value[i], uj = field.value[j];
        const double slope =
            (ui * (1.0 - ui) + uj * (1.0 - uj)) / cfg.tau;
        if (std::abs(ui - uj) < 4.0 * step * slope) return false;
      }
  return true;
}

// The box-overlap score is non-smooth where the min/max selections switch;
// require every selector to be decided by a clear margin, and each bounding
// box side to be attained by a single vertex.
inline bool unary_fd_safe(const Polygon& poly, const Box& gt) {
  const PolygonBounds b = bbox_of(poly);
  double m2x1 = 1e9, m2y1 = 1e9, m2x2 = 1e9, m2y2 = 1e9;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i != b.min_x_vertex) m2x1 = std::min(m2x1, poly[i].x - b.box.x1);
    if (i != b.min_y_vertex) m2y1 = std::min(m2y1, poly[i].y - b.box.y1);
    if (i != b.max_x_vertex) m2x2 = std::min(m2x2, b.box.x2 - poly[i].x);
    if (i != b.max_y_vertex) m2y2 = std::min(m2y2, b.box.y2 - poly[i].y);
  }
  if (std::min({m2x1, m2y1, m2x2, m2y2}) < kKinkMargin) return false;

  const Box& a = b.box;
  if (std::abs(a.x1 - gt.x1) < kKinkMargin) return false;
  if (std::abs(a.y1 - gt.y1) < kKinkMargin) return false;
  if (std::abs(a.x2 - gt.x2) < kKinkMargin) return false;
  if (std::abs(a.y2 - gt.y2) < kKinkMargin) return false;
  const double iw = std::min(a.x2, gt.x2) - std::max(a.x1, gt.x1);
  const double ih = std::min(a.y2, gt.y2) - std::max(a.y1, gt.y1);
  return iw > kKinkMargin && ih > kKinkMargin;
}

struct TrialRng {
  std::mt19937_64 rng;
  std::size_t attempts = 0;
  // Resampling budget so a bad generator surfaces as an error, not a hang.
  void spent() {
    if (++attempts > 200000)
      throw std::runtime_error("gradcheck: fixture resampling budget exhausted");
  }
};

}  // namespace detail

/// Compare one term's analytic gradient against a freshly generated batch of
/// safe random configurations. Returns the worst relative error seen.
inline GradCheckReport run_gradcheck(const GradCheckOptions& opt) {
  GradCheckReport report;

  const auto corrupt = [&opt](const std::string& term, std::vector<double>& g) {
    if (term != opt.corrupt_term || g.empty()) return;
    double n2 = 0.0;
    for (const double v : g) n2 += v * v;
    g[0] = 2.0 * g[0] + 0.1 * (std::sqrt(n2) + 1.0);
  };

  const auto run_term = [&](const std::string& term, auto&& one_trial) {
    detail::TrialRng t{std::mt19937_64(opt.seed ^ std::hash<std::string>{}(term)), 0};
    TermReport tr;
    tr.term = term;
    while (tr.trials < opt.trials) {
      auto maybe = one_trial(t);  // optional<pair<analytic, fd>>
      if (!maybe) continue;
      auto& [analytic, fd] = *maybe;
      corrupt(term, analytic);
      tr.worst_rel = std::max(tr.worst_rel, detail::rel_error(analytic, fd));
      ++tr.trials;
    }
    tr.pass = tr.worst_rel < opt.tolerance;
    report.terms.push_back(tr);
    report.pass = report.pass && tr.pass;
  };

  using Checked = std::optional<std::pair<std::vector<double>, std::vector<double>>>;
  constexpr std::size_t kVerts = 8;

  // Box-fit term: FD of the score with the aspect coupling pinned at base.
  run_term("unary", [&](detail::TrialRng& t) -> Checked {
    t.spent();
    std::uniform_real_distribution<double> c(8.0, 12.0), r(2.0, 6.0);
    const Polygon poly =
        detail::random_star(t.rng, {c(t.rng), c(t.rng)}, 2.0, 6.0, kVerts);
    const Vec2 ctr{c(t.rng), c(t.rng)};
    const Box gt{ctr.x - r(t.rng), ctr.y - r(t.rng), ctr.x + r(t.rng),
                 ctr.y + r(t.rng)};
    if (!detail::unary_fd_safe(poly, gt)) return std::nullopt;

    EnergyConfig cfg;
    const double frozen_alpha = ciou(bbox_of(poly).box, gt).alpha_c;
    std::vector<double> analytic = unary_loss(poly, gt, cfg).gradient;
    std::vector<double> fd = detail::central_fd(
        detail::flatten(poly), opt.fd_step, [&](const std::vector<double>& x) {
          return 1.0 - ciou_value(bbox_of(detail::unflatten(x)).box, gt,
                                  frozen_alpha);
        });
    return std::make_pair(std::move(analytic), std::move(fd));
  });

  // Relaxed membership at a single pixel: FD with the inside sign frozen.
  run_term("field", [&](detail::TrialRng& t) -> Checked {
    t.spent();
    std::uniform_real_distribution<double> c(4.0, 8.0), tau_d(0.1, 0.4);
    std::uniform_int_distribution<std::size_t> pix(0, 11);
    const Polygon poly =
        detail::random_star(t.rng, {c(t.rng), c(t.rng)}, 1.5, 3.5, kVerts);
    const double tau = tau_d(t.rng);
    const Vec2 p{static_cast<double>(pix(t.rng)) + 0.5,
                 static_cast<double>(pix(t.rng)) + 0.5};

    const SegmentDistanceResult d = nearest_segment_distance(poly, p);
    if (d.distance < detail::kKinkMargin || d.distance / tau > 8.0)
      return std::nullopt;
    if (std::abs(d.u) < detail::kKinkMargin ||
        std::abs(d.u - 1.0) < detail::kKinkMargin)
      return std::nullopt;
    if (detail::tie_margin(poly, p) < detail::kKinkMargin) return std::nullopt;

    const double sign = point_in_polygon(poly, p) ? 1.0 : -1.0;
    const double u = sigmoid(sign * d.distance / tau);
    const double coeff = u * (1.0 - u) * sign / tau;
    std::vector<double> analytic(2 * kVerts, 0.0);
    const std::size_t a = d.segment_index, b = (a + 1) % kVerts;
    analytic[2 * a] = coeff * d.d_first.x;
    analytic[2 * a + 1] = coeff * d.d_first.y;
    analytic[2 * b] = coeff * d.d_second.x;
    analytic[2 * b + 1] = coeff * d.d_second.y;

    std::vector<double> fd = detail::central_fd(
        detail::flatten(poly), opt.fd_step, [&](const std::vector<double>& x) {
          const auto dr = nearest_segment_distance(detail::unflatten(x), p);
          return sigmoid(sign * dr.distance / tau);
        });
    return std::make_pair(std::move(analytic), std::move(fd));
  });

  // Windowed pairwise term over a small patch, hard signs frozen.
  run_term("local_pairwise", [&](detail::TrialRng& t) -> Checked {
    t.spent();
    constexpr std::size_t kGrid = 12;
    std::uniform_real_distribution<double> c(4.0, 8.0), tau_d(0.15, 0.4);
    const Polygon poly =
        detail::random_star(t.rng, {c(t.rng), c(t.rng)}, 1.5, 3.5, kVerts);
    const ImagePatch img = detail::random_image(t.rng, kGrid, kGrid);
    EnergyConfig cfg;
    cfg.tau = tau_d(t.rng);

    const MembershipField field = relaxed_field(poly, kGrid, kGrid, cfg.tau);
    if (!detail::field_fd_safe(poly, field, opt.fd_step)) return std::nullopt;
    if (!detail::pairs_fd_safe(field, cfg, opt.fd_step)) return std::nullopt;

    std::vector<double> analytic = local_pairwise_loss(field, img, cfg).gradient;
    const std::vector<std::uint8_t> hard = field.hard;
    std::vector<double> fd = detail::central_fd(
        detail::flatten(poly), opt.fd_step, [&](const std::vector<double>& x) {
          const MembershipField f =
              relaxed_field(detail::unflatten(x), kGrid, kGrid, cfg.tau, &hard);
          return local_pairwise_loss(f, img, cfg).value;
        });
    return std::make_pair(std::move(analytic), std::move(fd));
  });

  // Region term with means frozen at the base point (the detached form).
  run_term("global_pairwise", [&](detail::TrialRng& t) -> Checked {
    t.spent();
    constexpr std::size_t kGrid = 12;
    std::uniform_real_distribution<double> c(4.0, 8.0), tau_d(0.15, 0.4);
    const Polygon poly =
        detail::random_star(t.rng, {c(t.rng), c(t.rng)}, 1.5, 3.5, kVerts);
    const ImagePatch img = detail::random_image(t.rng, kGrid, kGrid);
    const double tau = tau_d(t.rng);

    const MembershipField field = relaxed_field(poly, kGrid, kGrid, tau);
    if (!detail::field_fd_safe(poly, field, opt.fd_step)) return std::nullopt;

    const RegionMeans means = region_means(field, img);
    std::vector<double> analytic =
        global_pairwise_loss_at(field, img, means).gradient;
    const std::vector<std::uint8_t> hard = field.hard;
    std::vector<double> fd = detail::central_fd(
        detail::flatten(poly), opt.fd_step, [&](const std::vector<double>& x) {
          const MembershipField f =
              relaxed_field(detail::unflatten(x), kGrid, kGrid, tau, &hard);
          return global_pairwise_loss_at(f, img, means).value;
        });
    return std::make_pair(std::move(analytic), std::move(fd));
  });

  // Full weighted objective through the clip frame, image-frame coordinates.
  run_term("total", [&](detail::TrialRng& t) -> Checked {
    t.spent();
    const ImagePatch img = detail::random_image(t.rng, 32, 32);
    std::uniform_real_distribution<double> pos(6.0, 12.0), ext(5.0, 10.0),
        tau_d(0.15, 0.3);
    const double bx = pos(t.rng), by = pos(t.rng);
    const Box gt{bx, by, bx + 2.0 * ext(t.rng), by + 2.0 * ext(t.rng)};
    const Vec2 ctr = gt.center();
    const double scale = 0.25 * std::min(gt.width(), gt.height());
    const Polygon poly =
        detail::random_star(t.rng, ctr, 1.2 * scale, 2.2 * scale, kVerts);

    EnergyConfig cfg;
    cfg.tau = tau_d(t.rng);
    const ClipConfig ccfg{16, 2};
    if (!detail::unary_fd_safe(poly, gt)) return std::nullopt;

    const ClipFrame frame = make_clip_frame(gt, img, ccfg);
    const Polygon pg = frame.to_grid(poly);
    const std::size_t s = frame.size();
    const MembershipField field = relaxed_field(pg, s, s, cfg.tau);
    if (!detail::field_fd_safe(pg, field, opt.fd_step)) return std::nullopt;
    if (!detail::pairs_fd_safe(field, cfg, opt.fd_step)) return std::nullopt;

    const double frozen_alpha = ciou(bbox_of(poly).box, gt).alpha_c;
    const RegionMeans means = region_means(field, frame.patch());
    const std::vector<std::uint8_t> hard = field.hard;

    std::vector<double> analytic = total_loss(poly, gt, img, cfg, ccfg).gradient;
    std::vector<double> fd = detail::central_fd(
        detail::flatten(poly), opt.fd_step, [&](const std::vector<double>& x) {
          const Polygon q = detail::unflatten(x);
          double v = cfg.alpha *
                     (1.0 - ciou_value(bbox_of(q).box, gt, frozen_alpha));
          const MembershipField f =
              relaxed_field(frame.to_grid(q), s, s, cfg.tau, &hard);
          v += cfg.beta * local_pairwise_loss(f, frame.patch(), cfg).value;
          v += cfg.gamma *
               global_pairwise_loss_at(f, frame.patch(), means).value;
          return v;
        });
    return std::make_pair(std::move(analytic), std::move(fd));
  });

  return report;
}

}  // namespace polysnake
