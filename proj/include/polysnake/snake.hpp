#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polysnake/clip.hpp"
#include "polysnake/energy.hpp"
#include "polysnake/geometry.hpp"
#include "polysnake/image.hpp"

namespace polysnake {

enum class InitShape { ellipse, square };
enum class Termination { converged, max_iters, line_search_failed };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

struct SnakeConfig {
  std::size_t vertex_count = 64;
  std::size_t max_iters = 1000;
  double step = 0.5;  // first-trial cap on the largest coordinate move, grid px
  double backtrack_factor = 0.5;
  std::size_t max_backtracks = 20;
  double armijo_c = 1e-4;
  std::size_t resample_every = 50;  // redistribute vertices; 0 disables
  double tol = 1e-3;                // displacement threshold, grid px
  std::size_t tol_window = 10;      // consecutive sub-tol iterations to stop
  std::uint64_t seed = 0;           // recorded in outputs; descent itself is
                                    // deterministic and draws no randomness

  void validate() const {
    if (vertex_count < 3) throw std::invalid_argument("vertex_count must be >= 3");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (step < 0.0 || !std::isfinite(step))
      throw std::invalid_argument("step must be >= 0");
    if (!(backtrack_factor > 0.0) || backtrack_factor >= 1.0)
      throw std::invalid_argument("backtrack_factor must be in (0,1)");
    if (armijo_c < 0.0) throw std::invalid_argument("armijo_c must be >= 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (tol_window < 1) throw std::invalid_argument("tol_window must be >= 1");
  }
};

/// Full record of one evolution: loss curves (entry 0 is the initialization,
/// then one entry per accepted iteration), where resampling happened, and
/// the final contour in image-frame coordinates.
struct SnakeTrace {
  std::vector<double> total;
  std::vector<double> unary;
  std::vector<double> local_pairwise;
  std::vector<double> global_pairwise;
  std::vector<std::size_t> resample_iterations;
  std::size_t iterations = 0;
  Termination termination = Termination::max_iters;
  Polygon polygon;
};

namespace detail {

inline void push_breakdown(SnakeTrace& t, const EnergyBreakdown& bd) {
  t.total.push_back(bd.total);
  t.unary.push_back(bd.unary);
  t.local_pairwise.push_back(bd.local_pairwise);
  t.global_pairwise.push_back(bd.global_pairwise);
}

}  // namespace detail

/// Fit a polygon to the object in `gt` by steepest descent on the total
/// energy with Armijo backtracking. Vertices are updated in the window's
/// grid frame so the step size is scale-invariant across box sizes; the
/// first trial step moves the largest gradient coordinate by `step` grid
/// pixels. Convergence = tol_window consecutive iterations whose largest
/// coordinate move stays under tol.
inline SnakeTrace evolve(const ImagePatch& img, const Box& gt,
                         const EnergyConfig& ecfg, const ClipConfig& ccfg,
                         const SnakeConfig& scfg,
                         InitShape init = InitShape::ellipse) {
  ecfg.validate();
  scfg.validate();
  if (!gt.valid() || gt.width() <= 0.0 || gt.height() <= 0.0)
    throw std::invalid_argument("degenerate_box");
  if (gt.x2 <= 0.0 || gt.y2 <= 0.0 ||
      gt.x1 >= static_cast<double>(img.width()) ||
      gt.y1 >= static_cast<double>(img.height()))
    throw std::invalid_argument("box_out_of_image");

  const ClipFrame frame = make_clip_frame(gt, img, ccfg);
  std::optional<AffinityCache> cache;
  if (ecfg.beta > 0.0) cache.emplace(build_affinity_cache(frame.patch(), ecfg));
  const AffinityCache* cache_ptr = cache ? &*cache : nullptr;

  Polygon poly = frame.to_grid(init == InitShape::square
                                   ? init_square(gt, scfg.vertex_count)
                                   : init_ellipse(gt, scfg.vertex_count));

  SnakeTrace trace{{}, {}, {}, {}, {}, 0, Termination::max_iters, poly};
  EnergyBreakdown bd;
  LossValue cur = total_loss_grid(poly, gt, frame, ecfg, cache_ptr, &bd);
  detail::push_breakdown(trace, bd);

  const std::size_t k = poly.size();
  std::size_t quiet_streak = 0;
  for (std::size_t it = 1; it <= scfg.max_iters; ++it) {
    if (scfg.resample_every != 0 && it % scfg.resample_every == 0) {
      poly = resample_uniform(poly, scfg.vertex_count);
      cur = total_loss_grid(poly, gt, frame, ecfg, cache_ptr, &bd);
      trace.resample_iterations.push_back(it);
      quiet_streak = 0;
    }

    double gmax = 0.0;
    double gnorm2 = 0.0;
    for (const double g : cur.gradient) {
      gmax = std::max(gmax, std::abs(g));
      gnorm2 += g * g;
    }

    double moved = 0.0;
    if (gmax > 0.0) {
      double t = scfg.step / gmax;
      bool accepted = false;
      for (std::size_t bt = 0; bt <= scfg.max_backtracks; ++bt) {
        std::vector<Vec2> cand(k);
        for (std::size_t j = 0; j < k; ++j)
          cand[j] = {poly[j].x - t * cur.gradient[2 * j],
                     poly[j].y - t * cur.gradient[2 * j + 1]};
        Polygon trial(std::move(cand));
        EnergyBreakdown trial_bd;
        LossValue trial_eval =
            total_loss_grid(trial, gt, frame, ecfg, cache_ptr, &trial_bd);
        if (trial_eval.value <= cur.value - scfg.armijo_c * t * gnorm2) {
          moved = t * gmax;
          poly = std::move(trial);
          cur = std::move(trial_eval);
          bd = trial_bd;
          accepted = true;
          break;
        }
        t *= scfg.backtrack_factor;
      }
      if (!accepted) {
        trace.termination = Termination::line_search_failed;
        trace.polygon = frame.to_image(poly);
        return trace;
      }
    }
    // gmax == 0: stationary point, nothing moves; counts as a quiet iteration.

    detail::push_breakdown(trace, bd);
    trace.iterations = it;
    quiet_streak = moved < scfg.tol ? quiet_streak + 1 : 0;
    if (quiet_streak >= scfg.tol_window) {
      trace.termination = Termination::converged;
      break;
    }
  }

  trace.polygon = frame.to_image(poly);
  return trace;
}

/// One batch item: either a finished trace or an error string
/// ("degenerate_box", "box_out_of_image", or an exception message).
struct EvolveOutcome {
  std::optional<SnakeTrace> trace;
  std::string error;
};

/// Evolve one polygon per box against a shared image. Items are independent;
/// a failing box is reported in place without aborting the rest, and results
/// match sequential evolve calls exactly.
inline std::vector<EvolveOutcome> evolve_batch(
    const ImagePatch& img, const std::vector<Box>& boxes,
    const EnergyConfig& ecfg, const ClipConfig& ccfg, const SnakeConfig& scfg,
    InitShape init = InitShape::ellipse) {
  std::vector<EvolveOutcome> out;
  out.reserve(boxes.size());
  for (const Box& b : boxes) {
    try {
      out.push_back({evolve(img, b, ecfg, ccfg, scfg, init), {}});
    } catch (const std::exception& e) {
      out.push_back({std::nullopt, e.what()});
    }
  }
  return out;
}

}  // namespace polysnake
