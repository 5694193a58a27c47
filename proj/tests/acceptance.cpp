// End-to-end acceptance checks for the polygon boundary fitter. Each check
// prints exactly one pass/fail line with its measured numbers and elapsed
// time; the process exits nonzero if any check fails. Intended to run under
// ctest but self-contained enough to run by hand.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polysnake/polysnake.hpp"

using namespace polysnake;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

double box_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 1.0;
}

double polygon_area(const Polygon& poly) {
  std::vector<Vec2> pts(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) pts[i] = poly[i];
  return std::abs(oracles::shoelace(pts));
}

bool non_increasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[i - 1]) return false;
  return true;
}

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

// Shared state: later checks reuse the fits performed by earlier ones.
struct Shared {
  std::vector<SnakeTrace> box_only_traces;        // check 4
  std::vector<fixtures::SyntheticScene> suite;    // checks 5-8
  std::vector<SnakeTrace> suite_full;             // check 5, default descent
  std::vector<SnakeTrace> suite_box_only;         // check 5, box term alone
};

// --- 1. Analytic gradients agree with central finite differences ------------

Outcome check_gradients() {
  GradCheckOptions opt;
  opt.seed = 2026;
  opt.trials = 100;          // per term
  opt.fd_step = 1e-4;        // grid px
  opt.tolerance = 1e-3;      // relative error bound
  const GradCheckReport report = run_gradcheck(opt);
  double worst = 0.0;
  for (const TermReport& t : report.terms) worst = std::max(worst, t.worst_rel);
  Outcome out;
  out.pass = report.pass && report.terms.size() == 5;
  std::ostringstream ss;
  ss << report.terms.size() << " terms x " << opt.trials
     << " configs, worst rel err " << format("%.2e", worst);
  out.detail = ss.str();
  return out;
}

// --- 2. Geometry kernels agree with brute-force oracles ---------------------

Outcome check_geometry_oracles() {
  std::mt19937_64 rng(2202);
  std::uniform_real_distribution<double> span(-3.5, 3.5);
  std::uniform_int_distribution<int> arms(3, 12);

  std::size_t pip_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec2> pts;
    Vec2 q{};
    while (true) {
      pts = oracles::random_star_vertices(rng, {0, 0}, 1.0, 3.0, arms(rng));
      q = {span(rng), span(rng)};
      // Points that graze the contour make the two conventions ambiguous.
      if (nearest_segment_distance(Polygon{std::vector<Vec2>(pts)}, q)
              .distance > 1e-9)
        break;
    }
    const bool mine = point_in_polygon(Polygon{std::vector<Vec2>(pts)}, q);
    if (mine != oracles::pip_bruteforce(pts, q)) ++pip_mismatches;
  }

  double worst_dist_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = oracles::random_star_vertices(rng, {0, 0}, 1.0, 3.0,
                                                   arms(rng));
    const Vec2 q{span(rng), span(rng)};
    const double mine =
        nearest_segment_distance(Polygon{std::vector<Vec2>(pts)}, q).distance;
    const double sampled = oracles::contour_distance_sampled(pts, q, 10000);
    worst_dist_err = std::max(worst_dist_err, std::abs(mine - sampled));
  }

  Outcome out;
  out.pass = pip_mismatches == 0 && worst_dist_err < 1e-3;
  std::ostringstream ss;
  ss << pip_mismatches << "/1000 membership mismatches, worst distance err "
     << format("%.2e", worst_dist_err);
  out.detail = ss.str();
  return out;
}

// --- 3. Sharp memberships reproduce the discrete boundary energy ------------

Outcome check_relaxation_limit() {
  std::mt19937_64 rng(2203);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t side = 12 + 2 * (trial % 3);
    const double c = 0.5 * static_cast<double>(side);
    // Keep every pixel center clear of the contour so memberships saturate;
    // a center sitting on the boundary would make the discrete count itself
    // ambiguous.
    std::vector<Vec2> pts;
    while (true) {
      pts = oracles::random_star_vertices(rng, {c, c}, 0.3 * c, 0.85 * c, 8);
      const Polygon probe{std::vector<Vec2>(pts)};
      double closest = 1e18;
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x)
          closest = std::min(
              closest,
              nearest_segment_distance(probe, {x + 0.5, y + 0.5}).distance);
      if (closest > 0.05) break;
    }
    const Polygon poly{std::move(pts)};

    ImagePatch img(side, side);
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x)
        img.at(x, y) = {unit(rng), unit(rng), unit(rng)};

    EnergyConfig cfg;
    cfg.window = (trial % 2) ? 5 : 3;
    cfg.dilation = (trial % 4 < 2) ? 2 : 1;
    const double discrete = discrete_local_energy(poly, img, cfg);
    const MembershipField field =
        relaxed_field(poly, side, side, /*tau=*/1e-3);
    const double relaxed = local_pairwise_loss(field, img, cfg).value;
    worst_rel = std::max(worst_rel,
                         std::abs(relaxed - discrete) / std::max(1.0, discrete));
  }
  Outcome out;
  out.pass = worst_rel < 1e-3;
  out.detail = "50 patches, worst |relaxed - discrete| rel " +
               format("%.2e", worst_rel);
  return out;
}

// --- 4. Box term alone drives the bounding box onto the target --------------

Outcome check_box_only_convergence(Shared& shared) {
  std::mt19937_64 rng(2204);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> log_aspect(std::log(0.25),
                                                    std::log(4.0));
  ImagePatch img(128, 128);
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 0; x < 128; ++x)
      img.at(x, y) = {unit(rng), unit(rng), unit(rng)};

  EnergyConfig ecfg;
  ecfg.beta = 0.0;
  ecfg.gamma = 0.0;
  ClipConfig ccfg;
  SnakeConfig scfg;
  scfg.max_iters = 1000;
  scfg.resample_every = 0;  // the monotonicity check reuses these traces

  double worst = 1.0;
  std::size_t worst_iters = 0;
  for (int trial = 0; trial < 20; ++trial) {
    double w = 0.0, h = 0.0;
    while (true) {
      const double aspect = std::exp(log_aspect(rng));
      w = 10.0 + 70.0 * unit(rng);
      h = w * aspect;
      if (h >= 8.0 && h <= 100.0) break;
    }
    const double x1 = 2.0 + (128.0 - w - 4.0) * unit(rng);
    const double y1 = 2.0 + (128.0 - h - 4.0) * unit(rng);
    const Box gt{x1, y1, x1 + w, y1 + h};
    // With K divisible by 4 the initial contour already touches all four box
    // sides, so half the runs use K=10, which starts visibly short of the
    // vertical extremes and must actually descend.
    scfg.vertex_count = (trial % 2) ? 10 : 64;
    const SnakeTrace t = evolve(img, gt, ecfg, ccfg, scfg);
    worst = std::min(worst, box_iou(bbox_of(t.polygon).box, gt));
    worst_iters = std::max(worst_iters, t.iterations);
    shared.box_only_traces.push_back(t);
  }
  Outcome out;
  out.pass = worst >= 0.99;
  std::ostringstream ss;
  ss << "20 boxes, worst bbox IoU " << format("%.4f", worst) << ", max "
     << worst_iters << " iters";
  out.detail = ss.str();
  return out;
}

// --- 5. The pairwise terms lift boundary accuracy well past box fitting -----

Outcome check_boundary_fitting(Shared& shared) {
  shared.suite = fixtures::synthetic_suite();
  EnergyConfig full;       // library defaults
  EnergyConfig box_only;
  box_only.beta = 0.0;
  box_only.gamma = 0.0;
  const ClipConfig ccfg;
  const SnakeConfig scfg;  // defaults, including periodic resampling

  double full_sum = 0.0, box_sum = 0.0;
  for (const fixtures::SyntheticScene& scene : shared.suite) {
    const SnakeTrace tf = evolve(scene.image, scene.box, full, ccfg, scfg);
    const SnakeTrace tb = evolve(scene.image, scene.box, box_only, ccfg, scfg);
    const Mask mf = rasterize_polygon(tf.polygon, scene.mask.width(),
                                      scene.mask.height());
    const Mask mb = rasterize_polygon(tb.polygon, scene.mask.width(),
                                      scene.mask.height());
    full_sum += mask_iou(mf, scene.mask);
    box_sum += mask_iou(mb, scene.mask);
    shared.suite_full.push_back(tf);
    shared.suite_box_only.push_back(tb);
  }
  const double n = static_cast<double>(shared.suite.size());
  const double mean_full = full_sum / n;
  const double mean_box = box_sum / n;
  Outcome out;
  out.pass = mean_full >= 0.90 && mean_full >= mean_box + 0.15;
  out.detail = format("mean mask IoU %.4f vs box-only %.4f (gap %.4f)",
                      mean_full, mean_box, mean_full - mean_box);
  return out;
}

// --- 6. The full loss admits no collapsed or runaway contour ----------------

Outcome check_degenerate_exclusion(const Shared& shared) {
  const ClipConfig ccfg;
  bool pass = true;
  std::ostringstream why;

  // The disk fit must keep a sensible fraction of its box.
  const double disk_ratio = polygon_area(shared.suite_full[0].polygon) /
                            shared.suite[0].box.area();
  if (disk_ratio < 0.5 || disk_ratio > 1.0) {
    pass = false;
    why << "disk area ratio " << format("%.3f", disk_ratio) << " outside [0.5, 1]; ";
  }

  // No run may collapse to a point or escape its evaluation window.
  const std::vector<const std::vector<SnakeTrace>*> groups = {
      &shared.suite_full, &shared.suite_box_only};
  for (const auto* group : groups)
    for (std::size_t i = 0; i < group->size(); ++i) {
      const SnakeTrace& t = (*group)[i];
      const fixtures::SyntheticScene& scene = shared.suite[i];
      if (polygon_area(t.polygon) < 1.0) {
        pass = false;
        why << scene.name << " collapsed; ";
      }
      const ClipFrame frame = make_clip_frame(scene.box, scene.image, ccfg);
      const double S = static_cast<double>(ccfg.size());
      const Vec2 lo = frame.to_image({0.0, 0.0});
      const Vec2 hi = frame.to_image({S, S});
      for (std::size_t j = 0; j < t.polygon.size(); ++j) {
        const Vec2 v = t.polygon[j];
        if (v.x < lo.x - 1e-6 || v.x > hi.x + 1e-6 || v.y < lo.y - 1e-6 ||
            v.y > hi.y + 1e-6) {
          pass = false;
          why << scene.name << " left the evaluation window; ";
          break;
        }
      }
    }

  Outcome out;
  out.pass = pass;
  out.detail = pass ? "disk area ratio " + format("%.3f", disk_ratio) +
                          ", all runs bounded"
                    : why.str();
  return out;
}

// --- 7. With resampling off, accepted steps never raise the loss ------------

Outcome check_monotone_descent(const Shared& shared) {
  std::size_t checked = 0, violations = 0;
  for (const SnakeTrace& t : shared.box_only_traces) {
    ++checked;
    if (!non_increasing(t.total)) ++violations;
  }
  // Re-run the scene suite without resampling: periodic resampling may move
  // the loss upward by design, so the monotone guarantee is stated for the
  // plain backtracking configuration.
  EnergyConfig full;
  EnergyConfig box_only;
  box_only.beta = 0.0;
  box_only.gamma = 0.0;
  const ClipConfig ccfg;
  SnakeConfig scfg;
  scfg.resample_every = 0;
  for (const fixtures::SyntheticScene& scene : shared.suite)
    for (const EnergyConfig* ecfg : {&full, &box_only}) {
      const SnakeTrace t = evolve(scene.image, scene.box, *ecfg, ccfg, scfg);
      ++checked;
      if (!non_increasing(t.total)) ++violations;
    }
  Outcome out;
  out.pass = violations == 0;
  std::ostringstream ss;
  ss << checked << " traces checked, " << violations << " violations";
  out.detail = ss.str();
  return out;
}

// --- 8. Same inputs and seed give byte-identical outputs --------------------

Outcome check_determinism(const Shared& shared) {
  bool pass = true;
  for (std::size_t i = 0; i < shared.suite.size(); ++i) {
    const fixtures::SyntheticScene& scene = shared.suite[i];
    const std::vector<Annotation> anns = {
        {static_cast<std::int64_t>(i), scene.box}};
    const FitConfig cfg;  // defaults throughout, seed included
    const std::string first =
        write_result_file(run_fit(scene.image, anns, cfg));
    const std::string second =
        write_result_file(run_fit(scene.image, anns, cfg));
    if (first != second) pass = false;
  }
  Outcome out;
  out.pass = pass;
  out.detail = pass ? "3 scenes refit, outputs byte-identical"
                    : "repeated runs diverged";
  return out;
}

struct Check {
  const char* name;
  double budget_seconds;  // 0 = no stated budget
};

}  // namespace

int main() {
  Shared shared;
  const std::vector<Check> checks = {
      {"gradient fidelity", 60.0},
      {"geometry oracles", 30.0},
      {"relaxation limit", 0.0},
      {"box-only convergence", 30.0},
      {"boundary fitting suite", 120.0},
      {"degenerate-solution exclusion", 0.0},
      {"monotone descent", 0.0},
      {"determinism", 0.0},
  };

  bool all_pass = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = Clock::now();
    Outcome out;
    switch (i) {
      case 0: out = check_gradients(); break;
      case 1: out = check_geometry_oracles(); break;
      case 2: out = check_relaxation_limit(); break;
      case 3: out = check_box_only_convergence(shared); break;
      case 4: out = check_boundary_fitting(shared); break;
      case 5: out = check_degenerate_exclusion(shared); break;
      case 6: out = check_monotone_descent(shared); break;
      case 7: out = check_determinism(shared); break;
    }
    const double elapsed = seconds_since(start);
    if (checks[i].budget_seconds > 0.0 && elapsed > checks[i].budget_seconds) {
      out.pass = false;
      out.detail += format(" [over %.0f s budget]", checks[i].budget_seconds);
    }
    all_pass = all_pass && out.pass;
    std::printf("[%zu/8] %s  %-30s %s  (%.2f s)\n", i + 1,
                out.pass ? "pass" : "FAIL", checks[i].name, out.detail.c_str(),
                elapsed);
    std::fflush(stdout);
  }
  std::printf("%s\n", all_pass ? "acceptance: all 8 checks passed"
                               : "acceptance: FAILURES above");
  return all_pass ? 0 : 1;
}
