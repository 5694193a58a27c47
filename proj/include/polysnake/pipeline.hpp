#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "polysnake/io.hpp"
#include "polysnake/raster.hpp"
#include "polysnake/snake.hpp"

namespace polysnake {

inline Polygon polygon_from_flat(const std::vector<double>& flat) {
  if (flat.size() < 6 || flat.size() % 2 != 0)
    throw std::invalid_argument("flat polygon needs an even length >= 6");
  std::vector<Vec2> pts(flat.size() / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = {flat[2 * i], flat[2 * i + 1]};
  return Polygon(std::move(pts));
}

inline std::vector<double> polygon_to_flat(const Polygon& poly) {
  std::vector<double> flat(2 * poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) {
    flat[2 * i] = poly[i].x;
    flat[2 * i + 1] = poly[i].y;
  }
  return flat;
}

/// Fit every annotated instance against one image. Output is ordered by
/// instance id; per-instance failures are recorded in place.
inline ResultFile run_fit(const ImagePatch& img,
                          std::vector<Annotation> annotations,
                          const FitConfig& cfg) {
  std::sort(annotations.begin(), annotations.end(),
            [](const Annotation& a, const Annotation& b) { return a.id < b.id; });
  std::vector<Box> boxes;
  boxes.reserve(annotations.size());
  for (const Annotation& a : annotations) boxes.push_back(a.box);

  const std::vector<EvolveOutcome> outcomes =
      evolve_batch(img, boxes, cfg.energy, cfg.clip, cfg.snake, cfg.init);

  ResultFile out;
  out.instances.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    InstanceResult r;
    r.id = annotations[i].id;
    if (outcomes[i].trace) {
      const SnakeTrace& t = *outcomes[i].trace;
      r.polygon = polygon_to_flat(t.polygon);
      r.energy = t.total.back();
      r.iterations = t.iterations;
      r.terminated = to_string(t.termination);
    } else {
      r.error = outcomes[i].error;
    }
    out.instances.push_back(std::move(r));
  }
  return out;
}

/// Score predictions against ground-truth masks named `<id>.pgm` (or .ppm /
/// .pnm) in `mask_dir`: rasterize each polygon at the mask's resolution and
/// take the mask IoU. The mean covers the instances that evaluated.
inline EvalReport run_eval(const ResultFile& pred, const std::string& mask_dir) {
  namespace fs = std::filesystem;
  EvalReport report;
  double sum = 0.0;
  for (const InstanceResult& r : pred.instances) {
    EvalEntry e;
    e.id = r.id;
    if (r.failed()) {
      e.error = "no_polygon";
    } else {
      fs::path mask_path;
      for (const char* ext : {".pgm", ".ppm", ".pnm"}) {
        const fs::path p = fs::path(mask_dir) / (std::to_string(r.id) + ext);
        if (fs::exists(p)) {
          mask_path = p;
          break;
        }
      }
      if (mask_path.empty()) {
        e.error = "missing_gt";
      } else {
        const Mask gt = load_mask(mask_path.string());
        const Mask predicted = rasterize_polygon(polygon_from_flat(r.polygon),
                                                 gt.width(), gt.height());
        e.iou = mask_iou(predicted, gt);
        sum += e.iou;
        ++report.evaluated;
      }
    }
    report.instances.push_back(std::move(e));
  }
  report.mean_iou =
      report.evaluated ? sum / static_cast<double>(report.evaluated) : 0.0;
  return report;
}

}  // namespace polysnake
