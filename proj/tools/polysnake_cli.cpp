// Command-line front end: fit polygons to annotated boxes, evaluate
// predictions against ground-truth masks, and self-check the gradients.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polysnake/polysnake.hpp"

namespace {

constexpr int kExitBadImage = 2;
constexpr int kExitBadAnnotations = 3;

struct FitArgs {
  std::string image_path;
  std::string boxes_path;
  std::string out_path;
  std::string svg_path;
  std::string config_path;
};

int cmd_fit(const FitArgs& args, const CLI::App& fit,
            polysnake::FitConfig cfg) {
  // Config-file values load first so explicit flags win.
  polysnake::FitConfig file_cfg;
  if (!args.config_path.empty()) {
    try {
      polysnake::apply_config_file(file_cfg, args.config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  const auto pick = [&fit](const std::string& flag, auto& dst, auto file_val) {
    if (fit.count(flag) == 0) dst = file_val;
  };
  pick("--k", cfg.snake.vertex_count, file_cfg.snake.vertex_count);
  pick("--init", cfg.init, file_cfg.init);
  pick("--alpha", cfg.energy.alpha, file_cfg.energy.alpha);
  pick("--beta", cfg.energy.beta, file_cfg.energy.beta);
  pick("--gamma", cfg.energy.gamma, file_cfg.energy.gamma);
  pick("--tau", cfg.energy.tau, file_cfg.energy.tau);
  pick("--sigma-i", cfg.energy.sigma_i, file_cfg.energy.sigma_i);
  pick("--window", cfg.energy.window, file_cfg.energy.window);
  pick("--dilation", cfg.energy.dilation, file_cfg.energy.dilation);
  pick("--unary", cfg.energy.unary_kind, file_cfg.energy.unary_kind);
  pick("--clip", cfg.clip.grid, file_cfg.clip.grid);
  pick("--pad", cfg.clip.pad, file_cfg.clip.pad);
  pick("--max-iters", cfg.snake.max_iters, file_cfg.snake.max_iters);
  pick("--step", cfg.snake.step, file_cfg.snake.step);
  pick("--resample-every", cfg.snake.resample_every,
       file_cfg.snake.resample_every);
  pick("--seed", cfg.snake.seed, file_cfg.snake.seed);

  polysnake::ImagePatch img;
  try {
    img = polysnake::load_pnm(args.image_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadImage;
  }

  std::vector<polysnake::Annotation> annotations;
  try {
    annotations = polysnake::load_annotations(args.boxes_path);
  } catch (const polysnake::AnnotationError& e) {
    std::cerr << "error: " << args.boxes_path << ": " << e.what() << "\n";
    return kExitBadAnnotations;
  }

  try {
    cfg.energy.validate();
    cfg.clip.validate();
    cfg.snake.validate();
    const polysnake::ResultFile results =
        polysnake::run_fit(img, annotations, cfg);
    polysnake::save_result_file(results, args.out_path);
    if (!args.svg_path.empty()) {
      std::ofstream svg(args.svg_path);
      if (!svg) throw std::runtime_error("cannot write svg: " + args.svg_path);
      svg << polysnake::write_svg_overlay(results, img.width(), img.height());
    }
    std::size_t failed = 0;
    for (const auto& r : results.instances) failed += r.failed() ? 1 : 0;
    std::cout << "fitted " << results.instances.size() - failed << "/"
              << results.instances.size() << " instances\n";
    for (const auto& r : results.instances)
      if (r.failed())
        std::cout << "  instance " << r.id << ": " << r.error << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const std::string& pred_path, const std::string& mask_dir,
             const std::string& report_path) {
  try {
    const polysnake::ResultFile pred = polysnake::load_result_file(pred_path);
    const polysnake::EvalReport report = polysnake::run_eval(pred, mask_dir);
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot write report: " + report_path);
    out << polysnake::write_eval_report(report);
    std::cout << "evaluated " << report.evaluated << "/"
              << report.instances.size() << " instances, mean IoU "
              << report.mean_iou << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_gradcheck(const polysnake::GradCheckOptions& opt) {
  try {
    const polysnake::GradCheckReport report = polysnake::run_gradcheck(opt);
    for (const auto& t : report.terms)
      std::printf("%-16s trials %zu  worst rel err %.3e  %s\n", t.term.c_str(),
                  t.trials, t.worst_rel, t.pass ? "ok" : "FAIL");
    if (!report.pass) {
      for (const auto& t : report.terms)
        if (!t.pass)
          std::cerr << "gradient mismatch in term '" << t.term << "'\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fits polygons to object boundaries from box annotations"};
  app.require_subcommand(1);

  // fit
  FitArgs fit_args;
  polysnake::FitConfig cfg;
  CLI::App* fit = app.add_subcommand("fit", "fit polygons to annotated boxes");
  fit->add_option("--image", fit_args.image_path, "input image (PNM: P2/P3/P5/P6)")
      ->required();
  fit->add_option("--boxes", fit_args.boxes_path,
                  "annotation JSON: [{\"id\", \"bbox\":[x,y,w,h]}, ...]")
      ->required();
  fit->add_option("--out", fit_args.out_path, "output result JSON")->required();
  fit->add_option("--svg", fit_args.svg_path, "also write an SVG overlay");
  fit->add_option("--config", fit_args.config_path,
                  "key=value config file (flags take precedence)");
  fit->add_option("--k", cfg.snake.vertex_count, "polygon vertex count");
  std::map<std::string, polysnake::InitShape> init_names{
      {"ellipse", polysnake::InitShape::ellipse},
      {"square", polysnake::InitShape::square}};
  fit->add_option("--init", cfg.init, "initial contour shape")
      ->transform(CLI::CheckedTransformer(init_names, CLI::ignore_case));
  fit->add_option("--alpha", cfg.energy.alpha, "box-fit term weight");
  fit->add_option("--beta", cfg.energy.beta, "local pairwise weight");
  fit->add_option("--gamma", cfg.energy.gamma, "region term weight");
  fit->add_option("--tau", cfg.energy.tau, "membership temperature (grid px)");
  fit->add_option("--sigma-i", cfg.energy.sigma_i, "color affinity temperature");
  fit->add_option("--window", cfg.energy.window, "pairwise window size (odd)");
  fit->add_option("--dilation", cfg.energy.dilation, "pairwise window dilation");
  std::map<std::string, polysnake::EnergyConfig::Unary> unary_names{
      {"ciou", polysnake::EnergyConfig::Unary::ciou},
      {"giou", polysnake::EnergyConfig::Unary::giou}};
  fit->add_option("--unary", cfg.energy.unary_kind, "box overlap score")
      ->transform(CLI::CheckedTransformer(unary_names, CLI::ignore_case));
  fit->add_option("--clip", cfg.clip.grid, "evaluation grid side");
  fit->add_option("--pad", cfg.clip.pad, "evaluation window pad ring");
  fit->add_option("--max-iters", cfg.snake.max_iters, "iteration budget");
  fit->add_option("--step", cfg.snake.step, "initial step (grid px)");
  fit->add_option("--resample-every", cfg.snake.resample_every,
                  "uniform resampling period (0 = off)");
  fit->add_option("--seed", cfg.snake.seed, "seed recorded in outputs");

  // eval
  std::string pred_path, mask_dir, report_path;
  CLI::App* eval = app.add_subcommand("eval", "score predictions against masks");
  eval->add_option("--pred", pred_path, "result JSON from fit")->required();
  eval->add_option("--gt-masks", mask_dir, "directory of <id>.pgm masks")
      ->required();
  eval->add_option("--report", report_path, "output report JSON")->required();

  // gradcheck
  polysnake::GradCheckOptions gopt;
  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "finite-difference gradient validation");
  gc->add_option("--seed", gopt.seed, "fixture seed");
  gc->add_option("--trials", gopt.trials, "configurations per term");
  gc->add_option("--corrupt-term", gopt.corrupt_term,
                 "poison one term's gradient (negative-control hook)")
      ->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) return cmd_fit(fit_args, *fit, cfg);
  if (eval->parsed()) return cmd_eval(pred_path, mask_dir, report_path);
  if (gc->parsed()) return cmd_gradcheck(gopt);
  return 1;
}
