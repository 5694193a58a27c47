#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "fixtures.hpp"
#include "polysnake/polysnake.hpp"

using namespace polysnake;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return POLYSNAKE_CLI_PATH; }

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path p =
      fs::temp_directory_path() /
      ("polysnake_cli_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out_log = dir / "stdout.log";
  const fs::path err_log = dir / "stderr.log";
  const std::string cmd = std::string(cli_path()) + " " + args + " >" +
                          out_log.string() + " 2>" + err_log.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_log);
  r.err = slurp(err_log);
  return r;
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// Write the disk scene's image, annotation file, and ground-truth mask.
struct DiskFixture {
  fs::path dir;
  fs::path image;
  fs::path boxes;
  fs::path masks;
  fixtures::SyntheticScene scene;

  explicit DiskFixture(const std::string& tag)
      : dir(fresh_dir(tag)), scene(fixtures::disk_scene()) {
    image = dir / "scene.ppm";
    save_ppm(scene.image, image.string());
    boxes = dir / "boxes.json";
    const Box& b = scene.box;
    std::ofstream(boxes) << "[{\"id\": 1, \"bbox\": [" << b.x1 << ", " << b.y1
                         << ", " << b.width() << ", " << b.height() << "]}]";
    masks = dir / "masks";
    fs::create_directories(masks);
    save_pgm(scene.mask, (masks / "1.pgm").string());
  }
};

}  // namespace

TEST_CASE("cli fit traces the disk and eval scores it") {
  DiskFixture fx("fit_eval");
  const fs::path pred = fx.dir / "pred.json";
  const Run fit = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + pred.string());
  INFO(fit.err);
  REQUIRE(fit.exit_code == 0);
  CHECK(fit.out.find("fitted 1/1") != std::string::npos);

  const ResultFile results = load_result_file(pred.string());
  REQUIRE(results.instances.size() == 1);
  CHECK_FALSE(results.instances[0].failed());
  CHECK(results.instances[0].polygon.size() >= 6);

  const fs::path report_path = fx.dir / "report.json";
  const Run ev = run_cli(fx.dir, "eval --pred " + pred.string() +
                                     " --gt-masks " + fx.masks.string() +
                                     " --report " + report_path.string());
  INFO(ev.err);
  REQUIRE(ev.exit_code == 0);
  const auto report = nlohmann::json::parse(slurp(report_path));
  CHECK(report["evaluated"] == 1);
  CHECK(report["mean_iou"].get<double>() >= 0.9);
}

TEST_CASE("cli fit accepts an empty annotation list") {
  DiskFixture fx("empty");
  std::ofstream(fx.boxes) << "[]";
  const fs::path pred = fx.dir / "pred.json";
  const Run fit = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + pred.string());
  REQUIRE(fit.exit_code == 0);
  CHECK(fit.out.find("fitted 0/0") != std::string::npos);
  CHECK(load_result_file(pred.string()).instances.empty());
}

TEST_CASE("cli fit records per-instance failures without aborting") {
  DiskFixture fx("partial");
  const Box& b = fx.scene.box;
  std::ofstream(fx.boxes) << "[{\"id\": 1, \"bbox\": [" << b.x1 << ", " << b.y1
                          << ", " << b.width() << ", " << b.height()
                          << "]}, {\"id\": 2, \"bbox\": [500, 500, 20, 20]}]";
  const fs::path pred = fx.dir / "pred.json";
  const Run fit = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + pred.string() +
                  " --max-iters 25");
  REQUIRE(fit.exit_code == 0);
  CHECK(fit.out.find("fitted 1/2") != std::string::npos);
  CHECK(fit.out.find("instance 2: box_out_of_image") != std::string::npos);
  const ResultFile results = load_result_file(pred.string());
  REQUIRE(results.instances.size() == 2);
  CHECK_FALSE(results.instances[0].failed());
  CHECK(results.instances[1].error == "box_out_of_image");
}

TEST_CASE("cli fit exits 2 on an unreadable image") {
  DiskFixture fx("noimage");
  const Run fit = run_cli(
      fx.dir, "fit --image " + (fx.dir / "missing.ppm").string() + " --boxes " +
                  fx.boxes.string() + " --out " + (fx.dir / "p.json").string());
  CHECK(fit.exit_code == 2);
  CHECK(fit.err.find("cannot open image") != std::string::npos);
}

TEST_CASE("cli fit exits 3 on malformed annotations") {
  DiskFixture fx("badboxes");
  std::ofstream(fx.boxes) << "[{\"id\": 1, \"bbox\": [0, 0, -5, 5]}]";
  const Run fit = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + (fx.dir / "p.json").string());
  CHECK(fit.exit_code == 3);
  CHECK(fit.err.find("instance 0") != std::string::npos);

  std::ofstream(fx.boxes) << "{not json";
  const Run fit2 = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + (fx.dir / "p.json").string());
  CHECK(fit2.exit_code == 3);
}

TEST_CASE("cli fit writes an svg overlay on request") {
  DiskFixture fx("svg");
  const fs::path pred = fx.dir / "pred.json";
  const fs::path svg_path = fx.dir / "overlay.svg";
  const Run fit = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + pred.string() + " --svg " +
                  svg_path.string() + " --k 12 --max-iters 5");
  REQUIRE(fit.exit_code == 0);
  const std::string svg = slurp(svg_path);
  CHECK(count_occurrences(svg, "<path") == 1);
  CHECK(count_occurrences(svg, "M ") == 1);
  CHECK(count_occurrences(svg, " L ") == 12 - 1);
  CHECK(svg.find("instance-1") != std::string::npos);
}

TEST_CASE("cli flags override config-file values") {
  DiskFixture fx("precedence");
  const fs::path cfg = fx.dir / "fit.cfg";
  std::ofstream(cfg) << "k = 16\nmax_iters = 1\n";

  const fs::path pred_file_only = fx.dir / "pred_file.json";
  const Run r1 = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + pred_file_only.string() +
                  " --config " + cfg.string());
  REQUIRE(r1.exit_code == 0);
  CHECK(load_result_file(pred_file_only.string()).instances[0].polygon.size() ==
        2 * 16);

  const fs::path pred_flag = fx.dir / "pred_flag.json";
  const Run r2 = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + pred_flag.string() +
                  " --config " + cfg.string() + " --k 8");
  REQUIRE(r2.exit_code == 0);
  CHECK(load_result_file(pred_flag.string()).instances[0].polygon.size() ==
        2 * 8);
}

TEST_CASE("cli rejects an unusable config file") {
  DiskFixture fx("badcfg");
  const fs::path cfg = fx.dir / "fit.cfg";
  std::ofstream(cfg) << "mystery = 1\n";
  const Run r = run_cli(
      fx.dir, "fit --image " + fx.image.string() + " --boxes " +
                  fx.boxes.string() + " --out " + (fx.dir / "p.json").string() +
                  " --config " + cfg.string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("mystery") != std::string::npos);
}

TEST_CASE("cli gradcheck passes and prints one line per term") {
  const fs::path dir = fresh_dir("gradcheck");
  const Run r = run_cli(dir, "gradcheck --seed 5 --trials 10");
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  for (const char* term : {"unary", "field", "local_pairwise",
                           "global_pairwise", "total"})
    CHECK(r.out.find(term) != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("cli gradcheck flags a poisoned term") {
  const fs::path dir = fresh_dir("gradcheck_bad");
  const Run r = run_cli(
      dir, "gradcheck --seed 5 --trials 5 --corrupt-term local_pairwise");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("local_pairwise") != std::string::npos);
}
