#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "polysnake/clip.hpp"
#include "polysnake/energy.hpp"
#include "polysnake/geometry.hpp"
#include "polysnake/snake.hpp"

namespace polysnake {

/// Raised on malformed annotation input; the message carries the parse
/// position or the offending instance index.
struct AnnotationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One annotated instance: id plus its box (stored corner-form; the file
/// format uses [x, y, width, height]).
struct Annotation {
  std::int64_t id = 0;
  Box box;
};

/// Parse annotation JSON: either a bare array of {"id", "bbox":[x,y,w,h]}
/// objects or an object wrapping it under "instances".
inline std::vector<Annotation> parse_annotations(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw AnnotationError(e.what());
  }
  if (doc.is_object() && doc.contains("instances")) doc = doc["instances"];
  if (!doc.is_array())
    throw AnnotationError("expected a JSON array of instances");

  std::vector<Annotation> out;
  std::set<std::int64_t> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto where = [i] { return "instance " + std::to_string(i) + ": "; };
    const nlohmann::json& item = doc[i];
    if (!item.is_object()) throw AnnotationError(where() + "not an object");
    if (!item.contains("id") || !item["id"].is_number_integer())
      throw AnnotationError(where() + "missing integer id");
    if (!item.contains("bbox") || !item["bbox"].is_array() ||
        item["bbox"].size() != 4)
      throw AnnotationError(where() + "bbox must be [x, y, width, height]");
    double v[4];
    for (int j = 0; j < 4; ++j) {
      if (!item["bbox"][j].is_number())
        throw AnnotationError(where() + "bbox entries must be numbers");
      v[j] = item["bbox"][j].get<double>();
      if (!std::isfinite(v[j]))
        throw AnnotationError(where() + "bbox entries must be finite");
    }
    if (v[2] <= 0.0 || v[3] <= 0.0)
      throw AnnotationError(where() + "bbox width and height must be positive");
    Annotation a;
    a.id = item["id"].get<std::int64_t>();
    if (!seen.insert(a.id).second)
      throw AnnotationError(where() + "duplicate id " + std::to_string(a.id));
    a.box = {v[0], v[1], v[0] + v[2], v[1] + v[3]};
    out.push_back(a);
  }
  return out;
}

inline std::vector<Annotation> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AnnotationError("cannot open annotations: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_annotations(buf.str());
}

// ---------------------------------------------------------------------------
// Fit results

/// Per-instance fit outcome. On success `polygon` holds 2K image-frame
/// coordinates [x1, y1, ..., xK, yK]; on failure only `error` is set.
struct InstanceResult {
  std::int64_t id = 0;
  std::vector<double> polygon;
  double energy = 0.0;
  std::size_t iterations = 0;
  std::string terminated;
  std::string error;

  bool failed() const { return !error.empty(); }
  friend bool operator==(const InstanceResult&, const InstanceResult&) = default;
};

struct ResultFile {
  std::vector<InstanceResult> instances;
  friend bool operator==(const ResultFile&, const ResultFile&) = default;
};

inline std::string write_result_file(const ResultFile& results) {
  nlohmann::json doc;
  doc["instances"] = nlohmann::json::array();
  for (const InstanceResult& r : results.instances) {
    nlohmann::json item;
    item["id"] = r.id;
    if (r.failed()) {
      item["error"] = r.error;
    } else {
      item["polygon"] = r.polygon;
      item["energy"] = r.energy;
      item["iterations"] = r.iterations;
      item["terminated"] = r.terminated;
    }
    doc["instances"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

inline ResultFile parse_result_file(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.is_object() || !doc.contains("instances") ||
      !doc["instances"].is_array())
    throw std::runtime_error("result file: missing instances array");
  ResultFile out;
  for (const nlohmann::json& item : doc["instances"]) {
    InstanceResult r;
    r.id = item.at("id").get<std::int64_t>();
    if (item.contains("error")) {
      r.error = item["error"].get<std::string>();
    } else {
      r.polygon = item.at("polygon").get<std::vector<double>>();
      if (r.polygon.size() < 6 || r.polygon.size() % 2 != 0)
        throw std::runtime_error("result file: bad polygon length");
      r.energy = item.at("energy").get<double>();
      r.iterations = item.at("iterations").get<std::size_t>();
      r.terminated = item.at("terminated").get<std::string>();
    }
    out.instances.push_back(std::move(r));
  }
  return out;
}

inline ResultFile load_result_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_result_file(buf.str());
}

inline void save_result_file(const ResultFile& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write results: " + path);
  out << write_result_file(results);
}

// ---------------------------------------------------------------------------
// SVG overlay

/// Vector overlay of the fitted contours: an image-sized viewport with one
/// closed path per successful instance, exactly K coordinate pairs each.
inline std::string write_svg_overlay(const ResultFile& results,
                                     std::size_t width, std::size_t height) {
  std::ostringstream svg;
  svg << std::setprecision(10);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  for (const InstanceResult& r : results.instances) {
    if (r.failed()) continue;
    svg << "  <path id=\"instance-" << r.id << "\" d=\"";
    for (std::size_t j = 0; j + 1 < r.polygon.size(); j += 2)
      svg << (j == 0 ? "M " : " L ") << r.polygon[j] << " " << r.polygon[j + 1];
    svg << " Z\" fill=\"none\" stroke=\"#00d000\" stroke-width=\"1\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// ---------------------------------------------------------------------------
// Evaluation report

struct EvalEntry {
  std::int64_t id = 0;
  double iou = 0.0;
  std::string error;  // "missing_gt" or "no_polygon"
};

struct EvalReport {
  std::vector<EvalEntry> instances;
  double mean_iou = 0.0;  // over instances that evaluated
  std::size_t evaluated = 0;
};

inline std::string write_eval_report(const EvalReport& report) {
  nlohmann::json doc;
  doc["instances"] = nlohmann::json::array();
  for (const EvalEntry& e : report.instances) {
    nlohmann::json item;
    item["id"] = e.id;
    if (e.error.empty())
      item["iou"] = e.iou;
    else
      item["error"] = e.error;
    doc["instances"].push_back(std::move(item));
  }
  doc["evaluated"] = report.evaluated;
  doc["mean_iou"] = report.mean_iou;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Config file

/// Everything a fit run needs beyond the inputs themselves.
struct FitConfig {
  EnergyConfig energy;
  ClipConfig clip;
  SnakeConfig snake;
  InitShape init = InitShape::ellipse;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

inline double config_number(const std::string& key, const std::string& val) {
  try {
    std::size_t used = 0;
    const double v = std::stod(val, &used);
    if (used != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': bad number '" + val + "'");
  }
}

inline std::size_t config_count(const std::string& key, const std::string& val) {
  const double v = config_number(key, val);
  if (v < 0.0 || v != std::floor(v))
    throw std::runtime_error("config key '" + key + "': expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

inline bool config_flag(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1") return true;
  if (val == "false" || val == "0") return false;
  throw std::runtime_error("config key '" + key + "': expected true/false");
}

}  // namespace detail

/// Apply one `key = value` setting; keys mirror the config struct fields.
inline void apply_config_entry(FitConfig& cfg, const std::string& key,
                               const std::string& val) {
  using detail::config_count;
  using detail::config_flag;
  using detail::config_number;
  if (key == "alpha") cfg.energy.alpha = config_number(key, val);
  else if (key == "beta") cfg.energy.beta = config_number(key, val);
  else if (key == "gamma") cfg.energy.gamma = config_number(key, val);
  else if (key == "tau") cfg.energy.tau = config_number(key, val);
  else if (key == "sigma_i") cfg.energy.sigma_i = config_number(key, val);
  else if (key == "window") cfg.energy.window = config_count(key, val);
  else if (key == "dilation") cfg.energy.dilation = config_count(key, val);
  else if (key == "unary_kind") {
    if (val == "ciou") cfg.energy.unary_kind = EnergyConfig::Unary::ciou;
    else if (val == "giou") cfg.energy.unary_kind = EnergyConfig::Unary::giou;
    else throw std::runtime_error("config key 'unary_kind': expected ciou or giou");
  } else if (key == "region_full_gradient")
    cfg.energy.region_full_gradient = config_flag(key, val);
  else if (key == "grid") cfg.clip.grid = config_count(key, val);
  else if (key == "pad") cfg.clip.pad = config_count(key, val);
  else if (key == "vertex_count" || key == "k")
    cfg.snake.vertex_count = config_count(key, val);
  else if (key == "max_iters") cfg.snake.max_iters = config_count(key, val);
  else if (key == "step") cfg.snake.step = config_number(key, val);
  else if (key == "backtrack_factor")
    cfg.snake.backtrack_factor = config_number(key, val);
  else if (key == "max_backtracks")
    cfg.snake.max_backtracks = config_count(key, val);
  else if (key == "armijo_c") cfg.snake.armijo_c = config_number(key, val);
  else if (key == "resample_every")
    cfg.snake.resample_every = config_count(key, val);
  else if (key == "tol") cfg.snake.tol = config_number(key, val);
  else if (key == "tol_window") cfg.snake.tol_window = config_count(key, val);
  else if (key == "seed") cfg.snake.seed = static_cast<std::uint64_t>(config_count(key, val));
  else if (key == "init") {
    if (val == "ellipse") cfg.init = InitShape::ellipse;
    else if (val == "square") cfg.init = InitShape::square;
    else throw std::runtime_error("config key 'init': expected ellipse or square");
  } else
    throw std::runtime_error("unknown config key '" + key + "'");
}

/// Load a flat key=value config file. '#' starts a comment; blank lines are
/// skipped. Values set here are meant to be overridden by command-line flags.
inline void apply_config_file(FitConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    try {
      apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                         detail::trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
}

}  // namespace polysnake
