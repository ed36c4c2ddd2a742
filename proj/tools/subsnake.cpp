// Command line front end: segment, synth, eval, serve.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "subsnake/harness.hpp"
#include "subsnake/service.hpp"

using namespace subsnake;

namespace {

std::vector<double> parse_numbers(const std::string& text, std::size_t count, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput(what + ": '" + item + "' is not a number");
    }
  }
  if (out.size() != count) {
    throw InvalidInput(what + " expects " + std::to_string(count) + " comma-separated numbers");
  }
  return out;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

Polarity parse_polarity(const std::string& text) {
  return text == "bright" ? Polarity::BrightObject : Polarity::DarkObject;
}

struct SegmentArgs {
  std::string image;
  std::string scheme = "four-point";
  double omega = Scheme::kDefaultOmega;
  std::string init;
  std::string init_circle;
  bool control_points = false;
  std::string alpha = "two-phase";
  int depth = 4;
  std::string box;
  std::string polarity = "dark";
  int filter_halfwidth = 0;
  int max_iters = 200;
  std::string out;
  std::string truth;
};

int run_segment(const SegmentArgs& a, bool scheme_given) {
  const GrayImage image = load_grayscale(a.image);

  ControlPolygon user;
  if (!a.init.empty()) {
    nlohmann::json doc = read_json(a.init);
    if (doc.is_array()) doc = nlohmann::json{{"points", std::move(doc)}};
    if (!doc.is_object()) throw InvalidInput("--init: expected a point array or a polygon object");
    if (scheme_given || !doc.contains("scheme")) {
      doc["scheme"] = a.scheme;
      doc["omega"] = a.omega;
    }
    user = polygon_from_json(doc);
  } else {
    const auto v = parse_numbers(a.init_circle, 4, "--init-circle");
    if (v[3] < 0 || v[3] != static_cast<double>(static_cast<long>(v[3]))) {
      throw InvalidInput("--init-circle: M must be a non-negative integer");
    }
    user = circle_polygon({v[0], v[1]}, v[2], static_cast<std::size_t>(v[3]),
                          Scheme::from_name(a.scheme, a.omega));
  }
  const ControlPolygon initial = prepare_initial(user, !a.control_points);

  const Polarity polarity = parse_polarity(a.polarity);
  const int q = a.filter_halfwidth > 0 ? a.filter_halfwidth
                                       : default_filter_halfwidth(image.rows(), image.cols());
  auto caches = std::make_shared<const ImageCaches>(ImageCaches::build(image, polarity, q));

  EnergyParams params;
  params.depth = a.depth;
  params.polarity = polarity;
  if (a.box.empty()) {
    params.box = full_image_box(caches->prefix);
  } else {
    const auto b = parse_numbers(a.box, 4, "--box");
    params.box = make_region_box(caches->prefix, static_cast<long>(b[0]), static_cast<long>(b[1]),
                                 static_cast<long>(b[2]), static_cast<long>(b[3]));
  }

  OptimizerConfig config;
  config.alpha_mode = AlphaMode::parse(a.alpha);
  config.max_iters = a.max_iters;

  Mask truth;
  if (!a.truth.empty()) truth = load_mask(a.truth);
  const auto result = segment(initial, params, config, caches, a.truth.empty() ? nullptr : &truth);
  write_segmentation(result, a.out);

  nlohmann::json summary = result_to_json(result);
  summary.erase("polygon");
  std::cout << summary.dump() << '\n';
  return result.trace.status == OptimizerStatus::Degenerate ? 3 : 0;
}

struct SynthArgs {
  std::string shape = "disc";
  std::size_t rows = 256;
  std::size_t cols = 256;
  double fg = 30.0;
  double bg = 220.0;
  std::string center;
  double radius = 50.0;
  std::string semi;
  double angle = 0.0;
  std::string polygon;
  int depth = 6;
  std::string image_out;
  std::string mask_out;
};

int run_synth(const SynthArgs& a) {
  SynthSpec spec;
  spec.rows = a.rows;
  spec.cols = a.cols;
  spec.foreground = a.fg;
  spec.background = a.bg;
  ShapeSpec& s = spec.shape;
  if (a.shape == "curve") {
    if (a.polygon.empty()) throw InvalidInput("--shape curve needs --polygon");
    s.kind = ShapeSpec::Kind::Curve;
    s.polygon = polygon_from_json(read_json(a.polygon));
    s.depth = a.depth;
  } else {
    const auto c = a.center.empty()
                       ? std::vector<double>{static_cast<double>(a.rows) / 2.0,
                                             static_cast<double>(a.cols) / 2.0}
                       : parse_numbers(a.center, 2, "--center");
    s.center = {c[0], c[1]};
    if (a.shape == "disc") {
      s.kind = ShapeSpec::Kind::Disc;
      s.radius = a.radius;
    } else {
      s.kind = ShapeSpec::Kind::Ellipse;
      if (a.semi.empty()) throw InvalidInput("--shape ellipse needs --semi a,b");
      const auto ab = parse_numbers(a.semi, 2, "--semi");
      s.semi_row = ab[0];
      s.semi_col = ab[1];
      s.angle = a.angle;
    }
  }
  const auto synthetic = generate_synthetic(spec);
  save_png(synthetic.image.intensity, a.image_out);
  save_mask(synthetic.truth, a.mask_out);
  std::cout << nlohmann::json{{"rows", spec.rows},
                              {"cols", spec.cols},
                              {"mask_pixels", synthetic.truth.count()}}
                   .dump()
            << '\n';
  return 0;
}

int run_serve(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw InvalidInput("--bind expects HOST:PORT");
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidInput("--bind: invalid port in '" + bind + "'");
  }
  HttpService service;
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!service.listen(host, port)) {
    std::cerr << "error: cannot bind " << bind << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subdivision-curve snakes for image segmentation"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment_cmd = app.add_subcommand("segment", "Segment an image from an initial snake");
  segment_cmd->add_option("--image", seg.image, "Input image (PNG, JPEG, BMP, TIFF, GIF)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* scheme_opt = segment_cmd->add_option("--scheme", seg.scheme, "four-point or cubic-bspline")
                         ->check(CLI::IsMember({"four-point", "cubic-bspline"}));
  segment_cmd->add_option("--omega", seg.omega, "Four-point tension");
  auto* init_opt = segment_cmd->add_option("--init", seg.init, "Control point JSON file")
                       ->check(CLI::ExistingFile);
  auto* circle_opt =
      segment_cmd->add_option("--init-circle", seg.init_circle, "Circle initialization row,col,radius,M");
  init_opt->excludes(circle_opt);
  segment_cmd->add_flag("--control-points", seg.control_points,
                        "Use cubic B-spline points as control points instead of curve targets");
  segment_cmd->add_option("--alpha", seg.alpha, "two-phase or fixed:V");
  segment_cmd->add_option("--depth", seg.depth, "Curve sampling depth k")->check(CLI::Range(1, 10));
  segment_cmd->add_option("--box", seg.box, "Region box r0,r1,c0,c1 (inclusive)");
  segment_cmd->add_option("--polarity", seg.polarity, "dark or bright object")
      ->check(CLI::IsMember({"dark", "bright"}));
  segment_cmd->add_option("--filter-halfwidth", seg.filter_halfwidth, "Derivative filter half width");
  segment_cmd->add_option("--max-iters", seg.max_iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  segment_cmd->add_option("--out", seg.out, "Output directory")->required();
  segment_cmd->add_option("--truth", seg.truth, "Ground truth mask for the Jaccard distance")
      ->check(CLI::ExistingFile);

  SynthArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic image and its ground truth");
  synth_cmd->add_option("--shape", syn.shape, "disc, ellipse or curve")
      ->check(CLI::IsMember({"disc", "ellipse", "curve"}));
  synth_cmd->add_option("--rows", syn.rows, "Image rows");
  synth_cmd->add_option("--cols", syn.cols, "Image columns");
  synth_cmd->add_option("--fg", syn.fg, "Object intensity");
  synth_cmd->add_option("--bg", syn.bg, "Background intensity");
  synth_cmd->add_option("--center", syn.center, "Center row,col");
  synth_cmd->add_option("--radius", syn.radius, "Disc radius");
  synth_cmd->add_option("--semi", syn.semi, "Ellipse semi-axes along rows,cols");
  synth_cmd->add_option("--angle", syn.angle, "Ellipse rotation in radians");
  synth_cmd->add_option("--polygon", syn.polygon, "Control polygon JSON for --shape curve")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--depth", syn.depth, "Curve sampling depth")->check(CLI::Range(1, 10));
  synth_cmd->add_option("--image", syn.image_out, "Output image PNG")->required();
  synth_cmd->add_option("--mask", syn.mask_out, "Output mask PNG")->required();

  std::string eval_mask;
  std::string eval_truth;
  auto* eval_cmd = app.add_subcommand("eval", "Jaccard distance between two masks");
  eval_cmd->add_option("--mask", eval_mask, "Segmentation mask")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", eval_truth, "Ground truth mask")->required()->check(CLI::ExistingFile);

  std::string bind = "127.0.0.1:8080";
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
  serve_cmd->add_option("--bind", bind, "HOST:PORT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (segment_cmd->parsed()) {
      if (seg.init.empty() && seg.init_circle.empty()) {
        throw InvalidInput("segment needs --init FILE or --init-circle row,col,radius,M");
      }
      return run_segment(seg, scheme_opt->count() > 0);
    }
    if (synth_cmd->parsed()) return run_synth(syn);
    if (eval_cmd->parsed()) {
      const double j = jaccard_distance(load_mask(eval_mask), load_mask(eval_truth));
      std::cout << nlohmann::json{{"jaccard", j}}.dump() << '\n';
      return 0;
    }
    if (serve_cmd->parsed()) return run_serve(bind);
  } catch (const DegenerateRegion& e) {
    std::cerr << "error: degenerate region: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
