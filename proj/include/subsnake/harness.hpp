#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "subsnake/energy.hpp"
#include "subsnake/optimize.hpp"
#include "subsnake/raster.hpp"
#include "subsnake/subdivision.hpp"

namespace subsnake {

// 1 - |A n B| / |A u B|. Throws InvalidInput on a size mismatch or an empty
// union.
double jaccard_distance(const Mask& omega, const Mask& gamma);

// PNG (or any readable format) with nonzero = inside.
Mask load_mask(const std::filesystem::path& path);
// 0 / 255 PNG.
void save_mask(const Mask& mask, const std::filesystem::path& path);

struct ShapeSpec {
  enum class Kind { Disc, Ellipse, Curve };

  Kind kind = Kind::Disc;
  Point center{};
  double radius = 0.0;      // disc
  double semi_row = 0.0;    // ellipse semi-axis along rows
  double semi_col = 0.0;    // ellipse semi-axis along columns
  double angle = 0.0;       // ellipse rotation, radians
  ControlPolygon polygon;   // curve
  int depth = 6;            // curve sampling depth
};

struct SynthSpec {
  std::size_t rows = 256;
  std::size_t cols = 256;
  double foreground = 30.0;
  double background = 220.0;
  ShapeSpec shape;
};

struct SyntheticImage {
  GrayImage image;
  Mask truth;
};

// Fills the shape with the foreground intensity. A pixel belongs to a disc
// or ellipse when its center satisfies the implicit inequality; a curve is
// filled by the even-odd rule over its boundary raster. Throws InvalidInput
// when the shape does not fit inside the image.
SyntheticImage generate_synthetic(const SynthSpec& spec);

// M points on a circle, counterclockwise in the (row, col) frame.
ControlPolygon circle_polygon(Point center, double radius, std::size_t m, const Scheme& scheme);

// For the cubic B-spline, user points are curve targets and are replaced by
// the control points that interpolate them. The result is oriented
// counterclockwise.
ControlPolygon prepare_initial(const ControlPolygon& user_points, bool points_are_targets);

struct SegmentationResult {
  ControlPolygon polygon;
  CurveSample curve;
  BoundaryRaster raster;
  Mask mask;
  OptimizationTrace trace;
  EnergyEval energy;
  std::optional<double> jaccard;
};

// Region of the snake as filled by fill_mask at the energy's sampling depth.
SegmentationResult summarize(const ControlPolygon& polygon, const OptimizationTrace& trace,
                             const EnergyEval& energy, int depth, std::size_t rows,
                             std::size_t cols, const Mask* truth);

SegmentationResult segment(const ControlPolygon& initial, const EnergyParams& params,
                           const OptimizerConfig& config,
                           std::shared_ptr<const ImageCaches> caches, const Mask* truth);

// trace.jsonl, polygon.json, mask.png, boundary.csv and result.json.
void write_segmentation(const SegmentationResult& result, const std::filesystem::path& out_dir);

nlohmann::json result_to_json(const SegmentationResult& result);

}  // namespace subsnake
