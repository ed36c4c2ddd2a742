#include "subsnake/harness.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

namespace subsnake {

double jaccard_distance(const Mask& omega, const Mask& gamma) {
  if (omega.rows != gamma.rows || omega.cols != gamma.cols) {
    throw InvalidInput("jaccard_distance: masks have different sizes");
  }
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < omega.data.size(); ++i) {
    const bool a = omega.data[i] != 0;
    const bool b = gamma.data[i] != 0;
    both += a && b;
    either += a || b;
  }
  if (either == 0) throw InvalidInput("jaccard_distance: both masks are empty");
  return 1.0 - static_cast<double>(both) / static_cast<double>(either);
}

Mask load_mask(const std::filesystem::path& path) {
  const GrayImage img = load_grayscale(path);
  Mask mask(img.rows(), img.cols());
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) mask.set(r, c, img.intensity(r, c) > 0.0);
  }
  return mask;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  Field f(mask.rows, mask.cols);
  for (std::size_t r = 0; r < mask.rows; ++r) {
    for (std::size_t c = 0; c < mask.cols; ++c) f(r, c) = mask(r, c) ? 255.0 : 0.0;
  }
  save_png(f, path);
}

namespace {

void require_inside(double row_min, double row_max, double col_min, double col_max,
                    const SynthSpec& spec) {
  if (row_min < 0.0 || col_min < 0.0 || row_max > static_cast<double>(spec.rows) - 1.0 ||
      col_max > static_cast<double>(spec.cols) - 1.0) {
    throw InvalidInput("synthetic shape does not fit inside the " + std::to_string(spec.rows) +
                       "x" + std::to_string(spec.cols) + " image");
  }
}

Mask implicit_mask(const SynthSpec& spec, auto inside) {
  Mask mask(spec.rows, spec.cols);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      mask.set(r, c, inside(static_cast<double>(r), static_cast<double>(c)));
    }
  }
  return mask;
}

}  // namespace

SyntheticImage generate_synthetic(const SynthSpec& spec) {
  if (spec.rows < 3 || spec.cols < 3) throw InvalidInput("synthetic image must be at least 3x3");
  auto valid_level = [](double v) { return v >= 0.0 && v <= 255.0; };
  if (!valid_level(spec.foreground) || !valid_level(spec.background)) {
    throw InvalidInput("intensities must lie in [0, 255]");
  }
  const ShapeSpec& s = spec.shape;
  Mask truth;
  switch (s.kind) {
    case ShapeSpec::Kind::Disc: {
      if (!(s.radius > 0.0)) throw InvalidInput("disc radius must be > 0");
      require_inside(s.center.x - s.radius, s.center.x + s.radius, s.center.y - s.radius,
                     s.center.y + s.radius, spec);
      const double r2 = s.radius * s.radius;
      truth = implicit_mask(spec, [&](double r, double c) {
        const double dr = r - s.center.x;
        const double dc = c - s.center.y;
        return dr * dr + dc * dc <= r2;
      });
      break;
    }
    case ShapeSpec::Kind::Ellipse: {
      if (!(s.semi_row > 0.0) || !(s.semi_col > 0.0)) {
        throw InvalidInput("ellipse semi-axes must be > 0");
      }
      const double ca = std::cos(s.angle);
      const double sa = std::sin(s.angle);
      // Half extents of the rotated ellipse along rows and columns.
      const double ext_r = std::hypot(s.semi_row * ca, s.semi_col * sa);
      const double ext_c = std::hypot(s.semi_row * sa, s.semi_col * ca);
      require_inside(s.center.x - ext_r, s.center.x + ext_r, s.center.y - ext_c,
                     s.center.y + ext_c, spec);
      truth = implicit_mask(spec, [&](double r, double c) {
        const double dr = r - s.center.x;
        const double dc = c - s.center.y;
        const double u = (ca * dr + sa * dc) / s.semi_row;
        const double v = (-sa * dr + ca * dc) / s.semi_col;
        return u * u + v * v <= 1.0;
      });
      break;
    }
    case ShapeSpec::Kind::Curve: {
      s.polygon.validate();
      const auto table = basic_table(s.polygon.scheme, s.depth);
      const CurveSample sample = evaluate_curve(s.polygon, *table);
      double rmin = sample.points[0].x, rmax = rmin, cmin = sample.points[0].y, cmax = cmin;
      for (const auto& p : sample.points) {
        rmin = std::min(rmin, p.x);
        rmax = std::max(rmax, p.x);
        cmin = std::min(cmin, p.y);
        cmax = std::max(cmax, p.y);
      }
      require_inside(rmin, rmax, cmin, cmax, spec);
      truth = fill_mask(rasterize_snake(sample.points, spec.rows, spec.cols));
      break;
    }
  }

  SyntheticImage out;
  out.image.intensity = Field(spec.rows, spec.cols, spec.background);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      if (truth(r, c)) out.image.intensity(r, c) = spec.foreground;
    }
  }
  out.truth = std::move(truth);
  return out;
}

ControlPolygon circle_polygon(Point center, double radius, std::size_t m, const Scheme& scheme) {
  if (!(radius > 0.0)) throw InvalidInput("circle radius must be > 0");
  ControlPolygon polygon;
  polygon.scheme = scheme;
  for (std::size_t i = 0; i < m; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
    polygon.points.push_back({center.x + radius * std::cos(theta),
                              center.y + radius * std::sin(theta)});
  }
  polygon.validate();
  return polygon;
}

ControlPolygon prepare_initial(const ControlPolygon& user_points, bool points_are_targets) {
  user_points.validate();
  ControlPolygon polygon = user_points;
  if (points_are_targets && polygon.scheme.kind() == SchemeKind::CubicBSpline) {
    polygon = interpolation_operator(polygon);
  }
  return counterclockwise(std::move(polygon));
}

SegmentationResult summarize(const ControlPolygon& polygon, const OptimizationTrace& trace,
                             const EnergyEval& energy, int depth, std::size_t rows,
                             std::size_t cols, const Mask* truth) {
  SegmentationResult result;
  result.polygon = polygon;
  result.trace = trace;
  result.energy = energy;
  result.curve = evaluate_curve(polygon, *basic_table(polygon.scheme, depth));
  result.raster = rasterize_snake(result.curve.points, rows, cols);
  result.mask = fill_mask(result.raster);
  if (truth != nullptr) result.jaccard = jaccard_distance(result.mask, *truth);
  return result;
}

SegmentationResult segment(const ControlPolygon& initial, const EnergyParams& params,
                           const OptimizerConfig& config,
                           std::shared_ptr<const ImageCaches> caches, const Mask* truth) {
  if (truth != nullptr && (truth->rows != caches->rows() || truth->cols != caches->cols())) {
    throw InvalidInput("ground truth mask size does not match the image");
  }
  Optimizer opt(initial, params, config, caches);
  opt.run();
  return summarize(opt.polygon(), opt.trace(), opt.current(), params.depth, caches->rows(),
                   caches->cols(), truth);
}

nlohmann::json result_to_json(const SegmentationResult& result) {
  nlohmann::json doc;
  doc["status"] = to_string(result.trace.status);
  doc["iterations"] = result.trace.records.empty() ? 0 : result.trace.records.back().iter;
  doc["E_grad"] = result.energy.gradient_term;
  doc["E_reg"] = result.energy.region_term;
  doc["E_total"] = result.energy.value;
  doc["mask_pixels"] = result.mask.count();
  doc["jaccard"] = result.jaccard ? nlohmann::json(*result.jaccard) : nlohmann::json(nullptr);
  doc["polygon"] = polygon_to_json(result.polygon);
  return doc;
}

void write_segmentation(const SegmentationResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  auto open = [&](const char* name) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (out_dir / name).string());
    return out;
  };
  {
    auto out = open("trace.jsonl");
    out << result.trace.to_jsonl();
  }
  {
    auto out = open("polygon.json");
    out << polygon_to_json(result.polygon).dump(2) << '\n';
  }
  {
    auto out = open("boundary.csv");
    write_boundary_csv(result.raster, out);
  }
  {
    auto out = open("result.json");
    out << result_to_json(result).dump(2) << '\n';
  }
  save_mask(result.mask, out_dir / "mask.png");
}

}  // namespace subsnake
