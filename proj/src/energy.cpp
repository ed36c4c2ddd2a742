#include "subsnake/energy.hpp"

#include <cmath>
#include <string>

namespace subsnake {

namespace {

constexpr double kMinRegionArea = 4.0;

}  // namespace

ImageCaches ImageCaches::build(const GrayImage& raw, Polarity polarity, int halfwidth) {
  raw.validate();
  GrayImage img = polarity == Polarity::BrightObject ? negated(raw) : raw;
  DerivativeFields fields = compute_derivative_fields(img, halfwidth);
  RowPrefixTable prefix(img);
  return ImageCaches{std::move(img), std::move(fields), std::move(prefix)};
}

RegionBox make_region_box(const RowPrefixTable& prefix, long row_min, long row_max, long col_min,
                          long col_max) {
  const long rows = static_cast<long>(prefix.rows());
  const long cols = static_cast<long>(prefix.cols());
  if (row_min < 0 || col_min < 0 || row_max >= rows || col_max >= cols || row_min > row_max ||
      col_min > col_max) {
    throw InvalidInput("bounding box [" + std::to_string(row_min) + "," + std::to_string(row_max) +
                       "]x[" + std::to_string(col_min) + "," + std::to_string(col_max) +
                       "] does not fit a " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " image");
  }
  RegionBox box{row_min, row_max, col_min, col_max, 0.0, 0.0};
  box.intensity = prefix.box_sum(static_cast<std::size_t>(row_min), static_cast<std::size_t>(row_max),
                                 static_cast<std::size_t>(col_min), static_cast<std::size_t>(col_max));
  box.area = static_cast<double>((row_max - row_min + 1) * (col_max - col_min + 1));
  return box;
}

RegionBox full_image_box(const RowPrefixTable& prefix) {
  return make_region_box(prefix, 0, static_cast<long>(prefix.rows()) - 1, 0,
                         static_cast<long>(prefix.cols()) - 1);
}

double gradient_energy(const CurveSample& sample, const DerivativeFields& fields) {
  double sum = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Point& r = sample.points[i];
    const Point& t = sample.tangents[i];
    sum += bilinear_sample(fields.iy, r) * t.x - bilinear_sample(fields.ix, r) * t.y;
  }
  return sum / static_cast<double>(sample.size());
}

std::vector<double> gradient_energy_grad(const ControlPolygon& polygon, const CurveSample& sample,
                                         const BasicFunctionTable& table,
                                         const DerivativeFields& fields) {
  const std::size_t m = polygon.size();
  std::vector<double> grad(2 * m, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Point& r = sample.points[i];
    const Point& t = sample.tangents[i];
    const double ix = bilinear_sample(fields.ix, r);
    const double iy = bilinear_sample(fields.iy, r);
    const double ixx = bilinear_sample(fields.ixx, r);
    const double ixy = bilinear_sample(fields.ixy, r);
    const double iyy = bilinear_sample(fields.iyy, r);
    const double wx = ixy * t.x - ixx * t.y;
    const double wy = iyy * t.x - ixy * t.y;
    for_each_stencil(table, m, i, [&](const StencilTerm& s) {
      grad[2 * s.control] += wx * s.phi + iy * s.dphi;
      grad[2 * s.control + 1] += wy * s.phi - ix * s.dphi;
    });
  }
  const double scale = 1.0 / static_cast<double>(sample.size());
  for (double& g : grad) g *= scale;
  return grad;
}

RegionTerms region_terms(const RegionIntegrals& omega, const RegionBox& box) {
  const double inside_area = omega.area;
  const double outside_area = box.area - omega.area;
  if (!(inside_area > kMinRegionArea)) {
    throw DegenerateRegion("snake region area " + std::to_string(inside_area) +
                           " is collapsed or inverted");
  }
  if (!(outside_area > 0.0)) {
    throw DegenerateRegion("snake region area " + std::to_string(inside_area) +
                           " reaches the bounding box area " + std::to_string(box.area));
  }
  if (!omega.simple) throw DegenerateRegion("snake crosses itself");
  const double outside_intensity = box.intensity - omega.intensity;
  RegionTerms terms;
  terms.inside_mean = omega.intensity / inside_area;
  terms.outside_mean = outside_intensity / outside_area;
  terms.contrast = terms.inside_mean - terms.outside_mean;
  terms.g = omega.intensity / (inside_area * inside_area) +
            outside_intensity / (outside_area * outside_area);
  terms.h = 1.0 / inside_area + 1.0 / outside_area;
  return terms;
}

double region_energy(const CurveSample& sample, const RegionBox& box, const RowPrefixTable& prefix) {
  const auto raster = rasterize_snake(sample.points, prefix.rows(), prefix.cols());
  return region_terms(region_integrals(raster, prefix), box).energy();
}

std::vector<double> region_energy_grad(const ControlPolygon& polygon, const CurveSample& sample,
                                       const BasicFunctionTable& table, const GrayImage& image,
                                       const RegionTerms& terms) {
  // d|Omega|/dx_j = int phi(t-j) y'(t) dt and d|Omega|/dy_j = -int phi(t-j) x'(t) dt
  // for a counterclockwise curve; dI_Omega carries an extra factor I(r(t)).
  const std::size_t m = polygon.size();
  std::vector<double> grad(2 * m, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Point& t = sample.tangents[i];
    const double weight = terms.g - terms.h * bilinear_sample(image.intensity, sample.points[i]);
    for_each_stencil(table, m, i, [&](const StencilTerm& s) {
      grad[2 * s.control] += weight * s.phi * t.y;
      grad[2 * s.control + 1] -= weight * s.phi * t.x;
    });
  }
  // The integral over [0, M] is approximated by a 2^-k weighted sum.
  const double scale = 2.0 * terms.contrast / static_cast<double>(table.samples_per_unit());
  for (double& g : grad) g *= scale;
  return grad;
}

EnergyEval total_energy(const ControlPolygon& polygon, const EnergyParams& params,
                        const ImageCaches& caches) {
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
    throw InvalidInput("alpha must lie in [0, 1]");
  }
  const auto table = basic_table(polygon.scheme, params.depth);
  const CurveSample sample = evaluate_curve(polygon, *table);
  const auto raster = rasterize_snake(sample.points, caches.rows(), caches.cols());
  const RegionTerms terms = region_terms(region_integrals(raster, caches.prefix), params.box);

  EnergyEval eval;
  eval.gradient_term = gradient_energy(sample, caches.fields);
  eval.region_term = terms.energy();
  eval.value = params.alpha * eval.gradient_term + (1.0 - params.alpha) * eval.region_term;

  eval.grad.assign(2 * polygon.size(), 0.0);
  if (params.alpha > 0.0) {
    const auto g = gradient_energy_grad(polygon, sample, *table, caches.fields);
    for (std::size_t i = 0; i < g.size(); ++i) eval.grad[i] += params.alpha * g[i];
  }
  if (params.alpha < 1.0) {
    const auto g = region_energy_grad(polygon, sample, *table, caches.image, terms);
    for (std::size_t i = 0; i < g.size(); ++i) eval.grad[i] += (1.0 - params.alpha) * g[i];
  }
  return eval;
}

}  // namespace subsnake
