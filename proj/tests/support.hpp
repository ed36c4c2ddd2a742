// Independent oracles and fixtures shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "subsnake/harness.hpp"

namespace subsnake::testing {

inline GrayImage make_image(std::size_t rows, std::size_t cols,
                            const std::function<double(double, double)>& f) {
  GrayImage img;
  img.intensity = Field(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      img.intensity(r, c) = f(static_cast<double>(r), static_cast<double>(c));
    }
  }
  return img;
}

// Cubic B-spline basis (uniform, centered) in closed form.
inline double bspline_phi(double t) {
  const double a = std::abs(t);
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
  return 2.0 / 3.0 - a * a + a * a * a / 2.0;
}

inline double bspline_dphi(double t) {
  const double a = std::abs(t);
  const double s = t < 0.0 ? -1.0 : 1.0;
  if (a >= 2.0) return 0.0;
  if (a >= 1.0) return -s * (2.0 - a) * (2.0 - a) / 2.0;
  return s * (-2.0 * a + 1.5 * a * a);
}

// Even-odd point-in-polygon by ray crossing along the column axis.
inline bool inside_polygon(const std::vector<Point>& poly, double x, double y) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.x > x) != (b.x > x)) {
      const double yc = a.y + (x - a.x) * (b.y - a.y) / (b.x - a.x);
      if (y < yc) inside = !inside;
    }
  }
  return inside;
}

// Pixels whose centers lie inside the polygon.
inline Mask fill_oracle(const std::vector<Point>& poly, std::size_t rows, std::size_t cols) {
  Mask mask(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      mask.set(r, c, inside_polygon(poly, static_cast<double>(r), static_cast<double>(c)));
    }
  }
  return mask;
}

inline ControlPolygon circle(Point center, double radius, std::size_t m, const Scheme& scheme,
                             double phase = 0.0) {
  ControlPolygon p;
  p.scheme = scheme;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
    p.points.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
  }
  return p;
}

// Separable Gaussian blur with replicated borders.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  const long rows = static_cast<long>(img.rows());
  const long cols = static_cast<long>(img.cols());
  auto clampl = [](long v, long hi) { return std::clamp(v, 0L, hi - 1); };
  Field tmp(img.rows(), img.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * img.intensity(r, clampl(c + i, cols));
      tmp(r, c) = s;
    }
  }
  GrayImage out;
  out.intensity = Field(img.rows(), img.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * tmp(clampl(r + i, rows), c);
      out.intensity(r, c) = s;
    }
  }
  return out;
}

inline void bump(ControlPolygon& p, std::size_t k, double h) {
  (k % 2 == 0 ? p.points[k / 2].x : p.points[k / 2].y) += h;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Six-lobed blob: a four-point curve through 12 points of alternating
// radius 60 (1 +- amplitude) around the image center.
inline ControlPolygon lobed_blob(double amplitude = 0.15, Point center = {128.0, 128.0}) {
  ControlPolygon p;
  p.scheme = Scheme::four_point();
  for (int i = 0; i < 12; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 12.0;
    const double r = 60.0 * (i % 2 ? 1.0 - amplitude : 1.0 + amplitude);
    p.points.push_back({center.x + r * std::cos(t), center.y + r * std::sin(t)});
  }
  return p;
}

inline std::shared_ptr<const ImageCaches> caches_for(const GrayImage& img,
                                                     Polarity polarity = Polarity::DarkObject) {
  return std::make_shared<const ImageCaches>(
      ImageCaches::build(img, polarity, default_filter_halfwidth(img.rows(), img.cols())));
}

inline EnergyParams full_box_params(const ImageCaches& caches, double alpha = 0.5, int depth = 4) {
  EnergyParams p;
  p.alpha = alpha;
  p.depth = depth;
  p.box = full_image_box(caches.prefix);
  return p;
}

}  // namespace subsnake::testing
