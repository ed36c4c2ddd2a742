#include "subsnake/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

namespace subsnake {

namespace {

long ceil_to_long(double v) { return static_cast<long>(std::ceil(v)); }

// ceil(num / den) for den > 0.
long ceil_div(long num, long den) {
  const long q = num / den;
  return (num % den != 0 && num > 0) ? q + 1 : q;
}

}  // namespace

std::vector<BoundaryPixel> BoundaryRaster::row_pixels(long row) const {
  std::vector<BoundaryPixel> out;
  for (const auto& px : pixels) {
    if (px.row == row) out.push_back(px);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BoundaryPixel& a, const BoundaryPixel& b) { return a.col < b.col; });
  return out;
}

BoundaryRaster rasterize_snake(std::span<const Point> polygon, std::size_t rows, std::size_t cols) {
  if (polygon.size() < 3) throw DegenerateRegion("rasterize_snake: need at least 3 points");
  const bool all_same = std::all_of(polygon.begin(), polygon.end(),
                                    [&](const Point& p) { return p == polygon.front(); });
  if (all_same) throw DegenerateRegion("rasterize_snake: all curve samples coincide");
  for (const auto& p : polygon) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DegenerateRegion("rasterize_snake: non-finite curve sample");
    }
  }

  BoundaryRaster raster;
  raster.rows = rows;
  raster.cols = cols;
  raster.edges.resize(polygon.size());

  const long max_col = static_cast<long>(cols);
  const long max_row = static_cast<long>(rows);
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % polygon.size()];
    const long xa = ceil_to_long(a.x);
    const long xb = ceil_to_long(b.x);
    if (a.x == b.x || xa == xb) continue;  // horizontal in pixel rows

    const long ya = ceil_to_long(a.y);
    const long yb = ceil_to_long(b.y);
    const long dx = xb - xa;
    const long dy = yb - ya;
    // ceil of the line through (xa, ya) and (xb, yb) at row x, exactly.
    auto line_col = [&](long x) {
      const long num = dy * (x - xa);
      return dx > 0 ? ya + ceil_div(num, dx) : ya + ceil_div(-num, -dx);
    };

    EdgeSpan& span = raster.edges[i];
    const bool downhill = a.x < b.x;
    span.cls = downhill ? EdgeClass::Downhill : EdgeClass::Uphill;
    span.row_begin = std::min(xa, xb);
    span.row_end = std::max(xa, xb);
    const int sign = downhill ? -1 : 1;

    for (long j = span.row_begin; j < span.row_end; ++j) {
      if (j < 0 || j >= max_row) continue;
      const long c0 = line_col(j);
      const long c1 = line_col(j + 1);
      const long l = downhill ? std::min(c0, c1) : std::max(c0, c1);
      raster.pixels.push_back({i, j, std::clamp(l, 0L, max_col), sign});
    }
  }
  return raster;
}

RegionIntegrals region_integrals(const BoundaryRaster& raster, const RowPrefixTable& prefix) {
  RegionIntegrals out;
  for (const auto& px : raster.pixels) {
    const auto row = static_cast<std::size_t>(px.row);
    const auto col = static_cast<std::size_t>(px.col);
    out.intensity += px.sign * prefix(row, col);
    out.area += static_cast<double>(px.sign * px.col);
  }

  // Coverage of pixel c is the sum of signs of strips with col > c.
  std::vector<std::tuple<long, long, int>> strips;
  strips.reserve(raster.pixels.size());
  for (const auto& px : raster.pixels) strips.emplace_back(px.row, -px.col, px.sign);
  std::sort(strips.begin(), strips.end());
  long coverage = 0;
  for (std::size_t i = 0; i < strips.size(); ++i) {
    const auto [row, col, sign] = strips[i];
    if (i > 0 && std::get<0>(strips[i - 1]) != row) coverage = 0;
    coverage += sign;
    const bool last_at_col = i + 1 == strips.size() || std::get<0>(strips[i + 1]) != row ||
                             std::get<1>(strips[i + 1]) != col;
    if (last_at_col && (coverage < 0 || coverage > 1)) out.simple = false;
  }
  return out;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

Mask fill_mask(const BoundaryRaster& raster) {
  Mask mask(raster.rows, raster.cols);
  // Per row, coverage(c) = sum of signs of strips with col > c; accumulate
  // from the right with a difference array.
  std::vector<long> delta(raster.cols + 1);
  std::vector<std::vector<const BoundaryPixel*>> by_row(raster.rows);
  for (const auto& px : raster.pixels) by_row[static_cast<std::size_t>(px.row)].push_back(&px);
  for (std::size_t r = 0; r < raster.rows; ++r) {
    if (by_row[r].empty()) continue;
    std::fill(delta.begin(), delta.end(), 0);
    for (const auto* px : by_row[r]) delta[static_cast<std::size_t>(px->col)] += px->sign;
    long coverage = 0;
    for (std::size_t c = raster.cols; c-- > 0;) {
      coverage += delta[c + 1];
      mask.set(r, c, coverage % 2 != 0);
    }
  }
  return mask;
}

void write_boundary_csv(const BoundaryRaster& raster, std::ostream& out) {
  out << "edge,row,col,sign\n";
  for (const auto& px : raster.pixels) {
    out << px.edge << ',' << px.row << ',' << px.col << ',' << px.sign << '\n';
  }
}

}  // namespace subsnake
