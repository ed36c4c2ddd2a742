#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "subsnake/common.hpp"
#include "subsnake/imaging.hpp"

namespace subsnake {

// Classification of a polygon edge by sign(x_i - x_{i+1}) in the
// (row, col) frame.
enum class EdgeClass : int { Downhill = -1, Horizontal = 0, Uphill = 1 };

// One strip endpoint: on image row `row`, the strip covers the `col`
// leftmost pixels and enters the region sums with `sign`.
struct BoundaryPixel {
  std::size_t edge;
  long row;
  long col;
  int sign;
};

struct EdgeSpan {
  EdgeClass cls = EdgeClass::Horizontal;
  long row_begin = 0;  // inclusive
  long row_end = 0;    // exclusive
};

struct BoundaryRaster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<EdgeSpan> edges;        // one per polygon edge
  std::vector<BoundaryPixel> pixels;  // grouped by edge, in edge order

  // Strip endpoints of row `row`, ordered by column.
  std::vector<BoundaryPixel> row_pixels(long row) const;
};

// Boundary pixels of the closed polygon through the curve samples. The row
// of a point (x, y) is ceil(x) and its pixel column ceil(y). Downhill edges
// take the leftmost (min) and uphill edges the rightmost (max) pixel of the
// line through their end pixels on each covered row. An edge covers rows
// [ceil(x_start), ceil(x_end)) in its direction of travel, so every row is
// crossed once per pass of the curve. Rows outside the image are dropped
// and columns clamp to [0, cols].
BoundaryRaster rasterize_snake(std::span<const Point> polygon, std::size_t rows, std::size_t cols);

struct RegionIntegrals {
  double intensity = 0.0;
  double area = 0.0;
  // Signed coverage is 0 or 1 at every pixel, i.e. the snake does not
  // cross itself at pixel resolution.
  bool simple = true;
};

// Signed strip sums; positive for counterclockwise (positive signed area)
// polygons.
RegionIntegrals region_integrals(const BoundaryRaster& raster, const RowPrefixTable& prefix);

struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
  bool operator()(std::size_t r, std::size_t c) const { return data[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { data[r * cols + c] = v ? 1 : 0; }
  std::size_t count() const;
};

// Pixels whose signed strip coverage is odd.
Mask fill_mask(const BoundaryRaster& raster);

// CSV with header "edge,row,col,sign".
void write_boundary_csv(const BoundaryRaster& raster, std::ostream& out);

}  // namespace subsnake
