#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "subsnake/common.hpp"

namespace subsnake {

// Row-major real-valued field. Element (r, c) uses 0-based indices and sits
// at the continuous image coordinate (r, c).
class Field {
 public:
  Field() = default;
  Field(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Intensities in [0, 255].
struct GrayImage {
  Field intensity;

  std::size_t rows() const { return intensity.rows(); }
  std::size_t cols() const { return intensity.cols(); }
  void validate() const;
};

GrayImage load_grayscale(const std::filesystem::path& path);
// Same decoding rules for an in-memory encoded file.
GrayImage decode_grayscale(std::span<const std::uint8_t> bytes, const std::string& label);
// Writes an 8-bit PNG, rounding and clamping to [0, 255].
void save_png(const Field& field, const std::filesystem::path& path);

// 0.299 R + 0.587 G + 0.114 B.
double luminance(double r, double g, double b);

// I -> 255 - I; used for bright objects on a dark background.
GrayImage negated(const GrayImage& img);

struct DerivativeFields {
  Field ix, iy, ixx, ixy, iyy;
  int halfwidth = 1;
};

// clamp(min(rows, cols) / 100, 1, 5).
int default_filter_halfwidth(std::size_t rows, std::size_t cols);

// First derivative along rows (axis 0) or columns (axis 1). Pixels at least
// q away from every border use the (2q+1)^2 generalized Prewitt stencil,
// the rest use Sobel with replicated borders. Both are normalized to unit
// response on a unit ramp.
Field derivative(const Field& f, int axis, int q);

DerivativeFields compute_derivative_fields(const GrayImage& img, int q);

// Bilinear blend of the four surrounding samples; points outside the image
// are clamped to the nearest valid position.
double bilinear_sample(const Field& f, Point p);

// prefix[j][l] = sum of the first l pixels of row j, so prefix[j][0] = 0.
class RowPrefixTable {
 public:
  explicit RowPrefixTable(const GrayImage& img);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t row, std::size_t l) const { return prefix_[row * (cols_ + 1) + l]; }
  // Sum over the inclusive pixel rectangle.
  double box_sum(std::size_t row_min, std::size_t row_max, std::size_t col_min,
                 std::size_t col_max) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> prefix_;
};

inline RowPrefixTable build_row_prefix(const GrayImage& img) { return RowPrefixTable(img); }

}  // namespace subsnake
