#include "subsnake/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "gif_decoder.hpp"

namespace subsnake {

namespace {

GrayImage from_mat(const cv::Mat& mat, const std::string& label) {
  if (mat.empty()) throw IoError("cannot decode image: " + label);

  double scale = 1.0;
  switch (mat.depth()) {
    case CV_8U: break;
    case CV_16U: scale = 255.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 255.0; break;
    default: throw IoError("unsupported pixel depth in " + label);
  }

  cv::Mat real;
  mat.convertTo(real, CV_MAKETYPE(CV_64F, mat.channels()), scale);

  GrayImage img{Field(static_cast<std::size_t>(real.rows), static_cast<std::size_t>(real.cols))};
  const int channels = real.channels();
  for (int r = 0; r < real.rows; ++r) {
    const double* row = real.ptr<double>(r);
    for (int c = 0; c < real.cols; ++c) {
      const double* px = row + static_cast<std::ptrdiff_t>(c) * channels;
      double value;
      if (channels >= 3) {
        value = luminance(px[2], px[1], px[0]);  // OpenCV stores BGR(A)
      } else {
        value = px[0];  // gray or gray + alpha
      }
      img.intensity(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = value;
    }
  }
  img.validate();
  return img;
}

GrayImage from_gif(std::span<const std::uint8_t> bytes, const std::string& label) {
  detail::RgbImage rgb;
  try {
    rgb = detail::decode_gif(bytes);
  } catch (const std::runtime_error& e) {
    throw IoError("cannot decode GIF " + label + ": " + e.what());
  }
  GrayImage img{Field(rgb.rows, rgb.cols)};
  for (std::size_t i = 0; i < rgb.rows * rgb.cols; ++i) {
    const std::uint8_t* px = &rgb.rgb[3 * i];
    img.intensity.data()[i] = luminance(px[0], px[1], px[2]);
  }
  img.validate();
  return img;
}

// Prewitt-type derivative with q-deep +-1 bands, valid at pixels with
// distance >= q from all borders.
double prewitt_at(const Field& f, int axis, int q, std::size_t r, std::size_t c) {
  double sum = 0.0;
  const long rr = static_cast<long>(r);
  const long cc = static_cast<long>(c);
  for (long d = 1; d <= q; ++d) {
    for (long s = -q; s <= q; ++s) {
      if (axis == 0) {
        sum += f(static_cast<std::size_t>(rr + d), static_cast<std::size_t>(cc + s)) -
               f(static_cast<std::size_t>(rr - d), static_cast<std::size_t>(cc + s));
      } else {
        sum += f(static_cast<std::size_t>(rr + s), static_cast<std::size_t>(cc + d)) -
               f(static_cast<std::size_t>(rr + s), static_cast<std::size_t>(cc - d));
      }
    }
  }
  const double norm = static_cast<double>((2 * q + 1) * q * (q + 1));
  return sum / norm;
}

double sobel_at(const Field& f, int axis, std::size_t r, std::size_t c) {
  const long rows = static_cast<long>(f.rows());
  const long cols = static_cast<long>(f.cols());
  auto px = [&](long dr, long dc) {
    const long rr = std::clamp(static_cast<long>(r) + dr, 0L, rows - 1);
    const long cc = std::clamp(static_cast<long>(c) + dc, 0L, cols - 1);
    return f(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
  };
  static constexpr double kWeights[3] = {1.0, 2.0, 1.0};
  double sum = 0.0;
  for (long s = -1; s <= 1; ++s) {
    const double w = kWeights[s + 1];
    if (axis == 0) {
      sum += w * (px(1, s) - px(-1, s));
    } else {
      sum += w * (px(s, 1) - px(s, -1));
    }
  }
  return sum / 8.0;
}

}  // namespace

void GrayImage::validate() const {
  if (rows() < 3 || cols() < 3) {
    throw InvalidInput("image must be at least 3x3, got " + std::to_string(rows()) + "x" +
                       std::to_string(cols()));
  }
  for (double v : intensity.data()) {
    if (!std::isfinite(v)) throw InvalidInput("image intensities must be finite");
  }
}

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage decode_grayscale(std::span<const std::uint8_t> bytes, const std::string& label) {
  if (detail::is_gif(bytes)) return from_gif(bytes, label);
  std::vector<std::uint8_t> buffer(bytes.begin(), bytes.end());
  cv::Mat mat;
  try {
    mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED | cv::IMREAD_IGNORE_ORIENTATION);
  } catch (const cv::Exception& e) {
    throw IoError("cannot decode image " + label + ": " + e.what());
  }
  return from_mat(mat, label);
}

GrayImage load_grayscale(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_grayscale(bytes, path.string());
}

void save_png(const Field& field, const std::filesystem::path& path) {
  cv::Mat mat(static_cast<int>(field.rows()), static_cast<int>(field.cols()), CV_8UC1);
  for (std::size_t r = 0; r < field.rows(); ++r) {
    auto* row = mat.ptr<std::uint8_t>(static_cast<int>(r));
    for (std::size_t c = 0; c < field.cols(); ++c) {
      row[c] = static_cast<std::uint8_t>(std::clamp(std::lround(field(r, c)), 0L, 255L));
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw IoError("cannot write image: " + path.string());
}

GrayImage negated(const GrayImage& img) {
  GrayImage out = img;
  for (double& v : out.intensity.data()) v = 255.0 - v;
  return out;
}

int default_filter_halfwidth(std::size_t rows, std::size_t cols) {
  return std::clamp(static_cast<int>(std::min(rows, cols) / 100), 1, 5);
}

Field derivative(const Field& f, int axis, int q) {
  const std::size_t rows = f.rows();
  const std::size_t cols = f.cols();
  const auto uq = static_cast<std::size_t>(q);
  Field out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const bool interior = r >= uq && c >= uq && r + uq < rows && c + uq < cols;
      out(r, c) = interior ? prewitt_at(f, axis, q, r, c) : sobel_at(f, axis, r, c);
    }
  }
  return out;
}

DerivativeFields compute_derivative_fields(const GrayImage& img, int q) {
  if (q < 1) throw InvalidInput("filter half-width must be >= 1");
  const auto span = static_cast<std::size_t>(2 * q + 1);
  if (img.rows() <= span || img.cols() <= span) {
    throw InvalidInput("filter half-width " + std::to_string(q) + " too large for " +
                       std::to_string(img.rows()) + "x" + std::to_string(img.cols()) + " image");
  }
  DerivativeFields d;
  d.halfwidth = q;
  d.ix = derivative(img.intensity, 0, q);
  d.iy = derivative(img.intensity, 1, q);
  d.ixx = derivative(d.ix, 0, q);
  d.ixy = derivative(d.ix, 1, q);
  d.iyy = derivative(d.iy, 1, q);
  return d;
}

double bilinear_sample(const Field& f, Point p) {
  const double max_r = static_cast<double>(f.rows() - 1);
  const double max_c = static_cast<double>(f.cols() - 1);
  const double x = std::clamp(p.x, 0.0, max_r);
  const double y = std::clamp(p.y, 0.0, max_c);
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const auto r0 = static_cast<std::size_t>(fx);
  const auto c0 = static_cast<std::size_t>(fy);
  const std::size_t r1 = std::min(r0 + 1, f.rows() - 1);
  const std::size_t c1 = std::min(c0 + 1, f.cols() - 1);
  return f(r0, c0) * (1.0 - ax) * (1.0 - ay) + f(r1, c0) * ax * (1.0 - ay) +
         f(r0, c1) * (1.0 - ax) * ay + f(r1, c1) * ax * ay;
}

RowPrefixTable::RowPrefixTable(const GrayImage& img)
    : rows_(img.rows()), cols_(img.cols()), prefix_(rows_ * (cols_ + 1), 0.0) {
  for (std::size_t r = 0; r < rows_; ++r) {
    double* row = &prefix_[r * (cols_ + 1)];
    for (std::size_t c = 0; c < cols_; ++c) row[c + 1] = row[c] + img.intensity(r, c);
  }
}

double RowPrefixTable::box_sum(std::size_t row_min, std::size_t row_max, std::size_t col_min,
                               std::size_t col_max) const {
  double sum = 0.0;
  for (std::size_t r = row_min; r <= row_max; ++r) {
    sum += (*this)(r, col_max + 1) - (*this)(r, col_min);
  }
  return sum;
}

}  // namespace subsnake
