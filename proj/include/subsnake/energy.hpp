#pragma once

#include <cstddef>
#include <vector>

#include "subsnake/imaging.hpp"
#include "subsnake/raster.hpp"
#include "subsnake/subdivision.hpp"

namespace subsnake {

enum class Polarity { DarkObject, BrightObject };

// Fixed rectangle R (inclusive 0-based pixel bounds) with its intensity sum
// and pixel count.
struct RegionBox {
  long row_min = 0;
  long row_max = 0;
  long col_min = 0;
  long col_max = 0;
  double intensity = 0.0;
  double area = 0.0;
};

// Image-derived lookup tables shared by every evaluation of one session.
// For bright objects the image is negated once here, so the energy formulas
// only ever look for dark objects.
struct ImageCaches {
  GrayImage image;
  DerivativeFields fields;
  RowPrefixTable prefix;

  static ImageCaches build(const GrayImage& raw, Polarity polarity, int halfwidth);
  std::size_t rows() const { return image.rows(); }
  std::size_t cols() const { return image.cols(); }
};

RegionBox make_region_box(const RowPrefixTable& prefix, long row_min, long row_max, long col_min,
                          long col_max);
RegionBox full_image_box(const RowPrefixTable& prefix);

struct EnergyParams {
  double alpha = 0.5;
  int depth = 4;
  Polarity polarity = Polarity::DarkObject;
  RegionBox box;
};

// Gradient entries are ordered (d/dx_0, d/dy_0, d/dx_1, d/dy_1, ...).
struct EnergyEval {
  double value = 0.0;
  std::vector<double> grad;
  double gradient_term = 0.0;
  double region_term = 0.0;
};

// Mean over the samples of Iy(r_i) tx_i - Ix(r_i) ty_i.
double gradient_energy(const CurveSample& sample, const DerivativeFields& fields);

std::vector<double> gradient_energy_grad(const ControlPolygon& polygon, const CurveSample& sample,
                                         const BasicFunctionTable& table,
                                         const DerivativeFields& fields);

// Inside/outside averages and the scalars of the region energy derivative.
struct RegionTerms {
  double inside_mean = 0.0;   // A
  double outside_mean = 0.0;  // B
  double contrast = 0.0;      // D = A - B
  double g = 0.0;
  double h = 0.0;

  double energy() const { return -contrast * contrast; }
};

// Throws DegenerateRegion unless 4 < |Omega| < |R| and the snake is simple.
RegionTerms region_terms(const RegionIntegrals& omega, const RegionBox& box);

double region_energy(const CurveSample& sample, const RegionBox& box, const RowPrefixTable& prefix);

std::vector<double> region_energy_grad(const ControlPolygon& polygon, const CurveSample& sample,
                                       const BasicFunctionTable& table, const GrayImage& image,
                                       const RegionTerms& terms);

// alpha E_grad + (1 - alpha) E_reg with one curve evaluation and one
// rasterization shared by both terms.
EnergyEval total_energy(const ControlPolygon& polygon, const EnergyParams& params,
                        const ImageCaches& caches);

}  // namespace subsnake
