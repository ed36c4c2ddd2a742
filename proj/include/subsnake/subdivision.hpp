#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "subsnake/common.hpp"

namespace subsnake {

enum class SchemeKind { FourPoint, CubicBSpline };

// A binary subdivision scheme. The four-point scheme carries its tension
// parameter; values outside (0, (sqrt(5)-1)/8) are rejected because the
// limit curve would lose its continuous tangent.
class Scheme {
 public:
  static constexpr double kDefaultOmega = 1.0 / 16.0;

  static Scheme four_point(double omega = kDefaultOmega);
  static Scheme cubic_bspline();
  static Scheme from_name(const std::string& name, double omega = kDefaultOmega);

  SchemeKind kind() const { return kind_; }
  double omega() const { return omega_; }
  std::string name() const;

  // phi vanishes outside (-radius, radius).
  int support_radius() const { return kind_ == SchemeKind::FourPoint ? 3 : 2; }
  std::size_t min_points() const { return kind_ == SchemeKind::FourPoint ? 4 : 3; }

  friend bool operator==(const Scheme&, const Scheme&) = default;

 private:
  Scheme(SchemeKind kind, double omega) : kind_(kind), omega_(omega) {}

  SchemeKind kind_;
  double omega_;
};

// Closed control polygon. Indices wrap modulo size().
struct ControlPolygon {
  std::vector<Point> points;
  Scheme scheme = Scheme::four_point();

  std::size_t size() const { return points.size(); }
  const Point& at(long i) const;
  void validate() const;
};

// One application of the even/odd refinement rules. A closed sequence is
// extended periodically; an open one is treated as a window onto a sequence
// that is zero outside it (the functional-data convention used to tabulate
// the basic limit function).
std::vector<double> refine_once(std::span<const double> values, const Scheme& scheme, bool closed);
std::vector<Point> refine_once(std::span<const Point> polygon, const Scheme& scheme, bool closed);

// Values of the basic limit function phi and its derivative at the dyadic
// offsets n / 2^depth, |n| <= radius * 2^depth. Immutable once built.
class BasicFunctionTable {
 public:
  BasicFunctionTable(Scheme scheme, int depth);

  const Scheme& scheme() const { return scheme_; }
  int depth() const { return depth_; }
  int samples_per_unit() const { return 1 << depth_; }
  int radius() const { return radius_; }

  // phi(n / 2^depth); zero outside the support.
  double phi(long n) const;
  // d phi / dt at n / 2^depth, in the parameter scale of t.
  double dphi(long n) const;

  std::span<const double> phi_values() const { return phi_; }
  std::span<const double> dphi_values() const { return dphi_; }
  long first_offset() const { return -static_cast<long>(radius_) * samples_per_unit(); }

 private:
  Scheme scheme_;
  int depth_;
  int radius_;
  std::vector<double> phi_;
  std::vector<double> dphi_;
};

// Cached per (scheme, depth); safe to call from several threads.
std::shared_ptr<const BasicFunctionTable> basic_table(const Scheme& scheme, int depth);

struct CurveSample {
  std::vector<Point> points;
  std::vector<Point> tangents;
  int depth = 0;
  std::size_t control_count = 0;

  std::size_t size() const { return points.size(); }
};

// Control index j (already wrapped) and the basis weights phi(i/2^k - j),
// phi'(i/2^k - j) that sample i receives from it.
struct StencilTerm {
  std::size_t control;
  double phi;
  double dphi;
};

// Visits the 2*radius control points whose basis support covers sample i.
template <typename Fn>
void for_each_stencil(const BasicFunctionTable& table, std::size_t control_count, std::size_t i,
                      Fn&& fn) {
  const long per_unit = table.samples_per_unit();
  const long m = static_cast<long>(control_count);
  const long base = static_cast<long>(i) / per_unit;
  for (long j = base - table.radius() + 1; j <= base + table.radius(); ++j) {
    const long n = static_cast<long>(i) - j * per_unit;
    const long wrapped = ((j % m) + m) % m;
    fn(StencilTerm{static_cast<std::size_t>(wrapped), table.phi(n), table.dphi(n)});
  }
}

// Exact samples r(i/2^k) and r'(i/2^k), i = 0 .. 2^k M - 1.
CurveSample evaluate_curve(const ControlPolygon& polygon, const BasicFunctionTable& table);

// First column of the inverse of the circulant limit-position matrix of the
// cubic B-spline (rows 1/6, 2/3, 1/6), in closed form.
std::vector<double> interpolation_column(std::size_t m);

// Control points whose cubic B-spline curve passes through the targets at
// the integer parameters.
ControlPolygon interpolation_operator(const ControlPolygon& targets);

double signed_area(std::span<const Point> polygon);
// Reverses the vertex order when the polygon has negative signed area in the
// (row, col) frame. Both basic functions are even, so the curve reverses too.
ControlPolygon counterclockwise(ControlPolygon polygon);

nlohmann::json polygon_to_json(const ControlPolygon& polygon);
ControlPolygon polygon_from_json(const nlohmann::json& doc);

}  // namespace subsnake
