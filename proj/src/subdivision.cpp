#include "subsnake/subdivision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <nlohmann/json.hpp>

namespace subsnake {

namespace {

const double kMaxOmega = (std::sqrt(5.0) - 1.0) / 8.0;

template <typename T>
std::vector<T> refine_impl(std::span<const T> in, const Scheme& scheme, bool closed) {
  const long n = static_cast<long>(in.size());
  if (in.size() < scheme.min_points()) {
    throw InvalidInput("refine_once: " + scheme.name() + " needs at least " +
                       std::to_string(scheme.min_points()) + " points, got " +
                       std::to_string(in.size()));
  }
  auto at = [&](long i) -> T {
    if (closed) return in[static_cast<std::size_t>(((i % n) + n) % n)];
    if (i < 0 || i >= n) return T{};
    return in[static_cast<std::size_t>(i)];
  };

  std::vector<T> out(2 * in.size());
  if (scheme.kind() == SchemeKind::FourPoint) {
    const double w = scheme.omega();
    for (long i = 0; i < n; ++i) {
      out[2 * i] = at(i);
      out[2 * i + 1] = (w + 0.5) * (at(i) + at(i + 1)) - w * (at(i - 1) + at(i + 2));
    }
  } else {
    for (long i = 0; i < n; ++i) {
      out[2 * i] = 0.125 * at(i - 1) + 0.75 * at(i) + 0.125 * at(i + 1);
      out[2 * i + 1] = 0.5 * at(i) + 0.5 * at(i + 1);
    }
  }
  return out;
}

}  // namespace

Scheme Scheme::four_point(double omega) {
  if (!(omega > 0.0 && omega < kMaxOmega)) {
    throw InvalidInput("four-point tension must lie in (0, (sqrt(5)-1)/8), got " +
                       std::to_string(omega));
  }
  return Scheme(SchemeKind::FourPoint, omega);
}

Scheme Scheme::cubic_bspline() { return Scheme(SchemeKind::CubicBSpline, 0.0); }

Scheme Scheme::from_name(const std::string& name, double omega) {
  if (name == "four-point") return four_point(omega);
  if (name == "cubic-bspline") return cubic_bspline();
  throw InvalidInput("unknown scheme '" + name + "' (expected four-point or cubic-bspline)");
}

std::string Scheme::name() const {
  return kind_ == SchemeKind::FourPoint ? "four-point" : "cubic-bspline";
}

const Point& ControlPolygon::at(long i) const {
  const long m = static_cast<long>(points.size());
  return points[static_cast<std::size_t>(((i % m) + m) % m)];
}

void ControlPolygon::validate() const {
  if (points.size() < scheme.min_points()) {
    throw InvalidInput(scheme.name() + " snake needs at least " +
                       std::to_string(scheme.min_points()) + " control points, got " +
                       std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidInput("control point coordinates must be finite");
    }
  }
}

std::vector<double> refine_once(std::span<const double> values, const Scheme& scheme, bool closed) {
  return refine_impl(values, scheme, closed);
}

std::vector<Point> refine_once(std::span<const Point> polygon, const Scheme& scheme, bool closed) {
  return refine_impl(polygon, scheme, closed);
}

BasicFunctionTable::BasicFunctionTable(Scheme scheme, int depth)
    : scheme_(scheme), depth_(depth), radius_(scheme.support_radius()) {
  if (depth < 1 || depth > 16) {
    throw InvalidInput("basic function table depth must be in [1, 16], got " +
                       std::to_string(depth));
  }

  // Delta data on a window wide enough that the zero padding never reaches
  // the support; refined values then stay exact inside the window.
  const long pad = radius_ + 2;
  std::vector<double> level(static_cast<std::size_t>(2 * pad + 1), 0.0);
  level[static_cast<std::size_t>(pad)] = 1.0;
  long origin = pad;  // position of index 0 within `level`
  for (int k = 0; k < depth; ++k) {
    level = refine_once(std::span<const double>(level), scheme_, false);
    origin *= 2;
  }

  const long per_unit = samples_per_unit();
  const long half = static_cast<long>(radius_) * per_unit;
  auto p = [&](long n) { return level[static_cast<std::size_t>(origin + n)]; };
  const double scale = static_cast<double>(per_unit);

  phi_.resize(static_cast<std::size_t>(2 * half + 1));
  dphi_.resize(phi_.size());
  for (long n = -half; n <= half; ++n) {
    const auto slot = static_cast<std::size_t>(n + half);
    if (scheme_.kind() == SchemeKind::FourPoint) {
      const double w = scheme_.omega();
      phi_[slot] = p(n);
      dphi_[slot] = scale / (1.0 - 4.0 * w) *
                    (0.5 * (p(n + 1) - p(n - 1)) - w * (p(n + 2) - p(n - 2)));
    } else {
      phi_[slot] = (p(n - 1) + 4.0 * p(n) + p(n + 1)) / 6.0;
      dphi_[slot] = scale * 0.5 * (p(n + 1) - p(n - 1));
    }
  }
  // The support is open; pin the endpoints so round-off cannot leak.
  phi_.front() = phi_.back() = 0.0;
  dphi_.front() = dphi_.back() = 0.0;
}

double BasicFunctionTable::phi(long n) const {
  const long half = static_cast<long>(radius_) * samples_per_unit();
  if (n < -half || n > half) return 0.0;
  return phi_[static_cast<std::size_t>(n + half)];
}

double BasicFunctionTable::dphi(long n) const {
  const long half = static_cast<long>(radius_) * samples_per_unit();
  if (n < -half || n > half) return 0.0;
  return dphi_[static_cast<std::size_t>(n + half)];
}

std::shared_ptr<const BasicFunctionTable> basic_table(const Scheme& scheme, int depth) {
  using Key = std::tuple<int, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const BasicFunctionTable>> cache;

  const Key key{static_cast<int>(scheme.kind()), scheme.omega(), depth};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_shared<const BasicFunctionTable>(scheme, depth)).first;
  }
  return it->second;
}

CurveSample evaluate_curve(const ControlPolygon& polygon, const BasicFunctionTable& table) {
  if (!(polygon.scheme == table.scheme())) {
    throw InvalidInput("evaluate_curve: polygon scheme " + polygon.scheme.name() +
                       " does not match table scheme " + table.scheme().name());
  }
  polygon.validate();

  const std::size_t m = polygon.size();
  const std::size_t count = m * static_cast<std::size_t>(table.samples_per_unit());
  CurveSample sample;
  sample.depth = table.depth();
  sample.control_count = m;
  sample.points.resize(count);
  sample.tangents.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point r;
    Point t;
    for_each_stencil(table, m, i, [&](const StencilTerm& term) {
      const Point& p = polygon.points[term.control];
      r = r + term.phi * p;
      t = t + term.dphi * p;
    });
    sample.points[i] = r;
    sample.tangents[i] = t;
  }
  return sample;
}

std::vector<double> interpolation_column(std::size_t m) {
  if (m < 3) throw InvalidInput("interpolation operator needs at least 3 points");
  const double md = static_cast<double>(m);
  const std::size_t pairs = (m % 2 == 0) ? m / 2 - 1 : m / 2;

  std::vector<double> column(m);
  for (std::size_t s = 0; s < m; ++s) {
    double value = 1.0 / md;
    if (m % 2 == 0) value += 3.0 / md * std::cos(static_cast<double>(s) * std::numbers::pi);
    for (std::size_t t = 1; t <= pairs; ++t) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / md;
      const double symbol = 2.0 / 3.0 + std::cos(angle) / 3.0;
      value += 2.0 / md / symbol * std::cos(angle * static_cast<double>(s));
    }
    column[s] = value;
  }
  return column;
}

ControlPolygon interpolation_operator(const ControlPolygon& targets) {
  if (targets.scheme.kind() != SchemeKind::CubicBSpline) {
    throw InvalidInput("interpolation_operator applies to cubic B-spline polygons only");
  }
  const std::size_t m = targets.size();
  const auto column = interpolation_column(m);

  ControlPolygon out{std::vector<Point>(m), targets.scheme};
  for (std::size_t s = 0; s < m; ++s) {
    Point acc;
    for (std::size_t t = 0; t < m; ++t) {
      acc = acc + column[(s + m - t) % m] * targets.points[t];
    }
    out.points[s] = acc;
  }
  return out;
}

double signed_area(std::span<const Point> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

ControlPolygon counterclockwise(ControlPolygon polygon) {
  if (signed_area(polygon.points) < 0.0) {
    std::reverse(polygon.points.begin(), polygon.points.end());
  }
  return polygon;
}

nlohmann::json polygon_to_json(const ControlPolygon& polygon) {
  nlohmann::json doc;
  doc["scheme"] = polygon.scheme.name();
  if (polygon.scheme.kind() == SchemeKind::FourPoint) doc["omega"] = polygon.scheme.omega();
  auto& pts = doc["points"] = nlohmann::json::array();
  for (const auto& p : polygon.points) pts.push_back({p.x, p.y});
  return doc;
}

ControlPolygon polygon_from_json(const nlohmann::json& doc) {
  try {
    const double omega = doc.value("omega", Scheme::kDefaultOmega);
    ControlPolygon polygon;
    polygon.scheme = Scheme::from_name(doc.at("scheme").get<std::string>(), omega);
    for (const auto& p : doc.at("points")) {
      if (!p.is_array() || p.size() != 2) throw InvalidInput("each point must be [row, col]");
      polygon.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    polygon.validate();
    return polygon;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed control polygon JSON: ") + e.what());
  }
}

}  // namespace subsnake
