// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Usage: acceptance [--cli PATH_TO_SUBSNAKE]
#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "support.hpp"

using namespace subsnake;
using namespace subsnake::testing;

namespace {

int failures = 0;

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void basic_functions() {
  Clock clock;
  double err = 0.0;
  const BasicFunctionTable fp(Scheme::four_point(), 8);
  const long u = fp.samples_per_unit();
  for (long j = -3; j <= 3; ++j) err = std::max(err, std::abs(fp.phi(j * u) - (j == 0 ? 1.0 : 0.0)));
  err = std::max(err, std::abs(fp.phi(u / 2) - 9.0 / 16.0));
  err = std::max(err, std::abs(fp.phi(3 * u / 2) + 1.0 / 16.0));
  err = std::max(err, std::abs(fp.phi(-u / 2) - 9.0 / 16.0));

  const BasicFunctionTable bs(Scheme::cubic_bspline(), 8);
  err = std::max(err, std::abs(bs.phi(0) - 2.0 / 3.0));
  err = std::max(err, std::abs(bs.phi(u) - 1.0 / 6.0));
  err = std::max(err, std::abs(bs.phi(-u) - 1.0 / 6.0));
  for (long n = -2 * u; n <= 2 * u; ++n) {
    err = std::max(err, std::abs(bs.phi(n) - bspline_phi(static_cast<double>(n) / u)));
  }

  double unity = 0.0;
  for (const auto& scheme : {Scheme::four_point(), Scheme::cubic_bspline()}) {
    for (int k = 1; k <= 8; ++k) {
      const BasicFunctionTable t(scheme, k);
      const long per = t.samples_per_unit();
      for (long n = 0; n < per; ++n) {
        double sum = 0.0;
        for (long j = -4; j <= 4; ++j) sum += t.phi(n - j * per);
        unity = std::max(unity, std::abs(sum - 1.0));
      }
    }
  }
  report("basic-functions", err <= 1e-12 && unity <= 1e-12,
         fmt("max value error %.2e, partition of unity error %.2e (tol 1e-12), %.3f s", err, unity,
             clock.seconds()));
}

void interpolation() {
  Clock clock;
  double matrix_err = 0.0;
  double residual = 0.0;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(0.0, 200.0);
  for (int m = 3; m <= 32; ++m) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      s(i, i) = 2.0 / 3.0;
      s(i, (i + 1) % m) += 1.0 / 6.0;
      s(i, (i + m - 1) % m) += 1.0 / 6.0;
    }
    const Eigen::MatrixXd inv = s.inverse();
    const auto c = interpolation_column(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        matrix_err = std::max(matrix_err, std::abs(c[static_cast<std::size_t>((a - b + m) % m)] - inv(a, b)));
      }
    }
    ControlPolygon targets;
    targets.scheme = Scheme::cubic_bspline();
    for (int i = 0; i < m; ++i) targets.points.push_back({coord(rng), coord(rng)});
    const auto control = interpolation_operator(targets);
    const auto table = basic_table(control.scheme, 4);
    const auto curve = evaluate_curve(control, *table);
    const auto per = static_cast<std::size_t>(table->samples_per_unit());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      residual = std::max(residual, std::hypot(curve.points[i * per].x - targets.points[i].x,
                                               curve.points[i * per].y - targets.points[i].y));
    }
  }
  const double t = clock.seconds();
  report("interpolation-operator", matrix_err <= 1e-10 && residual <= 1e-9 && t < 1.0,
         fmt("M=3..32: matrix error %.2e (tol 1e-10), target residual %.2e (tol 1e-9), %.3f s", matrix_err,
             residual, t));
}

void region_integrals_check() {
  Clock clock;
  const auto disc = circle({128, 128}, 50, 12, Scheme::four_point());
  const auto sample = evaluate_curve(disc, *basic_table(disc.scheme, 5));
  const auto raster = rasterize_snake(sample.points, 256, 256);
  const RowPrefixTable ones(make_image(256, 256, [](double, double) { return 1.0; }));
  const double area = region_integrals(raster, ones).area;
  const double exact = std::numbers::pi * 2500.0;
  const double rel = std::abs(area - exact) / exact;
  const double oracle = static_cast<double>(fill_oracle(sample.points, 256, 256).count());
  const double bound = 1.5 * static_cast<double>(sample.size());

  bool exact_c = true;
  for (double c : {0.0, 1.0, 7.0, 128.0, 255.0}) {
    const RowPrefixTable cp(make_image(256, 256, [c](double, double) { return c; }));
    const auto ri = region_integrals(raster, cp);
    exact_c = exact_c && ri.intensity == c * ri.area;
  }
  const double t = clock.seconds();
  report("region-integrals",
         rel <= 0.02 && std::abs(area - oracle) <= bound && exact_c && t < 1.0,
         fmt("area %.0f vs pi*2500 (rel %.4f, tol 0.02), |area - oracle %.0f| = %.0f (bound %.0f), "
             "constant-image exact %s, %.3f s",
             area, rel, oracle, std::abs(area - oracle), bound, exact_c ? "yes" : "no", t));
}

void gradient_checks() {
  Clock clock;
  const auto blob = make_image(128, 128, [](double r, double c) {
    const double d2 = (r - 63.7) * (r - 63.7) + (c - 64.7) * (c - 64.7);
    return 200.0 - 150.0 * std::exp(-d2 / (2.0 * 60.0 * 60.0));
  });
  const auto blob_caches = ImageCaches::build(blob, Polarity::DarkObject, 1);
  const auto disc = gaussian_blur(
      make_image(128, 128, [](double r, double c) { return std::hypot(r - 64, c - 64) <= 35 ? 30.0 : 220.0; }),
      2.5);
  const auto disc_caches = ImageCaches::build(disc, Polarity::DarkObject, 1);
  const auto box = full_image_box(disc_caches.prefix);

  double worst = 0.0;
  double worst_cos = 1.0;
  for (const auto& s : {Scheme::four_point(), Scheme::cubic_bspline()}) {
    const auto table = basic_table(s, 4);
    auto p = counterclockwise(circle({66.1, 62.7}, 35, 8, s));
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.points[i].x += 3.0 * std::sin(1.7 * static_cast<double>(i));
      p.points[i].y += 2.0 * std::cos(2.3 * static_cast<double>(i));
    }
    const auto g = gradient_energy_grad(p, evaluate_curve(p, *table), *table, blob_caches.fields);
    const double h = 1e-3;
    for (std::size_t k = 0; k < g.size(); ++k) {
      auto pp = p, pm = p;
      bump(pp, k, h);
      bump(pm, k, -h);
      const double fd = (gradient_energy(evaluate_curve(pp, *table), blob_caches.fields) -
                         gradient_energy(evaluate_curve(pm, *table), blob_caches.fields)) /
                        (2 * h);
      if (std::abs(fd) > 1e-6) worst = std::max(worst, std::abs(g[k] - fd) / std::abs(fd));
    }

    auto q = counterclockwise(circle({64.3, 63.2}, 44, 8, s));
    if (s.kind() == SchemeKind::CubicBSpline) q = interpolation_operator(q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      q.points[i].x += 3.0 * std::sin(1.7 * static_cast<double>(i));
      q.points[i].y += 2.0 * std::cos(2.3 * static_cast<double>(i));
    }
    const auto sample = evaluate_curve(q, *table);
    const auto terms = region_terms(region_integrals(rasterize_snake(sample.points, 128, 128), disc_caches.prefix), box);
    const auto rg = region_energy_grad(q, sample, *table, disc_caches.image, terms);
    std::vector<double> fd(rg.size());
    const double step = 0.5;
    for (std::size_t k = 0; k < rg.size(); ++k) {
      auto pp = q, pm = q;
      bump(pp, k, step);
      bump(pm, k, -step);
      fd[k] = (region_energy(evaluate_curve(pp, *table), box, disc_caches.prefix) -
               region_energy(evaluate_curve(pm, *table), box, disc_caches.prefix)) /
              (2 * step);
    }
    worst_cos = std::min(worst_cos, cosine(rg, fd));
  }
  report("gradient-checks", worst < 1e-2 && worst_cos > 0.9,
         fmt("gradient energy worst relative error %.4f (tol 1e-2), region gradient min cosine %.4f "
             "(tol 0.9), both schemes, %.3f s",
             worst, worst_cos, clock.seconds()));
}

struct CaseResult {
  double init_j;
  double final_j;
  double seconds;
};

CaseResult run_case(const SyntheticImage& synth, const ControlPolygon& init) {
  const auto caches = caches_for(synth.image);
  const auto params = full_box_params(*caches);
  const double init_j =
      *summarize(init, {}, {}, params.depth, synth.image.rows(), synth.image.cols(), &synth.truth).jaccard;
  Clock clock;
  const auto r = segment(init, params, OptimizerConfig{}, caches, &synth.truth);
  return {init_j, *r.jaccard, clock.seconds()};
}

void end_to_end() {
  SynthSpec disc;
  disc.shape.kind = ShapeSpec::Kind::Disc;
  disc.shape.center = {128, 128};
  disc.shape.radius = 50;
  SynthSpec blob;
  blob.shape.kind = ShapeSpec::Kind::Curve;
  blob.shape.polygon = lobed_blob(0.15);
  const SyntheticImage disc_img = generate_synthetic(disc);
  const SyntheticImage blob_img = generate_synthetic(blob);

  bool ok = true;
  std::ostringstream detail;
  for (const auto& s : {Scheme::four_point(), Scheme::cubic_bspline()}) {
    const auto d = run_case(disc_img, prepare_initial(circle_polygon({128, 128}, 67.5, 8, s), true));
    const auto b = run_case(blob_img, prepare_initial(circle_polygon({128, 128}, 80, 12, s), true));
    for (const auto& [name, r] : {std::pair{"disc", d}, std::pair{"blob", b}}) {
      const bool pass = r.init_j >= 0.35 && r.init_j <= 0.5 && r.final_j < 0.05 && r.seconds < 30.0;
      ok = ok && pass;
      detail << fmt("%s/%s J %.3f -> %.4f (%.2f s)%s; ", s.name().c_str(), name, r.init_j, r.final_j, r.seconds,
                    pass ? "" : " FAIL");
    }
  }
  report("end-to-end", ok, detail.str() + "tol: init J in [0.35, 0.5], final J < 0.05, < 30 s per case");
}

void control_point_trend() {
  Clock clock;
  SynthSpec spec;
  spec.shape.kind = ShapeSpec::Kind::Curve;
  spec.shape.polygon = lobed_blob(0.15);
  const auto synth = generate_synthetic(spec);
  const auto caches = caches_for(synth.image);
  const auto params = full_box_params(*caches);
  const std::size_t ms[3] = {8, 10, 12};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& scheme : {Scheme::cubic_bspline(), Scheme::four_point()}) {
    std::vector<double> js[3];
    int inversions = 0;
    for (unsigned seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const Point center{128 + 6 * u(rng), 128 + 6 * u(rng)};
      const double radius = 90 * (1 + 0.1 * u(rng));
      const double phase = std::numbers::pi * u(rng);
      double j[3];
      for (int k = 0; k < 3; ++k) {
        const auto init = prepare_initial(circle(center, radius, ms[k], scheme, phase), true);
        try {
          j[k] = *segment(init, params, OptimizerConfig{}, caches, &synth.truth).jaccard;
        } catch (const DegenerateRegion&) {
          j[k] = 1.0;
        }
        js[k].push_back(j[k]);
      }
      inversions += (j[1] > j[0]) + (j[2] > j[1]);
    }
    double med[3];
    for (int k = 0; k < 3; ++k) {
      std::sort(js[k].begin(), js[k].end());
      med[k] = 0.5 * (js[k][9] + js[k][10]);
    }
    const bool pass = med[2] < med[1] && med[1] < med[0] && inversions <= 1;
    ok = ok && pass;
    detail << fmt("%s median J M=12 %.4f < M=10 %.4f < M=8 %.4f, inversions %d%s; ", scheme.name().c_str(), med[2],
                  med[1], med[0], inversions, pass ? "" : " FAIL");
  }
  report("control-point-trend", ok,
         detail.str() + fmt("20 seeds, allowed 1 inversion, %.2f s",
                            clock.seconds()));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(const std::string& cli) {
  SynthSpec spec;
  spec.shape.kind = ShapeSpec::Kind::Curve;
  spec.shape.polygon = lobed_blob(0.15);
  const auto synth = generate_synthetic(spec);
  const auto caches = caches_for(synth.image);
  const auto init = prepare_initial(circle_polygon({128, 128}, 80, 10, Scheme::cubic_bspline()), true);
  const auto a = segment(init, full_box_params(*caches), OptimizerConfig{}, caches, nullptr);
  const auto b = segment(init, full_box_params(*caches), OptimizerConfig{}, caches, nullptr);
  bool ok = a.trace.to_jsonl() == b.trace.to_jsonl() &&
            polygon_to_json(a.polygon).dump() == polygon_to_json(b.polygon).dump();
  std::string detail = std::string("in-process ") + (ok ? "identical" : "differ");

  if (!cli.empty()) {
    const auto work = std::filesystem::temp_directory_path() / ("subsnake_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(work);
    const std::string img = (work / "disc.png").string();
    const std::string q = "\"" + cli + "\"";
    int rc = std::system((q + " synth --shape disc --rows 256 --cols 256 --center 128,128 --radius 50 --image \"" +
                          img + "\" --mask \"" + (work / "truth.png").string() + "\" > /dev/null")
                             .c_str());
    bool same = rc == 0;
    for (const char* run : {"run1", "run2"}) {
      rc = std::system((q + " segment --image \"" + img + "\" --init-circle 128,128,70,8 --scheme cubic-bspline --out \"" +
                        (work / run).string() + "\" > /dev/null")
                           .c_str());
      same = same && rc == 0;
    }
    for (const char* f : {"trace.jsonl", "polygon.json"}) {
      const auto x = slurp(work / "run1" / f);
      same = same && !x.empty() && x == slurp(work / "run2" / f);
    }
    std::filesystem::remove_all(work);
    ok = ok && same;
    detail += std::string(", CLI segment twice ") + (same ? "byte-identical trace.jsonl and polygon.json" : "differ");
  }
  report("determinism", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
  }
  basic_functions();
  interpolation();
  region_integrals_check();
  gradient_checks();
  end_to_end();
  control_point_trend();
  determinism(cli);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
