#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "support.hpp"

using namespace subsnake;
using namespace subsnake::testing;

namespace {

struct DiscCase {
  SyntheticImage synth;
  std::shared_ptr<const ImageCaches> caches;
  EnergyParams params;
};

DiscCase disc_case(double radius = 50.0) {
  SynthSpec spec;
  spec.shape.kind = ShapeSpec::Kind::Disc;
  spec.shape.center = {128, 128};
  spec.shape.radius = radius;
  DiscCase d{generate_synthetic(spec), nullptr, {}};
  d.caches = caches_for(d.synth.image);
  d.params = full_box_params(*d.caches);
  return d;
}

ControlPolygon start_circle(const Scheme& scheme, double radius = 67.5, std::size_t m = 8) {
  return prepare_initial(circle_polygon({128, 128}, radius, m, scheme), true);
}

}  // namespace

TEST(AlphaMode, Parse) {
  EXPECT_EQ(AlphaMode::parse("two-phase").kind, AlphaMode::Kind::TwoPhase);
  const auto f = AlphaMode::parse("fixed:0.25");
  EXPECT_EQ(f.kind, AlphaMode::Kind::Fixed);
  EXPECT_EQ(f.fixed, 0.25);
  EXPECT_EQ(AlphaMode::parse(f.to_string()).fixed, 0.25);
  EXPECT_EQ(AlphaMode::parse("fixed:0").fixed, 0.0);
  EXPECT_EQ(AlphaMode::parse("fixed:1").fixed, 1.0);
  for (const char* bad : {"", "fixed", "fixed:", "fixed:1.5", "fixed:-0.1", "fixed:abc", "three-phase"}) {
    EXPECT_THROW(AlphaMode::parse(bad), InvalidInput) << bad;
  }
}

TEST(OptimizerConfig, Validate) {
  EXPECT_NO_THROW(OptimizerConfig{}.validate());
  OptimizerConfig c;
  c.max_iters = -1;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.memory = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.grad_tol = -1;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.alpha_mode = AlphaMode::fixed_alpha(2.0);
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Optimizer, ConvergesOnDisc) {
  const auto d = disc_case();
  for (const auto& s : {Scheme::four_point(), Scheme::cubic_bspline()}) {
    const auto r = segment(start_circle(s), d.params, OptimizerConfig{}, d.caches, &d.synth.truth);
    EXPECT_EQ(r.trace.status, OptimizerStatus::Converged) << s.name();
    ASSERT_TRUE(r.jaccard);
    EXPECT_LT(*r.jaccard, 0.05) << s.name();
  }
}

TEST(Optimizer, StepEventsStrictlyDecreaseWithinAPhase) {
  const auto d = disc_case();
  for (const auto& s : {Scheme::four_point(), Scheme::cubic_bspline()}) {
    const auto [poly, trace] = minimize(start_circle(s, 72), d.params, OptimizerConfig{}, d.caches);
    ASSERT_GE(trace.records.size(), 3u);
    EXPECT_EQ(trace.records.front().event, "start");
    bool switched = false;
    for (std::size_t i = 1; i < trace.records.size(); ++i) {
      const auto& r = trace.records[i];
      const auto& prev = trace.records[i - 1];
      const bool user_event = r.event == "edit" || r.event == "alpha";
      EXPECT_EQ(r.iter, prev.iter + (user_event ? 0 : 1));
      if (r.event == "step") {
        EXPECT_LT(r.energy, prev.energy) << s.name() << " iter " << r.iter;
        EXPECT_GT(r.displacement, 0.0);
        EXPECT_EQ(r.alpha, prev.alpha);
      }
      if (r.event == "phase-switch") {
        switched = true;
        EXPECT_EQ(r.memory, 0);
        EXPECT_NE(r.alpha, prev.alpha);
      }
    }
    EXPECT_TRUE(switched) << s.name();
  }
}

TEST(Optimizer, Deterministic) {
  const auto d = disc_case();
  const auto a = minimize(start_circle(Scheme::four_point()), d.params, OptimizerConfig{}, d.caches);
  const auto b = minimize(start_circle(Scheme::four_point()), d.params, OptimizerConfig{}, d.caches);
  EXPECT_EQ(a.second.to_jsonl(), b.second.to_jsonl());
  EXPECT_EQ(polygon_to_json(a.first).dump(), polygon_to_json(b.first).dump());
}

TEST(Optimizer, IncrementalStepsMatchBatch) {
  const auto d = disc_case();
  for (int n : {1, 3, 7}) {
    OptimizerConfig cfg;
    cfg.max_iters = n;
    const auto batch = minimize(start_circle(Scheme::cubic_bspline()), d.params, cfg, d.caches);

    Optimizer opt(start_circle(Scheme::cubic_bspline()), d.params, OptimizerConfig{}, d.caches);
    while (opt.iteration() < n && !opt.done()) opt.step();
    EXPECT_EQ(polygon_to_json(opt.polygon()).dump(), polygon_to_json(batch.first).dump()) << n;
    auto a = batch.second.records;
    auto b = opt.trace().records;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
  }
}

TEST(Optimizer, ConstantImageIsStationary) {
  const auto caches = caches_for(make_image(96, 96, [](double, double) { return 128.0; }));
  OptimizerConfig cfg;
  cfg.alpha_mode = AlphaMode::fixed_alpha(1.0);
  const auto init = counterclockwise(circle({48, 48}, 20, 8, Scheme::four_point()));
  Optimizer opt(init, full_box_params(*caches), cfg, caches);
  opt.run();
  EXPECT_EQ(opt.status(), OptimizerStatus::Converged);
  EXPECT_EQ(opt.iteration(), 1);
  EXPECT_EQ(opt.trace().records.back().event, "stationary");
  EXPECT_EQ(polygon_to_json(opt.polygon()).dump(), polygon_to_json(init).dump());

  const auto records = opt.trace().records.size();
  opt.step();
  EXPECT_EQ(opt.trace().records.size(), records);
  EXPECT_EQ(opt.status(), OptimizerStatus::Converged);
}

TEST(Optimizer, MaxItersStops) {
  const auto d = disc_case();
  OptimizerConfig cfg;
  cfg.max_iters = 2;
  Optimizer opt(start_circle(Scheme::four_point()), d.params, cfg, d.caches);
  opt.run();
  EXPECT_EQ(opt.status(), OptimizerStatus::MaxIters);
  EXPECT_EQ(opt.iteration(), 2);
}

TEST(Optimizer, EditsResetMemoryAndResume) {
  const auto d = disc_case();
  Optimizer opt(start_circle(Scheme::four_point()), d.params, OptimizerConfig{}, d.caches);
  for (int i = 0; i < 4; ++i) opt.step();
  ASSERT_GT(opt.memory_size(), 0u);

  opt.move_point(2, opt.polygon().points[2] + Point{6, -4});
  EXPECT_EQ(opt.memory_size(), 0u);
  EXPECT_EQ(opt.trace().records.back().event, "edit");
  EXPECT_EQ(opt.trace().records.back().memory, 0);
  EXPECT_EQ(opt.status(), OptimizerStatus::Running);

  const auto before = opt.polygon();
  EXPECT_THROW(opt.move_point(99, {0, 0}), InvalidInput);
  EXPECT_THROW(opt.move_point(0, {NAN, 1}), InvalidInput);
  EXPECT_EQ(polygon_to_json(opt.polygon()).dump(), polygon_to_json(before).dump());

  opt.set_alpha_mode(AlphaMode::fixed_alpha(0.3));
  EXPECT_EQ(opt.alpha(), 0.3);
  EXPECT_EQ(opt.trace().records.back().event, "alpha");
  EXPECT_THROW(opt.set_alpha_mode(AlphaMode::fixed_alpha(-1)), InvalidInput);

  opt.run();
  EXPECT_EQ(opt.status(), OptimizerStatus::Converged);
  const auto r = summarize(opt.polygon(), opt.trace(), opt.current(), d.params.depth, 256, 256, &d.synth.truth);
  EXPECT_LT(*r.jaccard, 0.05);
}

TEST(Optimizer, DegenerateEditIsRejected) {
  const auto d = disc_case();
  const auto init = counterclockwise(circle({128, 128}, 3, 4, Scheme::four_point()));
  Optimizer opt(init, d.params, OptimizerConfig{}, d.caches);
  const auto records = opt.trace().records.size();
  EXPECT_THROW(opt.move_point(0, init.points[2]), DegenerateRegion);
  EXPECT_EQ(polygon_to_json(opt.polygon()).dump(), polygon_to_json(init).dump());
  EXPECT_EQ(opt.trace().records.size(), records);
}

TEST(Optimizer, DegenerateStartThrows) {
  const auto d = disc_case();
  auto tiny = circle({128, 128}, 0.5, 8, Scheme::four_point());
  EXPECT_THROW(Optimizer(tiny, d.params, OptimizerConfig{}, d.caches), DegenerateRegion);
  auto clockwise = circle({128, 128}, 40, 8, Scheme::four_point());
  std::reverse(clockwise.points.begin(), clockwise.points.end());
  EXPECT_THROW(Optimizer(clockwise, d.params, OptimizerConfig{}, d.caches), DegenerateRegion);
}

TEST(Trace, JsonlKeys) {
  const auto d = disc_case();
  OptimizerConfig cfg;
  cfg.max_iters = 2;
  const auto trace = minimize(start_circle(Scheme::four_point()), d.params, cfg, d.caches).second;
  std::istringstream in(trace.to_jsonl());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"iter", "event", "alpha", "E_grad", "E_reg", "E_total", "grad_norm",
                            "displacement", "memory", "evaluations"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    ++n;
  }
  EXPECT_EQ(n, trace.records.size());
  EXPECT_EQ(to_string(trace.status), "max-iters");
}
