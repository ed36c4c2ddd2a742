#include "subsnake/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace subsnake {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kMaxEvaluations = 20;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double max_displacement(const ControlPolygon& a, const ControlPolygon& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, distance(a.points[i], b.points[i]));
  return m;
}

// Minimizer of the cubic matching values and slopes at a and b, or the
// midpoint when the fit is unusable.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double mid = 0.5 * (a + b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return mid;
  const double x = b - (b - a) * (db + d2 - d1) / denom;
  return std::isfinite(x) ? x : mid;
}

}  // namespace

AlphaMode AlphaMode::two_phase(double first, double second) {
  AlphaMode mode;
  mode.kind = Kind::TwoPhase;
  mode.first = first;
  mode.second = second;
  return mode;
}

AlphaMode AlphaMode::fixed_alpha(double alpha) {
  AlphaMode mode;
  mode.kind = Kind::Fixed;
  mode.fixed = alpha;
  return mode;
}

AlphaMode AlphaMode::parse(const std::string& text) {
  if (text == "two-phase") return two_phase();
  const std::string prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - prefix.size() || !(value >= 0.0 && value <= 1.0)) {
      throw InvalidInput("alpha must be 'two-phase' or 'fixed:<value in [0,1]>', got '" + text + "'");
    }
    return fixed_alpha(value);
  }
  throw InvalidInput("alpha must be 'two-phase' or 'fixed:<value in [0,1]>', got '" + text + "'");
}

std::string AlphaMode::to_string() const {
  if (kind == Kind::TwoPhase) return "two-phase";
  std::ostringstream out;
  out << "fixed:" << fixed;
  return out.str();
}

void OptimizerConfig::validate() const {
  auto in_unit = [](double a) { return a >= 0.0 && a <= 1.0; };
  if (alpha_mode.kind == AlphaMode::Kind::TwoPhase
          ? !(in_unit(alpha_mode.first) && in_unit(alpha_mode.second))
          : !in_unit(alpha_mode.fixed)) {
    throw InvalidInput("alpha values must lie in [0, 1]");
  }
  if (max_iters < 0) throw InvalidInput("max_iters must be >= 0");
  if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw InvalidInput("tolerances must be > 0");
  if (stabilization_window < 1) throw InvalidInput("stabilization_window must be >= 1");
  if (memory < 1) throw InvalidInput("memory must be >= 1");
  if (!(max_step > 0.0) || !(initial_step > 0.0)) throw InvalidInput("step sizes must be > 0");
}

std::string to_string(OptimizerStatus status) {
  switch (status) {
    case OptimizerStatus::Running: return "running";
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::MaxIters: return "max-iters";
    case OptimizerStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

nlohmann::json to_json(const TraceRecord& r) {
  return {{"iter", r.iter},
          {"event", r.event},
          {"alpha", r.alpha},
          {"E_grad", r.gradient_energy},
          {"E_reg", r.region_energy},
          {"E_total", r.energy},
          {"grad_norm", r.grad_norm},
          {"displacement", r.displacement},
          {"memory", r.memory},
          {"evaluations", r.evaluations}};
}

std::string OptimizationTrace::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

Optimizer::Optimizer(ControlPolygon initial, EnergyParams params, OptimizerConfig config,
                     std::shared_ptr<const ImageCaches> caches)
    : polygon_(std::move(initial)),
      params_(params),
      config_(std::move(config)),
      caches_(std::move(caches)) {
  config_.validate();
  polygon_.validate();
  params_.alpha = config_.alpha_mode.kind == AlphaMode::Kind::TwoPhase ? config_.alpha_mode.first
                                                                       : config_.alpha_mode.fixed;
  current_ = total_energy(polygon_, params_, *caches_);
  record("start", 0.0, 1);
  if (iter_ >= config_.max_iters) status_ = OptimizerStatus::MaxIters;
}

void Optimizer::record(const std::string& event, double displacement, int evaluations) {
  TraceRecord r;
  r.iter = iter_;
  r.event = event;
  r.alpha = params_.alpha;
  r.gradient_energy = current_.gradient_term;
  r.region_energy = current_.region_term;
  r.energy = current_.value;
  r.grad_norm = norm(current_.grad);
  r.displacement = displacement;
  r.memory = static_cast<int>(pairs_.size());
  r.evaluations = evaluations;
  trace_.records.push_back(r);
  trace_.status = status_;
}

void Optimizer::start_phase(double alpha, const std::string& event) {
  params_.alpha = alpha;
  pairs_.clear();
  stable_count_ = 0;
  current_ = total_energy(polygon_, params_, *caches_);
  record(event, 0.0, 1);
}

void Optimizer::on_stationary() {
  stable_count_ = 0;
  if (config_.alpha_mode.kind == AlphaMode::Kind::TwoPhase && phase_ == 1) {
    switch_pending_ = true;
  } else {
    status_ = OptimizerStatus::Converged;
  }
}

Optimizer::Trial Optimizer::evaluate_at(const std::vector<double>& direction, double step) const {
  Trial t;
  t.step = step;
  t.polygon = polygon_;
  for (std::size_t i = 0; i < polygon_.size(); ++i) {
    t.polygon.points[i].x += step * direction[2 * i];
    t.polygon.points[i].y += step * direction[2 * i + 1];
  }
  try {
    t.eval = total_energy(t.polygon, params_, *caches_);
    t.value = t.eval.value;
    t.slope = dot(t.eval.grad, direction);
    t.finite = std::isfinite(t.value) && std::isfinite(t.slope);
  } catch (const DegenerateRegion&) {
    t.finite = false;
  }
  if (!t.finite) {
    t.value = std::numeric_limits<double>::infinity();
    t.slope = 0.0;
  }
  return t;
}

// Line search for the strong Wolfe conditions: bracketing by step doubling,
// then cubic interpolation inside the bracket. Degenerate trials count as
// infinitely high. If the curvature condition cannot be met within the
// evaluation budget, the lowest point with sufficient decrease is taken.
Optimizer::SearchResult Optimizer::line_search(const std::vector<double>& direction,
                                               double initial) const {
  SearchResult result;
  result.all_degenerate = true;

  const double f0 = current_.value;
  const double slope0 = dot(current_.grad, direction);
  const double max_step = config_.max_step / std::max(max_abs(direction), 1e-300);

  Trial origin;
  origin.step = 0.0;
  origin.value = f0;
  origin.slope = slope0;
  origin.finite = true;

  auto sufficient = [&](const Trial& t) {
    return t.finite && t.value <= f0 + kArmijo * t.step * slope0 && t.value < f0;
  };
  auto curvature_ok = [&](const Trial& t) { return std::abs(t.slope) <= -kCurvature * slope0; };
  auto evaluate = [&](double step) {
    Trial t = evaluate_at(direction, step);
    ++result.evaluations;
    if (t.finite) result.all_degenerate = false;
    return t;
  };
  auto accept = [&](Trial t) {
    result.accepted = true;
    result.trial = std::move(t);
    return result;
  };

  Trial lo = origin;
  Trial hi;
  bool bracketed = false;

  Trial prev = origin;
  double step = std::min(initial, max_step);
  while (result.evaluations < kMaxEvaluations) {
    Trial t = evaluate(step);
    if (!sufficient(t) || (prev.step > 0.0 && t.value >= prev.value)) {
      lo = prev;
      hi = std::move(t);
      bracketed = true;
      break;
    }
    if (curvature_ok(t)) return accept(std::move(t));
    if (t.slope >= 0.0) {
      hi = prev;
      lo = std::move(t);
      bracketed = true;
      break;
    }
    if (step >= max_step) return accept(std::move(t));
    prev = std::move(t);
    step = std::min(2.0 * step, max_step);
  }
  if (!bracketed) {
    if (prev.step > 0.0) return accept(std::move(prev));
    return result;
  }

  while (result.evaluations < kMaxEvaluations) {
    const double a = std::min(lo.step, hi.step);
    const double b = std::max(lo.step, hi.step);
    const double width = b - a;
    if (width <= 1e-12 * std::max(1.0, b)) break;
    double trial_step = (lo.finite && hi.finite)
                            ? cubic_minimizer(lo.step, lo.value, lo.slope, hi.step, hi.value,
                                              hi.slope)
                            : 0.5 * (lo.step + hi.step);
    trial_step = std::clamp(trial_step, a + 0.1 * width, b - 0.1 * width);

    Trial t = evaluate(trial_step);
    if (!sufficient(t) || t.value >= lo.value) {
      hi = std::move(t);
      continue;
    }
    if (curvature_ok(t)) return accept(std::move(t));
    if (t.slope * (hi.step - lo.step) >= 0.0) hi = lo;
    lo = std::move(t);
  }
  if (lo.step > 0.0) return accept(std::move(lo));
  return result;
}

std::vector<double> Optimizer::search_direction() const {
  std::vector<double> q = current_.grad;
  std::vector<double> coef(pairs_.size());
  for (std::size_t k = pairs_.size(); k-- > 0;) {
    coef[k] = pairs_[k].rho * dot(pairs_[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= coef[k] * pairs_[k].y[i];
  }
  if (!pairs_.empty()) {
    const auto& last = pairs_.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const double beta = pairs_[k].rho * dot(pairs_[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (coef[k] - beta) * pairs_[k].s[i];
  }
  for (double& v : q) v = -v;
  return q;
}

void Optimizer::step() {
  if (done()) return;
  ++iter_;

  if (switch_pending_) {
    switch_pending_ = false;
    phase_ = 2;
    start_phase(config_.alpha_mode.second, "phase-switch");
  } else if (norm(current_.grad) < config_.grad_tol) {
    on_stationary();
    record("stationary", 0.0, 0);
  } else {
    std::vector<double> direction = search_direction();
    if (!pairs_.empty() && dot(direction, current_.grad) >= 0.0) {
      pairs_.clear();
      direction = search_direction();
    }
    const auto initial_step = [&](const std::vector<double>& d) {
      return pairs_.empty() ? config_.initial_step / std::max(max_abs(d), 1e-300) : 1.0;
    };

    SearchResult search = line_search(direction, initial_step(direction));
    int evaluations = search.evaluations;
    if (!search.accepted && !pairs_.empty()) {
      pairs_.clear();
      direction = search_direction();
      search = line_search(direction, initial_step(direction));
      evaluations += search.evaluations;
    }

    if (!search.accepted) {
      if (search.all_degenerate) {
        status_ = OptimizerStatus::Degenerate;
      } else {
        on_stationary();
      }
      record("stall", 0.0, evaluations);
    } else {
      Trial& t = search.trial;
      std::vector<double> s(direction.size());
      std::vector<double> y(direction.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = t.step * direction[i];
        y[i] = t.eval.grad[i] - current_.grad[i];
      }
      const double sy = dot(s, y);
      if (sy > 1e-10 * norm(s) * norm(y)) {
        pairs_.push_back({std::move(s), std::move(y), 1.0 / sy});
        if (pairs_.size() > static_cast<std::size_t>(config_.memory)) pairs_.pop_front();
      }

      const double moved = max_displacement(polygon_, t.polygon);
      polygon_ = std::move(t.polygon);
      current_ = std::move(t.eval);
      stable_count_ = moved < config_.step_tol ? stable_count_ + 1 : 0;
      record("step", moved, evaluations);
      if (stable_count_ >= config_.stabilization_window) on_stationary();
    }
  }

  if (!done() && iter_ >= config_.max_iters) status_ = OptimizerStatus::MaxIters;
  trace_.status = status_;
}

void Optimizer::run() {
  while (!done()) step();
}

void Optimizer::move_point(std::size_t index, Point position) {
  if (index >= polygon_.size()) {
    throw InvalidInput("control point index " + std::to_string(index) + " out of range");
  }
  if (!std::isfinite(position.x) || !std::isfinite(position.y)) {
    throw InvalidInput("control point coordinates must be finite");
  }
  ControlPolygon edited = polygon_;
  edited.points[index] = position;
  EnergyEval eval = total_energy(edited, params_, *caches_);  // throws on degenerate edits

  polygon_ = std::move(edited);
  current_ = std::move(eval);
  pairs_.clear();
  stable_count_ = 0;
  if (status_ != OptimizerStatus::MaxIters) status_ = OptimizerStatus::Running;
  record("edit", 0.0, 1);
}

void Optimizer::set_alpha_mode(const AlphaMode& mode) {
  OptimizerConfig next = config_;
  next.alpha_mode = mode;
  next.validate();
  const double alpha = mode.kind == AlphaMode::Kind::TwoPhase ? mode.first : mode.fixed;
  EnergyParams trial = params_;
  trial.alpha = alpha;
  total_energy(polygon_, trial, *caches_);  // surface degeneracy before committing

  config_ = std::move(next);
  phase_ = 1;
  switch_pending_ = false;
  if (status_ != OptimizerStatus::MaxIters) status_ = OptimizerStatus::Running;
  start_phase(alpha, "alpha");
}

std::pair<ControlPolygon, OptimizationTrace> minimize(const ControlPolygon& initial,
                                                      const EnergyParams& params,
                                                      const OptimizerConfig& config,
                                                      std::shared_ptr<const ImageCaches> caches) {
  Optimizer opt(initial, params, config, std::move(caches));
  opt.run();
  return {opt.polygon(), opt.trace()};
}

}  // namespace subsnake
