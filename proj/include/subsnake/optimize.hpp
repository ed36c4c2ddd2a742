#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "subsnake/energy.hpp"
#include "subsnake/subdivision.hpp"

namespace subsnake {

// Either a fixed blend weight, or a region-dominated first phase that hands
// over to a gradient-dominated second phase once the snake stabilizes.
struct AlphaMode {
  enum class Kind { TwoPhase, Fixed };

  Kind kind = Kind::TwoPhase;
  double first = 0.1;
  double second = 0.9;
  double fixed = 0.5;

  static AlphaMode two_phase(double first = 0.1, double second = 0.9);
  static AlphaMode fixed_alpha(double alpha);
  // "two-phase" or "fixed:<value>".
  static AlphaMode parse(const std::string& text);
  std::string to_string() const;
};

struct OptimizerConfig {
  AlphaMode alpha_mode = AlphaMode::two_phase();
  int max_iters = 200;
  double grad_tol = 1e-4;
  double step_tol = 1e-3;  // pixels
  int stabilization_window = 5;
  int memory = 10;
  double max_step = 10.0;     // largest control point move per line search, pixels
  double initial_step = 1.0;  // first trial move along steepest descent, pixels

  void validate() const;
};

enum class OptimizerStatus { Running, Converged, MaxIters, Degenerate };
std::string to_string(OptimizerStatus status);

struct TraceRecord {
  int iter = 0;
  std::string event;  // "start", "step", "phase-switch", "stall", "edit", "alpha"
  double alpha = 0.0;
  double gradient_energy = 0.0;
  double region_energy = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double displacement = 0.0;  // max control point move, pixels
  int memory = 0;             // stored curvature pairs after the event
  int evaluations = 0;        // energy evaluations spent by the event
};

nlohmann::json to_json(const TraceRecord& record);

struct OptimizationTrace {
  std::vector<TraceRecord> records;
  OptimizerStatus status = OptimizerStatus::Running;

  // One JSON object per line.
  std::string to_jsonl() const;
};

// Incremental limited-memory BFGS driver over the 2M control point
// coordinates. Each step() performs one accepted quasi-Newton step or one
// alpha phase transition, so a sequence of step() calls reproduces
// minimize() exactly.
class Optimizer {
 public:
  // Throws DegenerateRegion when the initial snake is degenerate.
  Optimizer(ControlPolygon initial, EnergyParams params, OptimizerConfig config,
            std::shared_ptr<const ImageCaches> caches);

  void step();
  void run();
  bool done() const { return status_ != OptimizerStatus::Running; }

  // External edits clear the curvature memory and resume optimization from
  // the edited polygon. A degenerate edit is rejected and rethrown.
  void move_point(std::size_t index, Point position);
  void set_alpha_mode(const AlphaMode& mode);

  const ControlPolygon& polygon() const { return polygon_; }
  const EnergyEval& current() const { return current_; }
  const EnergyParams& params() const { return params_; }
  const OptimizerConfig& config() const { return config_; }
  const OptimizationTrace& trace() const { return trace_; }
  OptimizerStatus status() const { return status_; }
  double alpha() const { return params_.alpha; }
  int iteration() const { return iter_; }
  int phase() const { return phase_; }
  std::size_t memory_size() const { return pairs_.size(); }
  const ImageCaches& caches() const { return *caches_; }

 private:
  struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
  };
  struct Trial {
    double step = 0.0;
    double value = 0.0;
    double slope = 0.0;
    bool finite = false;
    ControlPolygon polygon;
    EnergyEval eval;
  };
  struct SearchResult {
    bool accepted = false;
    bool all_degenerate = false;
    Trial trial;
    int evaluations = 0;
  };

  Trial evaluate_at(const std::vector<double>& direction, double step) const;
  SearchResult line_search(const std::vector<double>& direction, double initial) const;
  std::vector<double> search_direction() const;
  void start_phase(double alpha, const std::string& event);
  void record(const std::string& event, double displacement, int evaluations);
  void on_stationary();

  ControlPolygon polygon_;
  EnergyParams params_;
  OptimizerConfig config_;
  std::shared_ptr<const ImageCaches> caches_;

  EnergyEval current_;
  std::deque<CurvaturePair> pairs_;
  OptimizationTrace trace_;
  OptimizerStatus status_ = OptimizerStatus::Running;
  int iter_ = 0;
  int phase_ = 1;
  int stable_count_ = 0;
  bool switch_pending_ = false;
};

std::pair<ControlPolygon, OptimizationTrace> minimize(const ControlPolygon& initial,
                                                      const EnergyParams& params,
                                                      const OptimizerConfig& config,
                                                      std::shared_ptr<const ImageCaches> caches);

}  // namespace subsnake
