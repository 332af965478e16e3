#pragma once

#include <vector>

#include "drmpc/certificates.hpp"
#include "drmpc/scenario.hpp"

namespace drmpc {

enum class FailureCause { kNone, kCollision, kInfeasible, kDivergence };
const char* to_string(FailureCause cause);

struct RunMetrics {
  double j_track = 0.0;  // accumulated tracking cost at planner ticks
  bool failed = false;
  FailureCause cause = FailureCause::kNone;
  double failure_time = -1.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  int planner_solves = 0;
  int fallback_steps = 0;
  // Collision indicator sampled at each executed planner tick (stage audit).
  std::vector<char> collision_at_tick;
};

// One row per adaptation tick.
struct TickRecord {
  double t = 0.0;
  Eigen::VectorXd x;       // simulated state (true or nominal per method)
  Eigen::VectorXd x_plan;  // ZOH state reference from the planner
  Eigen::VectorXd u;       // applied input
  Eigen::VectorXd u_l1;    // adaptive component (zero for other methods)
  std::vector<double> clearances;             // lifted distance per obstacle
  std::vector<Eigen::Vector2d> obstacle_pos;  // realized positions
};

struct EpisodeResult {
  RunMetrics metrics;
  std::vector<TickRecord> log;  // empty unless keep_log
  // State snapshots at planner ticks (for ensemble diagnostics).
  std::vector<double> tick_times;
  std::vector<Eigen::VectorXd> tick_states;
};

// Executes one closed-loop episode: outer loop at the planning period
// (measure, sample obstacle predictions, solve, hold the first stage), inner
// loop at the adaptation period (measure, apply baseline + adaptive input,
// update predictor/adaptation/filter). Collisions are checked every inner
// tick against the realized obstacle positions.
EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed, Method method, bool keep_log = false);

inline EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed, bool keep_log = false) {
  return run_episode(cfg, seed, cfg.method, keep_log);
}

// Ensemble tube diagnostic: `members` independent closed-loop runs of the
// true system and of the nominal system (shared obstacle realization),
// compared per planner tick with the exact empirical Wasserstein distance
// against the configured rho_x.
TubeReport tube_diagnostic(const ScenarioConfig& cfg, int members);

}  // namespace drmpc
