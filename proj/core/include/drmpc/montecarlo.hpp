#pragma once

#include <vector>

#include "drmpc/episode.hpp"

namespace drmpc {

struct AggregateReport {
  Method method = Method::kTrueWithL1;
  int runs = 0;
  int failures = 0;
  int collisions = 0;
  int infeasible = 0;
  int divergences = 0;
  double p_fail_percent = 0.0;
  double j_mean = 0.0;  // over successful runs
  double j_std = 0.0;
  double min_clearance = 0.0;  // worst over all runs
  std::vector<RunMetrics> per_run;
};

// Runs `runs` episodes on distinct seeds (seed + run index), in parallel up
// to `threads` workers, and aggregates in run order so the report is
// independent of scheduling. threads <= 0 picks the hardware count.
AggregateReport monte_carlo(const ScenarioConfig& cfg, int runs, Method method, int threads = 0);

inline AggregateReport monte_carlo(const ScenarioConfig& cfg, int runs) {
  return monte_carlo(cfg, runs, cfg.method);
}

}  // namespace drmpc
