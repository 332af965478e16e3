#pragma once

#include <string>

#include "drmpc/episode.hpp"
#include "drmpc/montecarlo.hpp"

namespace drmpc {

// Output directory resolution: explicit flag wins, then the DRMPC_OUT_DIR
// environment variable, then the fallback. Creates the directory.
std::string resolve_output_dir(const std::string& flag_value, const std::string& fallback = "out");

// Per-tick trajectory CSV: t, state, planner reference, inputs, clearances.
void write_trajectory_csv(const EpisodeResult& episode, const ScenarioConfig& cfg, const std::string& path);

// Per-run metrics CSV for a Monte Carlo batch.
void write_runs_csv(const AggregateReport& report, const std::string& path);

// One aggregate row (append-friendly summary table).
void write_aggregate_csv(const std::vector<AggregateReport>& reports, const ScenarioConfig& cfg,
                         const std::string& path);

// Data-only SVG: reference path, realized path, obstacle outlines at a few
// snapshot times.
void write_episode_svg(const EpisodeResult& episode, const ScenarioConfig& cfg, const std::string& path);

}  // namespace drmpc
