#include "drmpc/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>

namespace drmpc {
namespace {

std::FILE* open_or_throw(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  return f;
}

}  // namespace

std::string resolve_output_dir(const std::string& flag_value, const std::string& fallback) {
  std::string dir = flag_value;
  if (dir.empty()) {
    const char* env = std::getenv("DRMPC_OUT_DIR");
    dir = env && *env ? env : fallback;
  }
  std::filesystem::create_directories(dir);
  return dir;
}

void write_trajectory_csv(const EpisodeResult& episode, const ScenarioConfig& cfg, const std::string& path) {
  std::FILE* f = open_or_throw(path);
  std::fprintf(f, "t,px,py,vx,vy,px_plan,py_plan,vx_plan,vy_plan,ux,uy,u_l1_x,u_l1_y");
  for (std::size_t o = 0; o < cfg.obstacles.size(); ++o)
    std::fprintf(f, ",clearance_%zu,obs%zu_x,obs%zu_y", o, o, o);
  std::fprintf(f, "\n");
  for (const auto& rec : episode.log) {
    std::fprintf(f, "%.17g", rec.t);
    for (int i = 0; i < rec.x.size(); ++i) std::fprintf(f, ",%.17g", rec.x(i));
    for (int i = 0; i < rec.x_plan.size(); ++i) std::fprintf(f, ",%.17g", rec.x_plan(i));
    for (int i = 0; i < rec.u.size(); ++i) std::fprintf(f, ",%.17g", rec.u(i));
    for (int i = 0; i < rec.u_l1.size(); ++i) std::fprintf(f, ",%.17g", rec.u_l1(i));
    for (std::size_t o = 0; o < rec.clearances.size(); ++o)
      std::fprintf(f, ",%.17g,%.17g,%.17g", rec.clearances[o], rec.obstacle_pos[o].x(), rec.obstacle_pos[o].y());
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

void write_runs_csv(const AggregateReport& report, const std::string& path) {
  std::FILE* f = open_or_throw(path);
  std::fprintf(f, "run,failed,cause,J_track,min_clearance,failure_time,fallback_steps\n");
  for (std::size_t r = 0; r < report.per_run.size(); ++r) {
    const RunMetrics& m = report.per_run[r];
    std::fprintf(f, "%zu,%d,%s,%.17g,%.17g,%.17g,%d\n", r, m.failed ? 1 : 0, to_string(m.cause), m.j_track,
                 m.min_clearance, m.failure_time, m.fallback_steps);
  }
  std::fclose(f);
}

void write_aggregate_csv(const std::vector<AggregateReport>& reports, const ScenarioConfig& cfg,
                         const std::string& path) {
  std::FILE* f = open_or_throw(path);
  std::fprintf(f, "reference,method,runs,J_track_mean,J_track_std,P_fail_percent,collisions,infeasible,"
                  "divergences,rho_y\n");
  for (const auto& rep : reports) {
    std::fprintf(f, "%s,%s,%d,%.17g,%.17g,%.17g,%d,%d,%d,%.17g\n", to_string(cfg.reference.kind),
                 to_string(rep.method), rep.runs, rep.j_mean, rep.j_std, rep.p_fail_percent, rep.collisions,
                 rep.infeasible, rep.divergences, cfg.mpc.rho_y);
  }
  std::fclose(f);
}

void write_episode_svg(const EpisodeResult& episode, const ScenarioConfig& cfg, const std::string& path) {
  // Bounds from reference and realized paths.
  double lo_x = -1, hi_x = 1, lo_y = -1, hi_y = 1;
  auto grow = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  };
  for (const auto& rec : episode.log) {
    grow(rec.x(0), rec.x(1));
    for (const auto& z : rec.obstacle_pos) grow(z.x(), z.y());
  }
  const double span_t = episode.log.empty() ? cfg.total_time : episode.log.back().t;
  for (double t = 0.0; t <= span_t; t += cfg.mpc.dt) {
    const ReferencePoint pt = reference_trajectory(cfg.reference, t);
    grow(pt.x(0), pt.x(1));
  }
  const double margin = 0.8;
  lo_x -= margin; lo_y -= margin; hi_x += margin; hi_y += margin;
  const double width = 640.0;
  const double scale = width / (hi_x - lo_x);
  const double height = (hi_y - lo_y) * scale;
  auto sx = [&](double x) { return (x - lo_x) * scale; };
  auto sy = [&](double y) { return height - (y - lo_y) * scale; };  // y up

  std::FILE* f = open_or_throw(path);
  std::fprintf(f, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"0 0 %.0f %.0f\">\n", width, height, width, height);
  std::fprintf(f, "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n");

  auto polyline = [&](auto&& coords, const char* color, double w, const char* dash) {
    std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"%.1f\"%s points=\"", color, w,
                 dash ? " stroke-dasharray=\"6 4\"" : "");
    coords();
    std::fprintf(f, "\"/>\n");
  };

  polyline([&] {
    for (double t = 0.0; t <= span_t; t += cfg.l1.Ts * 20) {
      const ReferencePoint pt = reference_trajectory(cfg.reference, t);
      std::fprintf(f, "%.2f,%.2f ", sx(pt.x(0)), sy(pt.x(1)));
    }
  }, "#888888", 1.5, "dash");

  if (!episode.log.empty()) {
    polyline([&] {
      for (const auto& rec : episode.log) std::fprintf(f, "%.2f,%.2f ", sx(rec.x(0)), sy(rec.x(1)));
    }, "#1f6fb2", 2.0, nullptr);
  }

  // Obstacle outlines at a handful of evenly spaced frames.
  const int frames = 5;
  for (int fr = 0; fr < frames && !episode.log.empty(); ++fr) {
    const std::size_t idx = fr * (episode.log.size() - 1) / std::max(1, frames - 1);
    const TickRecord& rec = episode.log[idx];
    const double opacity = 0.25 + 0.75 * fr / std::max(1, frames - 1);
    for (std::size_t o = 0; o < rec.obstacle_pos.size(); ++o) {
      const UnsafeShape& shape = cfg.obstacles[o].shape;
      if (shape.kind == UnsafeShape::Kind::kCircle) {
        std::fprintf(f, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"#c0392b\" fill-opacity=\"%.2f\"/>\n",
                     sx(rec.obstacle_pos[o].x()), sy(rec.obstacle_pos[o].y()), shape.radius * scale, 0.35 * opacity);
      } else {
        std::fprintf(f, "<polygon fill=\"#c0392b\" fill-opacity=\"%.2f\" points=\"", 0.35 * opacity);
        for (int r = 0; r < shape.vertices.rows(); ++r)
          std::fprintf(f, "%.2f,%.2f ", sx(shape.vertices(r, 0) + rec.obstacle_pos[o].x()),
                       sy(shape.vertices(r, 1) + rec.obstacle_pos[o].y()));
        std::fprintf(f, "\"/>\n");
      }
    }
  }
  std::fprintf(f, "</svg>\n");
  std::fclose(f);
}

}  // namespace drmpc
