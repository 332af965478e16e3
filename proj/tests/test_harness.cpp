#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "drmpc/episode.hpp"
#include "drmpc/io.hpp"
#include "drmpc/montecarlo.hpp"

using namespace drmpc;

namespace {

// Small, fast scenario used throughout: short horizon, coarse inner rate.
std::string base_scenario_text() {
  return R"(
name = unit
system.preset = double_integrator_2d
system.noise_std = 0.0
uncertainty.preset = none
l1.omega_rad_per_s = 50
l1.Ts_seconds = 0.01
l1.lambda_s_per_s = 100
feedback.kp = 4.0
feedback.kd = 4.0
mpc.horizon = 6
mpc.beta = 0.05
mpc.samples = 8
mpc.rho_y = 0.04
mpc.dt_seconds = 0.1
reference.kind = circle
reference.amplitude = 1.5
reference.period_seconds = 8
run.T_seconds = 1.0
run.runs = 3
run.seed = 7
run.method = true_with_l1
)";
}

ScenarioConfig scenario_from_text(const std::string& text) {
  ConfigMap map = ConfigMap::from_string(text);
  return ScenarioConfig::from_map(map);
}

}  // namespace

TEST_CASE("reference_trajectory: anchor points") {
  ReferenceSpec circle{ReferenceKind::kCircle, 1.0, 10.0, 0.0};
  const ReferencePoint c0 = reference_trajectory(circle, 0.0);
  const double w = 2.0 * std::numbers::pi / 10.0;
  CHECK(c0.x(0) == doctest::Approx(1.0));
  CHECK(c0.x(1) == doctest::Approx(0.0));
  CHECK(c0.x(2) == doctest::Approx(0.0));
  CHECK(c0.x(3) == doctest::Approx(w));

  ReferenceSpec fig8{ReferenceKind::kFigureEight, 2.0, 10.0, 0.0};
  const ReferencePoint f0 = reference_trajectory(fig8, 0.0);
  CHECK(f0.x.head(2).norm() == doctest::Approx(0.0));

  CHECK_THROWS_AS(parse_reference_kind("celtic_knot"), std::invalid_argument);
}

TEST_CASE("reference_trajectory: analytic derivatives match finite differences") {
  const double h = 1e-5;
  for (ReferenceKind kind :
       {ReferenceKind::kCircle, ReferenceKind::kFigureEight, ReferenceKind::kLissajous, ReferenceKind::kSpiral}) {
    ReferenceSpec spec{kind, 2.5, 7.0, 0.08};
    for (int i = 1; i < 1000; ++i) {
      const double t = 0.01 * i;
      const ReferencePoint mid = reference_trajectory(spec, t);
      const ReferencePoint lo = reference_trajectory(spec, t - h);
      const ReferencePoint hi = reference_trajectory(spec, t + h);
      const Eigen::Vector2d vel_fd = (hi.x.head<2>() - lo.x.head<2>()) / (2 * h);
      const Eigen::Vector2d acc_fd = (hi.x.tail<2>() - lo.x.tail<2>()) / (2 * h);
      REQUIRE((mid.x.tail<2>() - vel_fd).cwiseAbs().maxCoeff() < 1e-6);
      REQUIRE((mid.u - acc_fd).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("scenario parsing: defaults, overrides, obstacles") {
  std::string text = base_scenario_text();
  text += "obstacles.0.shape = circle\n"
          "obstacles.0.radius = 0.3\n"
          "obstacles.0.position = 1.0 2.0\n"
          "obstacles.0.velocity = -0.1 0.0\n"
          "obstacles.0.noise_std = 0.5\n"
          "obstacles.1.shape = polygon\n"
          "obstacles.1.vertices = -0.2 -0.2 0.2 -0.2 0.2 0.2 -0.2 0.2\n"
          "obstacles.1.position = -1.0 0.5\n";
  const ScenarioConfig cfg = scenario_from_text(text);
  CHECK(cfg.name == "unit");
  CHECK(cfg.mpc.horizon == 6);
  CHECK(cfg.obstacles.size() == 2);
  CHECK(cfg.obstacles[0].shape.kind == UnsafeShape::Kind::kCircle);
  CHECK(cfg.obstacles[1].shape.kind == UnsafeShape::Kind::kPolytope);
  CHECK(cfg.obstacles[1].shape.vertices.rows() == 4);
  CHECK(cfg.planner_steps() == 10);
  CHECK(cfg.inner_steps() == 10);
  CHECK(cfg.model.A_d(0, 2) == doctest::Approx(0.1));
  CHECK(cfg.l1.K_fb(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("scenario parsing: line-anchored errors") {
  // Unknown key reports its line.
  try {
    scenario_from_text(base_scenario_text() + "mpc.horzon = 12\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() > 0);
    CHECK(std::string(e.what()).find("mpc.horzon") != std::string::npos);
  }

  CHECK_THROWS_AS(scenario_from_text("name\n"), ConfigError);                      // missing '='
  CHECK_THROWS_AS(scenario_from_text("mpc.beta = fast\n"), ConfigError);           // bad number
  CHECK_THROWS_AS(scenario_from_text("run.method = warp\n"), ConfigError);         // bad enum
  CHECK_THROWS_AS(scenario_from_text("reference.kind = celtic_knot\n"), ConfigError);

  // Timing invariants.
  std::string bad_ts = base_scenario_text();
  bad_ts.replace(bad_ts.find("l1.Ts_seconds = 0.01"), std::string("l1.Ts_seconds = 0.01").size(),
                 "l1.Ts_seconds = 0.03");
  CHECK_THROWS_AS(scenario_from_text(bad_ts), ConfigError);

  std::string bad_T = base_scenario_text();
  bad_T.replace(bad_T.find("run.T_seconds = 1.0"), std::string("run.T_seconds = 1.0").size(),
                "run.T_seconds = 1.05");
  CHECK_THROWS_AS(scenario_from_text(bad_T), ConfigError);

  // Obstacle without a radius.
  CHECK_THROWS_AS(scenario_from_text(base_scenario_text() +
                                     "obstacles.0.shape = circle\nobstacles.0.position = 1 1\n"),
                  ConfigError);
}

TEST_CASE("run_episode: clean tracking run, bookkeeping, reproducibility") {
  const ScenarioConfig cfg = scenario_from_text(base_scenario_text());
  const EpisodeResult a = run_episode(cfg, cfg.seed, cfg.method, true);
  CHECK_FALSE(a.metrics.failed);
  CHECK(a.metrics.cause == FailureCause::kNone);
  CHECK(a.metrics.planner_solves == cfg.planner_steps());
  CHECK(static_cast<int>(a.log.size()) == cfg.planner_steps() * cfg.inner_steps());
  CHECK(static_cast<int>(a.tick_times.size()) == cfg.planner_steps());
  CHECK(a.metrics.min_clearance == std::numeric_limits<double>::infinity());  // no obstacles

  const EpisodeResult b = run_episode(cfg, cfg.seed, cfg.method, true);
  CHECK(a.metrics.j_track == b.metrics.j_track);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); i += 7) {
    CHECK(a.log[i].x == b.log[i].x);
    CHECK(a.log[i].u == b.log[i].u);
  }
}

TEST_CASE("run_episode: uncertainty-free adaptive run shadows the nominal method") {
  const ScenarioConfig cfg = scenario_from_text(base_scenario_text());
  const RunMetrics with_l1 = run_episode(cfg, 3, Method::kTrueWithL1, false).metrics;
  const RunMetrics nominal = run_episode(cfg, 3, Method::kNominal, false).metrics;
  REQUIRE_FALSE(with_l1.failed);
  REQUIRE_FALSE(nominal.failed);
  CHECK(with_l1.j_track == doctest::Approx(nominal.j_track).epsilon(0.05));
}

TEST_CASE("run_episode: static obstacle on the path keeps clearance positive") {
  std::string text = base_scenario_text();
  text += "obstacles.0.shape = circle\n"
          "obstacles.0.radius = 0.25\n"
          "obstacles.0.position = 1.5 0.55\n"
          "obstacles.0.velocity = 0.0 0.0\n"
          "obstacles.0.noise_std = 0.0\n";
  const ScenarioConfig cfg = scenario_from_text(text);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const RunMetrics m = run_episode(cfg, seed, Method::kTrueWithL1, false).metrics;
    if (!m.failed) CHECK(m.min_clearance > 0.0);
  }
}

TEST_CASE("run_episode: collision is detected and stamped") {
  // Obstacle dropped directly onto the start of the circle reference.
  std::string text = base_scenario_text();
  text += "obstacles.0.shape = circle\n"
          "obstacles.0.radius = 0.4\n"
          "obstacles.0.position = 1.5 0.0\n"
          "obstacles.0.velocity = 0.0 0.0\n"
          "obstacles.0.noise_std = 0.0\n";
  ScenarioConfig cfg = scenario_from_text(text);
  const RunMetrics m = run_episode(cfg, 1, Method::kTrueWithL1, false).metrics;
  CHECK(m.failed);
  CHECK((m.cause == FailureCause::kCollision || m.cause == FailureCause::kInfeasible));
  CHECK(m.failure_time >= 0.0);
}

TEST_CASE("monte_carlo: aggregation and thread invariance") {
  const ScenarioConfig cfg = scenario_from_text(base_scenario_text());

  const AggregateReport single = monte_carlo(cfg, 1, Method::kTrueWithL1, 1);
  CHECK(single.runs == 1);
  CHECK(single.j_std == 0.0);

  // Noise-free scenario: every seed produces the identical trajectory.
  const AggregateReport several = monte_carlo(cfg, 4, Method::kTrueWithL1, 1);
  CHECK(several.j_std == doctest::Approx(0.0).epsilon(1e-12));

  const AggregateReport threaded = monte_carlo(cfg, 4, Method::kTrueWithL1, 2);
  CHECK(threaded.j_mean == several.j_mean);
  CHECK(threaded.p_fail_percent == several.p_fail_percent);
}

TEST_CASE("io: trajectory, run, aggregate files are written with stable headers") {
  const ScenarioConfig cfg = scenario_from_text(base_scenario_text());
  const EpisodeResult episode = run_episode(cfg, 1, Method::kTrueWithL1, true);
  const AggregateReport report = monte_carlo(cfg, 2, Method::kTrueWithL1, 1);

  const std::string dir = resolve_output_dir("harness_test_out");
  write_trajectory_csv(episode, cfg, dir + "/traj.csv");
  write_runs_csv(report, dir + "/runs.csv");
  write_aggregate_csv({report}, cfg, dir + "/agg.csv");
  write_episode_svg(episode, cfg, dir + "/paths.svg");

  auto first_line = [](const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "r");
    REQUIRE(f != nullptr);
    char buf[512] = {0};
    REQUIRE(std::fgets(buf, sizeof(buf), f) != nullptr);
    std::fclose(f);
    return std::string(buf);
  };
  CHECK(first_line(dir + "/traj.csv").rfind("t,px,py", 0) == 0);
  CHECK(first_line(dir + "/runs.csv").rfind("run,failed", 0) == 0);
  CHECK(first_line(dir + "/agg.csv").rfind("reference,method", 0) == 0);
  CHECK(first_line(dir + "/paths.svg").rfind("<svg", 0) == 0);

  std::remove((dir + "/traj.csv").c_str());
  std::remove((dir + "/runs.csv").c_str());
  std::remove((dir + "/agg.csv").c_str());
  std::remove((dir + "/paths.svg").c_str());
}

TEST_CASE("tube_diagnostic: noise-free ensembles coincide") {
  std::string text = base_scenario_text();
  const ScenarioConfig cfg = scenario_from_text(text);
  const TubeReport tube = tube_diagnostic(cfg, 4);
  CHECK(tube.ensemble_size == 4);
  CHECK(tube.max_distance < 1e-9);  // no noise, no uncertainty: members identical
  CHECK(tube.within_fraction == 1.0);
}
