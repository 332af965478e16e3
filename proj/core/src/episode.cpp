#include "drmpc/episode.hpp"

#include <cmath>

namespace drmpc {

const char* to_string(FailureCause cause) {
  switch (cause) {
    case FailureCause::kNone: return "none";
    case FailureCause::kCollision: return "collision";
    case FailureCause::kInfeasible: return "infeasible";
    case FailureCause::kDivergence: return "divergence";
  }
  return "unknown";
}

namespace {

ReferenceWindow make_reference_window(const ScenarioConfig& cfg, double t0) {
  const int K = cfg.mpc.horizon;
  ReferenceWindow ref;
  ref.x.reserve(K + 1);
  ref.u.reserve(K);
  for (int j = 0; j <= K; ++j) {
    const ReferencePoint pt = reference_trajectory(cfg.reference, t0 + j * cfg.mpc.dt);
    ref.x.push_back(pt.x);
    if (j < K) ref.u.push_back(pt.u);
  }
  return ref;
}

}  // namespace

namespace {

EpisodeResult run_episode_impl(const ScenarioConfig& cfg, std::uint64_t seed, std::uint64_t obstacle_seed,
                               Method method, bool keep_log) {
  const int n = cfg.system.spec.n();
  const int m = cfg.system.spec.m();
  const int outer_steps = cfg.planner_steps();
  const int inner_steps = cfg.inner_steps();
  const double Ts = cfg.l1.Ts;

  EpisodeResult result;
  RunMetrics& metrics = result.metrics;

  auto fail = [&](FailureCause cause, double t) {
    if (!metrics.failed) {
      metrics.failed = true;
      metrics.cause = cause;
      metrics.failure_time = t;
    }
  };

  const ReferencePoint start = reference_trajectory(cfg.reference, 0.0);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  x0.head(4) = start.x;

  SimState state;
  state.t = 0.0;
  state.x = x0;
  state.noise = derive_stream(seed, method == Method::kNominal ? StreamRole::kNominalNoise : StreamRole::kTrueNoise);
  RngStream obstacle_rng = derive_stream(obstacle_seed, StreamRole::kObstacleNoise);
  RngStream sampling_rng = derive_stream(seed, StreamRole::kSamplingNoise);

  std::vector<ObstacleProcess> obstacles = cfg.obstacles;
  std::vector<UnsafeShape> shapes;
  shapes.reserve(obstacles.size());
  for (const auto& o : obstacles) shapes.push_back(o.shape);

  RecedingHorizonPlanner planner(cfg.model, cfg.mpc, shapes);
  L1State l1 = L1State::initial(x0, m);

  auto clearance_of = [&](const Eigen::VectorXd& x) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles) worst = std::min(worst, lifted_distance(x, o.z, o.shape));
    return worst;
  };

  bool aborted = false;
  for (int k = 0; k < outer_steps && !aborted; ++k) {
    const double t_k = k * cfg.mpc.dt;

    // Stage audit and safety bookkeeping at the planner tick.
    const double tick_clearance = clearance_of(state.x);
    metrics.min_clearance = std::min(metrics.min_clearance, tick_clearance);
    metrics.collision_at_tick.push_back(tick_clearance <= 0.0 ? 1 : 0);
    result.tick_times.push_back(t_k);
    result.tick_states.push_back(state.x);

    // Plan from the measured state with freshly sampled predictions.
    const ReferenceWindow window = make_reference_window(cfg, t_k);
    const NoiseRealizations noise =
        draw_noise_realizations(cfg.mpc.horizon, cfg.mpc.samples, n, obstacles, cfg.mpc.dt, sampling_rng);
    const PolicyStep step = planner.policy(state.x, window, noise);
    ++metrics.planner_solves;
    if (step.fallback) {
      ++metrics.fallback_steps;
      fail(FailureCause::kInfeasible, t_k);
    }

    for (int i = 0; i < inner_steps; ++i) {
      const double t = t_k + i * Ts;
      Eigen::VectorXd u;
      Eigen::VectorXd u_l1 = Eigen::VectorXd::Zero(m);
      switch (method) {
        case Method::kNominal:
          u = step.u0;
          break;
        case Method::kTrueNoL1:
          u = tracking_control(cfg.l1, state.x, step.x_bar0, step.u0);
          break;
        case Method::kTrueWithL1: {
          L1Output out = l1_control(cfg.l1, cfg.system.spec, l1, state.x, step.x_bar0, step.u0, Ts,
                                    cfg.divergence_threshold);
          u = out.u_total;
          u_l1 = l1.u_l1;  // component held over this tick
          l1 = std::move(out.state);
          break;
        }
      }

      if (i == 0) {
        const Eigen::VectorXd err = state.x - window.x.front();
        metrics.j_track += err.dot(cfg.mpc.Q * err) + u.dot(cfg.mpc.R * u);
      }

      try {
        state = method == Method::kNominal
                    ? nominal_step(cfg.system.spec, state, u, Ts, cfg.divergence_threshold)
                    : true_step(cfg.system.spec, cfg.uncertainty, state, u, Ts, cfg.divergence_threshold);
      } catch (const DivergenceError&) {
        fail(FailureCause::kDivergence, t);
        aborted = true;
      }
      for (auto& o : obstacles) o = obstacle_step(o, Ts, obstacle_rng);

      if (!aborted) {
        const double clearance = clearance_of(state.x);
        metrics.min_clearance = std::min(metrics.min_clearance, clearance);
        if (clearance <= 0.0) {
          fail(FailureCause::kCollision, t + Ts);
          aborted = true;
        }
      }

      if (keep_log) {
        TickRecord rec;
        rec.t = t;
        rec.x = state.x;
        rec.x_plan = step.x_bar0;
        rec.u = u;
        rec.u_l1 = u_l1;
        for (const auto& o : obstacles) {
          rec.clearances.push_back(lifted_distance(state.x, o.z, o.shape));
          rec.obstacle_pos.emplace_back(o.z(0), o.z(1));
        }
        result.log.push_back(std::move(rec));
      }
      if (aborted) break;
    }
  }
  return result;
}

}  // namespace

EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed, Method method, bool keep_log) {
  return run_episode_impl(cfg, seed, seed, method, keep_log);
}

TubeReport tube_diagnostic(const ScenarioConfig& cfg, int members) {
  if (members < 2) throw std::invalid_argument("tube diagnostic needs at least 2 ensemble members");

  // Member r varies the system and sampling streams while the obstacle
  // realization is shared, so the per-tick ensembles differ only through
  // system-side randomness.
  std::vector<std::vector<Eigen::VectorXd>> true_states(members), nominal_states(members);
  std::size_t ticks = std::numeric_limits<std::size_t>::max();
  std::vector<double> times;
  for (int r = 0; r < members; ++r) {
    const std::uint64_t member_seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(r + 1);
    const EpisodeResult true_run = run_episode_impl(cfg, member_seed, cfg.seed, Method::kTrueWithL1, false);
    const EpisodeResult nom_run = run_episode_impl(cfg, member_seed, cfg.seed, Method::kNominal, false);
    true_states[r] = true_run.tick_states;
    nominal_states[r] = nom_run.tick_states;
    ticks = std::min({ticks, true_run.tick_states.size(), nom_run.tick_states.size()});
    if (r == 0) times = true_run.tick_times;
  }
  if (ticks == 0) throw std::runtime_error("tube diagnostic: no completed planner ticks");
  times.resize(ticks);

  const int n = cfg.system.spec.n();
  std::vector<Ensemble> true_ens(ticks), nom_ens(ticks);
  for (std::size_t k = 0; k < ticks; ++k) {
    true_ens[k].points.resize(n, members);
    nom_ens[k].points.resize(n, members);
    for (int r = 0; r < members; ++r) {
      true_ens[k].points.col(r) = true_states[r][k];
      nom_ens[k].points.col(r) = nominal_states[r][k];
    }
  }
  return check_tube(times, true_ens, nom_ens, cfg.rho_x_certificate, cfg.mpc.p);
}

}  // namespace drmpc
