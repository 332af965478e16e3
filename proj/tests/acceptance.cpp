// Acceptance suite: one check per release criterion, each printed as a
// PASS/FAIL line with the measured quantities. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "drmpc/episode.hpp"
#include "drmpc/montecarlo.hpp"
#include "oracles.hpp"

using namespace drmpc;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", index, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string scenario_path(const char* file) { return std::string(DRMPC_SCENARIO_DIR) + "/" + file; }

Eigen::MatrixXd position_selector() {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 4);
  C(0, 0) = C(1, 1) = 1.0;
  return C;
}

// 1. CVaR-residual => worst-case-violation soundness, with tightness probes.
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng = derive_stream(101, StreamRole::kProbe);
  int counterexamples = 0;
  int satisfied_instances = 0;
  double worst_tightness = 0.0;
  int tight_probes = 0;

  for (int trial = 0; trial < 200; ++trial) {
    const int N = 10 + static_cast<int>(rng.uniform01() * 91);
    const double beta = 0.01 + 0.49 * rng.uniform01();
    const double rho = 0.01 + 1.49 * rng.uniform01();
    const int p = rng.uniform01() < 0.7 ? 1 : 2;

    std::vector<double> d2p(N), values(N);
    for (int s = 0; s < N; ++s) {
      const double d = rng.uniform01() < 0.15 ? 0.0 : 3.0 * rng.uniform01();
      d2p[s] = std::pow(d, 2.0 * p);
      values[s] = -d2p[s];
    }
    const double rho2p = std::pow(rho, 2.0 * p);
    const double residual = cvar_saa(values, beta) + rho2p / beta;
    if (residual <= 0.0) {
      ++satisfied_instances;
      if (worst_case_violation(d2p, rho2p) > beta + 1e-9) ++counterexamples;
    }

    const double cvar = cvar_saa(values, beta);
    if (cvar < 0.0) {
      ++tight_probes;
      const double rho2p_tight = -beta * cvar;  // residual exactly zero
      const double violation = worst_case_violation(d2p, rho2p_tight);
      worst_tightness = std::max(worst_tightness, std::abs(violation - beta) - 1.0 / N);
    }
  }
  const double elapsed = seconds_since(t0);
  const bool ok = counterexamples == 0 && worst_tightness <= 1e-9 && satisfied_instances > 20 &&
                  tight_probes > 50 && elapsed < 5.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%d satisfied instances, %d counterexamples, tightness slack %.2e, %d probes, %.2f s",
                satisfied_instances, counterexamples, worst_tightness, tight_probes, elapsed);
  report(1, "CVaR reformulation oracle soundness", ok, buf);
}

// 2. Lifted distance vs brute-force grid minimization, circles and polytopes.
void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng = derive_stream(102, StreamRole::kProbe);
  const Eigen::MatrixXd C2 = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd C4 = position_selector();

  double worst = 0.0;
  int cases = 0;
  while (cases < 100) {
    const bool planar_state = cases % 2 == 0;
    const Eigen::MatrixXd& C = planar_state ? C2 : C4;
    const int n = planar_state ? 2 : 4;

    UnsafeShape shape;
    if (cases < 50) {
      shape = UnsafeShape::circle(0.3 + 1.2 * rng.uniform01(), C);
    } else {
      std::vector<Eigen::Vector2d> pts;
      for (int i = 0; i < 7; ++i) pts.emplace_back(Eigen::Vector2d(1.5 * rng.normal(), 1.5 * rng.normal()));
      const Eigen::MatrixXd hull = oracles::convex_hull(pts);
      if (hull.rows() < 3) continue;
      shape = UnsafeShape::polygon(hull, C);
    }
    const Eigen::VectorXd x = 2.5 * rng.normal_vector(n);
    const Eigen::VectorXd z = 1.2 * rng.normal_vector(2);

    const double fast = lifted_distance(x, z, shape);
    const double slow = oracles::grid_lifted_distance(x, z, shape);
    worst = std::max(worst, std::abs(fast - slow));
    ++cases;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst < 1e-3 && elapsed < 30.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max |closed form - grid| = %.2e over 100 cases, %.2f s", worst, elapsed);
  report(2, "lifted-distance closed forms", ok, buf);
}

// 3. Discretization closed forms.
void criterion_3() {
  const LinearSystemSpec di = make_system_preset("double_integrator_2d", 0.0).spec;
  const DiscreteModel model = discretize(di, 0.1);
  Eigen::MatrixXd A_expect = Eigen::MatrixXd::Identity(4, 4);
  A_expect(0, 2) = A_expect(1, 3) = 0.1;
  Eigen::MatrixXd B_expect = Eigen::MatrixXd::Zero(4, 2);
  B_expect(0, 0) = B_expect(1, 1) = 0.005;
  B_expect(2, 0) = B_expect(3, 1) = 0.1;
  const double ab_err = std::max((model.A_d - A_expect).cwiseAbs().maxCoeff(),
                                 (model.B_d - B_expect).cwiseAbs().maxCoeff());

  LinearSystemSpec ou;
  ou.A_mu = Eigen::MatrixXd::Constant(1, 1, -1.0);
  ou.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  ou.A_sigma = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const double sigma_err =
      std::abs(discretize(ou, 0.5).Sigma_d(0, 0) - (1.0 - std::exp(-1.0)) / 2.0);

  double semigroup_err = 0.0;
  RngStream rng = derive_stream(103, StreamRole::kProbe);
  for (int trial = 0; trial < 10; ++trial) {
    LinearSystemSpec spec;
    spec.A_mu = rng.normal_matrix(3, 3);
    spec.B = rng.normal_matrix(3, 1);
    spec.A_sigma = 0.3 * rng.normal_matrix(3, 2);
    const double a = 0.02 + 0.1 * rng.uniform01();
    const double b = 0.02 + 0.1 * rng.uniform01();
    semigroup_err = std::max(semigroup_err,
                             (discretize(spec, a + b).A_d - discretize(spec, a).A_d * discretize(spec, b).A_d)
                                 .cwiseAbs()
                                 .maxCoeff());
  }
  const bool ok = ab_err < 1e-12 && sigma_err < 1e-10 && semigroup_err < 1e-9;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ZOH error %.2e, OU covariance error %.2e, semigroup error %.2e", ab_err,
                sigma_err, semigroup_err);
  report(3, "exact discretization closed forms", ok, buf);
}

// 4. Wasserstein estimator: shift identity, exhaustive matching, metric axioms.
void criterion_4() {
  RngStream rng = derive_stream(104, StreamRole::kProbe);
  double shift_err = 0.0, perm_err = 0.0, sym_err = 0.0, tri_err = 0.0;

  for (int trial = 0; trial < 30; ++trial) {
    const int M = 4 + static_cast<int>(rng.uniform01() * 20);
    const int p = 1 + static_cast<int>(rng.uniform01() * 2);
    Ensemble a;
    a.points = rng.normal_matrix(3, M);
    Ensemble b = a;
    const Eigen::VectorXd v = rng.normal_vector(3);
    b.points.colwise() += v;
    shift_err = std::max(shift_err, std::abs(empirical_wasserstein(a, b, p) - v.norm()));
  }

  for (int trial = 0; trial < 20; ++trial) {
    const int M = 2 + static_cast<int>(rng.uniform01() * 6);
    Ensemble a, b;
    a.points = rng.normal_matrix(2, M);
    b.points = 1.5 * rng.normal_matrix(2, M);
    std::vector<int> perm(M);
    for (int i = 0; i < M; ++i) perm[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < M; ++i) total += std::pow((a.points.col(i) - b.points.col(perm[i])).norm(), 2.0);
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    perm_err = std::max(perm_err, std::abs(empirical_wasserstein(a, b, 1) - std::sqrt(best / M)));
  }

  for (int trial = 0; trial < 100; ++trial) {
    const int M = 5 + static_cast<int>(rng.uniform01() * 10);
    Ensemble a, b, c;
    a.points = rng.normal_matrix(2, M);
    b.points = rng.normal_matrix(2, M);
    c.points = rng.normal_matrix(2, M);
    const double ab = empirical_wasserstein(a, b, 1);
    sym_err = std::max(sym_err, std::abs(ab - empirical_wasserstein(b, a, 1)));
    tri_err = std::max(tri_err,
                       ab - empirical_wasserstein(a, c, 1) - empirical_wasserstein(c, b, 1));
  }
  const bool ok = shift_err < 1e-9 && perm_err < 1e-12 && sym_err < 1e-12 && tri_err < 1e-9;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "shift %.2e, vs permutations %.2e, symmetry %.2e, triangle slack %.2e",
                shift_err, perm_err, sym_err, tri_err);
  report(4, "exact empirical Wasserstein estimator", ok, buf);
}

// 5. Adaptive-layer disturbance rejection at the published gains.
void criterion_5() {
  LinearSystemSpec spec;
  spec.A_mu = (Eigen::MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  spec.B = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
  spec.A_sigma = Eigen::MatrixXd::Zero(2, 1);
  L1Config cfg;
  cfg.omega = 50.0;
  cfg.Ts = 1e-3;
  cfg.lambda_s = 100.0;
  cfg.theta_ad = build_theta_ad(spec.B);
  cfg.K_fb = (Eigen::MatrixXd(1, 2) << 4.0, 4.0).finished();
  cfg.validate(spec);

  const double disturbance = 1.0;
  UncertaintySpec unc;
  unc.lambda_mu = [&](double, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, disturbance); };
  unc.delta_mu1 = disturbance;
  const Eigen::Vector2d x_ref(1.0, 0.0);

  auto simulate = [&](bool with_l1, double T) {
    SimState state;
    state.t = 0.0;
    state.x = x_ref;
    state.noise = derive_stream(105, StreamRole::kTrueNoise);
    L1State l1 = L1State::initial(state.x, 1);
    const int steps = static_cast<int>(std::round(T / cfg.Ts));
    double u_l1_at_half_second = 0.0;
    double tail_err = 0.0;
    int tail_count = 0;
    for (int i = 0; i < steps; ++i) {
      Eigen::VectorXd u;
      if (with_l1) {
        L1Output out = l1_control(cfg, spec, l1, state.x, x_ref, Eigen::VectorXd::Zero(1), cfg.Ts);
        u = out.u_total;
        l1 = std::move(out.state);
      } else {
        u = tracking_control(cfg, state.x, x_ref, Eigen::VectorXd::Zero(1));
      }
      state = true_step(spec, unc, state, u, cfg.Ts);
      if ((i + 1) * cfg.Ts <= 0.5) u_l1_at_half_second = with_l1 ? l1.u_l1(0) : 0.0;
      if (i >= steps - static_cast<int>(std::round(1.0 / cfg.Ts))) {
        tail_err += std::abs(state.x(0) - x_ref(0));
        ++tail_count;
      }
    }
    return std::make_pair(u_l1_at_half_second, tail_err / tail_count);
  };

  const auto [u_l1_half, err_l1] = simulate(true, 5.0);
  const auto [unused, err_base] = simulate(false, 5.0);
  (void)unused;

  const double ratio = err_l1 / err_base;
  const double input_gap = std::abs(u_l1_half + disturbance) / disturbance;
  const bool error_ok = ratio <= 0.1;
  const bool input_ok = input_gap <= 0.05;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "error ratio %.4f (<= 0.1: %s); |u_l1 + Lambda|/Lambda at 0.5 s = %.4f (<= 0.05: %s; "
                "piecewise-constant law fixed point is e^{-lambda_s Ts} Lambda = %.4f Lambda)",
                ratio, error_ok ? "yes" : "no", input_gap, input_ok ? "yes" : "no", std::exp(-0.1));
  report(5, "adaptive-layer disturbance rejection", error_ok && input_ok, buf);
}

// 6. Desk-scale directional reproduction of the comparison table.
void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioConfig cfg = ScenarioConfig::load(scenario_path("figure8.cfg"));
  const int runs = 20;

  const AggregateReport nominal = monte_carlo(cfg, runs, Method::kNominal);
  const AggregateReport no_l1 = monte_carlo(cfg, runs, Method::kTrueNoL1);
  const AggregateReport with_l1 = monte_carlo(cfg, runs, Method::kTrueWithL1);
  const double elapsed = seconds_since(t0);

  const bool ordering_ok = with_l1.p_fail_percent < no_l1.p_fail_percent;
  const bool rate_ok = with_l1.p_fail_percent <= 10.0;
  const bool cost_ok = with_l1.failures < runs && nominal.failures < runs &&
                       with_l1.j_mean <= 1.5 * nominal.j_mean;
  const bool time_ok = elapsed < 600.0;
  char buf[300];
  std::snprintf(buf, sizeof(buf),
                "P_fail: nominal %.0f%%, no-L1 %.0f%%, with-L1 %.0f%%; J_track: nominal %.1f, with-L1 %.1f "
                "(ratio %.2f); %.0f s",
                nominal.p_fail_percent, no_l1.p_fail_percent, with_l1.p_fail_percent, nominal.j_mean,
                with_l1.j_mean, with_l1.j_mean / std::max(1e-9, nominal.j_mean), elapsed);
  report(6, "directional comparison-table reproduction", ordering_ok && rate_ok && cost_ok && time_ok, buf);
}

// 7. Stagewise empirical collision frequency at planner ticks.
void criterion_7() {
  const ScenarioConfig cfg = ScenarioConfig::load(scenario_path("audit.cfg"));
  const int episodes = 100;
  const double beta = cfg.mpc.beta;
  const double margin = beta + 3.0 * std::sqrt(beta * (1.0 - beta) / episodes);

  std::vector<int> collisions;  // per stage
  std::vector<int> alive;
  int infeasible_events = 0;
  for (int r = 0; r < episodes; ++r) {
    const EpisodeResult run =
        run_episode(cfg, cfg.seed + static_cast<std::uint64_t>(r), Method::kTrueWithL1, false);
    infeasible_events += run.metrics.fallback_steps;
    for (std::size_t k = 0; k < run.metrics.collision_at_tick.size(); ++k) {
      if (collisions.size() <= k) {
        collisions.push_back(0);
        alive.push_back(0);
      }
      ++alive[k];
      collisions[k] += run.metrics.collision_at_tick[k];
    }
  }
  double worst_freq = 0.0;
  for (std::size_t k = 0; k < collisions.size(); ++k)
    if (alive[k] > 0) worst_freq = std::max(worst_freq, static_cast<double>(collisions[k]) / alive[k]);

  const bool ok = worst_freq <= margin && infeasible_events == 0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "worst per-stage collision frequency %.4f (bound %.4f), infeasible planner steps %d",
                worst_freq, margin, infeasible_events);
  report(7, "stagewise chance-constraint audit", ok, buf);
}

// 8. Solver sanity: batch least-squares oracle and finite-difference gradients.
void criterion_8() {
  const DiscreteModel model = discretize(make_system_preset("double_integrator_2d", 0.05).spec, 0.1);
  MPCConfig cfg;
  cfg.horizon = 25;
  cfg.samples = 40;
  cfg.beta = 0.05;
  cfg.rho_y = 0.04;
  cfg.dt = 0.1;
  cfg.Q = Eigen::Vector4d(10, 10, 1, 1).asDiagonal();
  cfg.R = Eigen::Matrix2d::Identity();
  cfg.Q_f = Eigen::Vector4d(10, 10, 1, 1).asDiagonal();
  const double inf = std::numeric_limits<double>::infinity();
  cfg.u_min = Eigen::Vector2d::Constant(-inf);
  cfg.u_max = Eigen::Vector2d::Constant(inf);
  cfg.x_min = Eigen::Vector4d::Constant(-inf);
  cfg.x_max = Eigen::Vector4d::Constant(inf);
  cfg.solver.max_inner = 8000;
  cfg.solver.pg_tol = 1e-11;

  RngStream rng = derive_stream(108, StreamRole::kProbe);
  ReferenceWindow ref = ReferenceWindow::zero(cfg.horizon, 4, 2);
  for (auto& x : ref.x) x = rng.normal_vector(4);
  const Eigen::VectorXd x0 = rng.normal_vector(4);

  const MPCSolution sol = solve_drmpc(x0, model, cfg, ref, {}, NoiseRealizations{});
  const Eigen::VectorXd oracle = oracles::batch_lqr_solution(model, cfg, ref, x0);
  double solve_err = 0.0;
  for (int j = 0; j < cfg.horizon; ++j)
    solve_err = std::max(solve_err, (sol.u_seq[j] - oracle.segment(2 * j, 2)).cwiseAbs().maxCoeff());

  // Smoothed AL gradient vs central differences on a constrained instance.
  MPCConfig small = cfg;
  small.horizon = 6;
  small.samples = 10;
  small.u_min = Eigen::Vector2d(-8, -8);
  small.u_max = Eigen::Vector2d(8, 8);
  ObstacleProcess o;
  o.z = Eigen::Vector2d(0.6, 0.1);
  o.v = Eigen::Vector2d(0.1, 0.0);
  o.noise_std = 0.4;
  o.shape = UnsafeShape::circle(0.5, position_selector());
  RngStream nrng = derive_stream(109, StreamRole::kSamplingNoise);
  const NoiseRealizations noise = draw_noise_realizations(small.horizon, small.samples, 4, {o}, small.dt, nrng);
  const ReferenceWindow ref_small = ReferenceWindow::zero(small.horizon, 4, 2);
  planner_detail::CondensedProblem problem(model, small, Eigen::Vector4d(0.4, -0.2, 0.2, 0.1), ref_small,
                                           {o.shape}, noise);
  Eigen::VectorXd lambda(problem.num_constraints());
  for (int i = 0; i < lambda.size(); ++i) lambda(i) = rng.uniform01();

  double grad_rel = 0.0;
  Eigen::VectorXd dummy(problem.num_vars());
  for (int probe = 0; probe < 3; ++probe) {
    const Eigen::VectorXd u = rng.normal_vector(problem.num_vars());
    Eigen::VectorXd grad(u.size());
    problem.al_value_grad(u, 0.05, lambda, 3.0, grad);
    Eigen::VectorXd fd(u.size());
    for (int i = 0; i < u.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(u(i)));
      Eigen::VectorXd up = u, dn = u;
      up(i) += h;
      dn(i) -= h;
      fd(i) = (problem.al_value_grad(up, 0.05, lambda, 3.0, dummy) -
               problem.al_value_grad(dn, 0.05, lambda, 3.0, dummy)) /
              (2 * h);
    }
    grad_rel = std::max(grad_rel, (grad - fd).norm() / std::max(1.0, fd.norm()));
  }

  const bool ok = solve_err < 1e-4 && grad_rel < 1e-4;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "solver vs batch oracle %.2e (tol 1e-4), gradient vs FD rel %.2e (tol 1e-4)",
                solve_err, grad_rel);
  report(8, "solver sanity against dense oracles", ok, buf);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
