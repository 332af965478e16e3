// Command-line front end: single episodes, Monte Carlo batches, and the
// built-in validation suite.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drmpc/episode.hpp"
#include "drmpc/io.hpp"
#include "drmpc/montecarlo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonArgs {
  std::string scenario_path;
  std::string method;
  std::string out_dir;
  long seed = -1;
};

drmpc::ScenarioConfig load_with_overrides(const CommonArgs& args) {
  drmpc::ScenarioConfig cfg = drmpc::ScenarioConfig::load(args.scenario_path);
  if (!args.method.empty()) cfg.method = drmpc::parse_method(args.method);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

int cmd_run(const CommonArgs& args, int tube_members) {
  const drmpc::ScenarioConfig cfg = load_with_overrides(args);
  const std::string out = drmpc::resolve_output_dir(args.out_dir);

  const drmpc::EpisodeResult episode = drmpc::run_episode(cfg, cfg.seed, cfg.method, true);
  drmpc::write_trajectory_csv(episode, cfg, out + "/" + cfg.name + "_trajectory.csv");
  drmpc::write_episode_svg(episode, cfg, out + "/" + cfg.name + "_paths.svg");

  const drmpc::RunMetrics& m = episode.metrics;
  std::printf("scenario=%s method=%s seed=%llu\n", cfg.name.c_str(), drmpc::to_string(cfg.method),
              static_cast<unsigned long long>(cfg.seed));
  std::printf("J_track=%.4f failed=%s cause=%s min_clearance=%.4f solves=%d fallbacks=%d\n", m.j_track,
              m.failed ? "yes" : "no", drmpc::to_string(m.cause), m.min_clearance, m.planner_solves,
              m.fallback_steps);

  const int members = tube_members > 0 ? tube_members : cfg.ensemble_members;
  if (members > 1) {
    const drmpc::TubeReport tube = drmpc::tube_diagnostic(cfg, members);
    drmpc::write_tube_csv(tube, out + "/" + cfg.name + "_tube.csv");
    std::printf("tube: members=%d max_W=%.5f rho_x=%.5f within=%.1f%%\n", tube.ensemble_size,
                tube.max_distance, tube.rho_x, 100.0 * tube.within_fraction);
  }
  return m.failed ? kExitRunFailure : kExitOk;
}

int cmd_mc(const CommonArgs& args, int runs, bool compare, int threads) {
  drmpc::ScenarioConfig cfg = load_with_overrides(args);
  if (runs > 0) cfg.runs = runs;
  const std::string out = drmpc::resolve_output_dir(args.out_dir);

  std::vector<drmpc::Method> methods;
  if (compare)
    methods = {drmpc::Method::kNominal, drmpc::Method::kTrueNoL1, drmpc::Method::kTrueWithL1};
  else
    methods = {cfg.method};

  std::vector<drmpc::AggregateReport> reports;
  std::printf("%-12s %-14s %6s %16s %10s %8s\n", "reference", "method", "runs", "J_track", "P_fail(%)", "rho_y");
  bool any_failed_run = false;
  for (const auto method : methods) {
    const drmpc::AggregateReport rep = drmpc::monte_carlo(cfg, cfg.runs, method, threads);
    std::printf("%-12s %-14s %6d %9.2f+-%-6.2f %10.1f %8.3g\n", drmpc::to_string(cfg.reference.kind),
                drmpc::to_string(method), rep.runs, rep.j_mean, rep.j_std, rep.p_fail_percent, cfg.mpc.rho_y);
    drmpc::write_runs_csv(rep, out + "/" + cfg.name + "_" + drmpc::to_string(method) + "_runs.csv");
    any_failed_run = any_failed_run || rep.failures > 0;
    reports.push_back(std::move(rep));
  }
  drmpc::write_aggregate_csv(reports, cfg, out + "/" + cfg.name + "_aggregate.csv");
  // Batch exit reflects the scenario's own method only.
  return compare ? kExitOk : (reports.front().failures > 0 ? kExitRunFailure : kExitOk);
}

// ---- validate: compact self-checks over the shipped presets and kernels ----

int checks_failed = 0;

void report(const char* name, bool ok, const std::string& detail = "") {
  std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : ": ", detail.c_str());
  if (!ok) ++checks_failed;
}

void validate_presets() {
  for (const auto& name : drmpc::uncertainty_preset_names()) {
    const drmpc::UncertaintySpec unc = drmpc::make_uncertainty_preset(name);
    if (unc.is_zero()) {
      report(("uncertainty preset '" + name + "' growth bounds").c_str(), true, "no uncertainty");
      continue;
    }
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(4, -6.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(4, 6.0);
    const auto rep = drmpc::validate_uncertainty_bounds(unc, 4000, lo, hi, 20.0,
                                                        drmpc::derive_stream(7, drmpc::StreamRole::kProbe));
    report(("uncertainty preset '" + name + "' growth bounds").c_str(), rep.growth_ok,
           "max drift ratio " + std::to_string(rep.max_drift_ratio));
  }
}

void validate_discretization() {
  drmpc::LinearSystemSpec di = drmpc::make_system_preset("double_integrator_2d", 0.0).spec;
  const drmpc::DiscreteModel model = drmpc::discretize(di, 0.1);
  Eigen::MatrixXd A_expect = Eigen::MatrixXd::Identity(4, 4);
  A_expect(0, 2) = A_expect(1, 3) = 0.1;
  Eigen::MatrixXd B_expect = Eigen::MatrixXd::Zero(4, 2);
  B_expect(0, 0) = B_expect(1, 1) = 0.005;
  B_expect(2, 0) = B_expect(3, 1) = 0.1;
  const bool ab_ok = (model.A_d - A_expect).cwiseAbs().maxCoeff() < 1e-12 &&
                     (model.B_d - B_expect).cwiseAbs().maxCoeff() < 1e-12;
  report("double-integrator ZOH closed form", ab_ok);

  drmpc::LinearSystemSpec ou;
  ou.A_mu = Eigen::MatrixXd::Constant(1, 1, -1.0);
  ou.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  ou.A_sigma = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const drmpc::DiscreteModel oud = drmpc::discretize(ou, 0.5);
  const double sigma_expect = (1.0 - std::exp(-1.0)) / 2.0;
  report("scalar OU covariance closed form", std::abs(oud.Sigma_d(0, 0) - sigma_expect) < 1e-10);

  const drmpc::DiscreteModel a = drmpc::discretize(di, 0.07);
  const drmpc::DiscreteModel b = drmpc::discretize(di, 0.05);
  const drmpc::DiscreteModel ab = drmpc::discretize(di, 0.12);
  report("discretization semigroup property",
         (ab.A_d - a.A_d * b.A_d).cwiseAbs().maxCoeff() < 1e-9);
}

void validate_prop1_oracle() {
  drmpc::RngStream rng = drmpc::derive_stream(11, drmpc::StreamRole::kProbe);
  bool sound = true;
  double tight_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 10 + static_cast<int>(rng.uniform01() * 91);
    const double beta = 0.01 + 0.49 * rng.uniform01();
    const double rho = 0.01 + 1.2 * rng.uniform01();
    std::vector<double> v(N), d2p(N);
    for (int s = 0; s < N; ++s) {
      const double d = rng.uniform01() < 0.15 ? 0.0 : 3.0 * rng.uniform01();
      d2p[s] = d * d;
      v[s] = -d2p[s];
    }
    const double rho2p = rho * rho;
    const double residual = drmpc::cvar_saa(v, beta) + rho2p / beta;
    const double violation = drmpc::worst_case_violation(d2p, rho2p);
    if (residual <= 0.0 && violation > beta + 1e-9) sound = false;

    const double cvar = drmpc::cvar_saa(v, beta);
    if (cvar < 0.0) {
      const double rho2p_tight = -beta * cvar;
      const double v_tight = drmpc::worst_case_violation(d2p, rho2p_tight);
      tight_err = std::max(tight_err, std::abs(v_tight - beta) - 1.0 / N);
    }
  }
  report("distributional constraint oracle soundness", sound);
  report("distributional constraint oracle tightness", tight_err <= 1e-9);
}

void validate_distances() {
  drmpc::RngStream rng = drmpc::derive_stream(13, drmpc::StreamRole::kProbe);
  const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const drmpc::UnsafeShape shape = drmpc::UnsafeShape::circle(0.5 + rng.uniform01(), C);
    const Eigen::VectorXd x = 3.0 * rng.normal_vector(2);
    const Eigen::VectorXd z = 1.5 * rng.normal_vector(2);
    const double fast = drmpc::lifted_distance(x, z, shape);
    // Independent check: minimize over lifted points on a refining grid.
    double w = 6.0 + x.norm() + z.norm();
    Eigen::Vector4d center;
    center << x(0), x(1), z(0), z(1);
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector4d best_pt = center;
    for (int level = 0; level < 12; ++level) {
      for (int a = -4; a <= 4; ++a)
        for (int b = -4; b <= 4; ++b)
          for (int c = -4; c <= 4; ++c)
            for (int d = -4; d <= 4; ++d) {
              Eigen::Vector4d pt = best_pt + (w / 4.0) * Eigen::Vector4d(a, b, c, d);
              const Eigen::Vector2d rel(pt(0) - pt(2), pt(1) - pt(3));
              if (!shape.base_contains(rel, 0.0)) continue;
              const double dist = std::sqrt((pt(0) - x(0)) * (pt(0) - x(0)) + (pt(1) - x(1)) * (pt(1) - x(1)) +
                                            (pt(2) - z(0)) * (pt(2) - z(0)) + (pt(3) - z(1)) * (pt(3) - z(1)));
              if (dist < best) {
                best = dist;
                best_pt = pt;
              }
            }
      w /= 3.0;
    }
    worst = std::max(worst, std::abs(fast - best));
  }
  report("lifted distance vs grid search", worst < 2e-3, "max error " + std::to_string(worst));
}

int cmd_validate() {
  validate_presets();
  validate_discretization();
  validate_prop1_oracle();
  validate_distances();
  std::printf("%d check(s) failed\n", checks_failed);
  return checks_failed == 0 ? kExitOk : kExitRunFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust MPC with adaptive tracking: simulation and certification"};
  app.require_subcommand(1);

  CommonArgs run_args, mc_args;
  int tube_members = 0;
  int mc_runs = 0;
  int mc_threads = 0;
  bool mc_compare = false;

  CLI::App* run = app.add_subcommand("run", "Run a single episode and write trajectory CSV/SVG");
  run->add_option("scenario", run_args.scenario_path, "Scenario file")->required();
  run->add_option("--seed", run_args.seed, "Override the scenario seed");
  run->add_option("--method", run_args.method, "nominal|true_no_l1|true_with_l1");
  run->add_option("--out", run_args.out_dir, "Output directory (or DRMPC_OUT_DIR)");
  run->add_option("--tube", tube_members, "Also run the ensemble tube diagnostic with this many members");

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo batch with aggregate table");
  mc->add_option("scenario", mc_args.scenario_path, "Scenario file")->required();
  mc->add_option("--runs", mc_runs, "Number of runs (overrides run.runs)");
  mc->add_option("--seed", mc_args.seed, "Override the scenario seed");
  mc->add_option("--method", mc_args.method, "nominal|true_no_l1|true_with_l1");
  mc->add_option("--out", mc_args.out_dir, "Output directory (or DRMPC_OUT_DIR)");
  mc->add_option("--threads", mc_threads, "Worker threads (default: hardware)");
  mc->add_flag("--compare", mc_compare, "Run all three methods and tabulate");

  CLI::App* validate = app.add_subcommand("validate", "Run the built-in property checks");
  (void)validate;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(run_args, tube_members);
    if (mc->parsed()) return cmd_mc(mc_args, mc_runs, mc_compare, mc_threads);
    return cmd_validate();
  } catch (const drmpc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRunFailure;
  }
}
