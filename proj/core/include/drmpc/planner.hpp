#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "drmpc/dynamics.hpp"
#include "drmpc/environment.hpp"
#include "drmpc/rng.hpp"

namespace drmpc {

struct SolverOptions {
  int max_outer = 30;        // augmented-Lagrangian iterations
  int max_inner = 200;       // projected-gradient iterations per outer pass
  double pg_tol = 1e-7;      // projected-gradient stationarity tolerance
  double feas_tol = 1e-6;    // feasibility tolerance on unsmoothed residuals
  double tau_init = 1e-1;    // CVaR hinge smoothing temperature (annealed)
  double tau_min = 1e-3;
  double tau_decay = 0.1;
  double nu_init = 10.0;     // penalty parameter
  double nu_growth = 4.0;
  double nu_max = 1e8;
  int stall_limit = 5;       // outer passes without progress before giving up
};

struct MPCConfig {
  int horizon = 25;     // K
  double beta = 0.05;   // risk level
  int samples = 40;     // N per CVaR constraint
  int p = 1;            // Wasserstein half-order (distance order 2p)
  double rho_y = 0.04;  // joint ambiguity radius
  double dt = 0.1;      // planning period
  Eigen::MatrixXd Q, R, Q_f;
  Eigen::VectorXd u_min, u_max;  // per-axis input box (+-inf allowed)
  Eigen::VectorXd x_min, x_max;  // per-axis mean-state box (+-inf allowed)
  SolverOptions solver;

  void validate(int n, int m) const;
  double rho_pow() const;  // rho_y^{2p}
};

// Standard-normal system draws and per-obstacle nominal environment samples,
// drawn once at solve entry and held fixed while the optimizer runs.
struct NoiseRealizations {
  std::vector<Eigen::MatrixXd> xi;                 // K entries of n x N (stages 1..K)
  std::vector<std::vector<Eigen::MatrixXd>> z_hat; // [obstacle][stage 1..K] of n_z x N
};

NoiseRealizations draw_noise_realizations(int K, int N, int n, const std::vector<ObstacleProcess>& obstacles,
                                          double dt, RngStream& rng);

struct CovariancePlan {
  std::vector<Eigen::MatrixXd> sigma_seq;  // K+1 PSD matrices
};

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kMaxIter };
const char* to_string(SolveStatus s);

struct MPCSolution {
  std::vector<Eigen::VectorXd> u_seq;   // K inputs
  std::vector<Eigen::VectorXd> mu_seq;  // K+1 mean states
  Eigen::MatrixXd eta;                  // K x n_obs CVaR thresholds (stages 1..K)
  SolveStatus status = SolveStatus::kInfeasible;
  double objective = 0.0;
  double max_violation = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

// Per-stage state/input references for the tracking objective. All-zero
// references reduce the cost to the plain quadratic regulator form.
struct ReferenceWindow {
  std::vector<Eigen::VectorXd> x;  // K+1
  std::vector<Eigen::VectorXd> u;  // K

  static ReferenceWindow zero(int K, int n, int m);
};

std::vector<Eigen::VectorXd> propagate_mean(const DiscreteModel& model, const Eigen::VectorXd& mu0,
                                            const std::vector<Eigen::VectorXd>& u_seq);

CovariancePlan propagate_covariance(const DiscreteModel& model, const Eigen::MatrixXd& sigma0, int K);

// Reparameterized lifted samples for one obstacle:
// x_hat_j^(s) = mu_j + chol(Sigma_j) xi_j^(s) paired with z_hat_j^(s).
// Index [j-1][s] covers stages j = 1..K.
std::vector<std::vector<LiftedSample>> sample_lifted(const std::vector<Eigen::VectorXd>& mu_seq,
                                                     const CovariancePlan& cov,
                                                     const std::vector<Eigen::MatrixXd>& xi,
                                                     const std::vector<Eigen::MatrixXd>& z_hat_obstacle);

// Exact sample-average CVaR at level beta via the sorted closed form; the
// minimizing threshold eta is reported through eta_out when requested.
double cvar_saa(std::vector<double> values, double beta, double* eta_out = nullptr);

// CVaR_beta({-d^{2p}}) + rho_y^{2p}/beta for one stage/obstacle sample set;
// the constraint is satisfied iff the residual is <= 0.
double cvar_constraint_residual(const std::vector<LiftedSample>& samples, const UnsafeShape& shape,
                                const MPCConfig& cfg, double* eta_out = nullptr);

// Exact worst-case probability mass an adversary inside the 2p-Wasserstein
// ball of radius rho (given as rho^{2p}) can push into the unsafe set, for an
// N-atom empirical measure with unsafe-set distances d (given as d^{2p}).
double worst_case_violation(const std::vector<double>& dist2p, double rho2p);

namespace planner_detail {

// Condensed sample-based problem: the mean sequence is eliminated by
// substitution, so the decision variable is the stacked input sequence.
// Holds the frozen noise offsets and exposes the smoothed augmented
// Lagrangian used by the solver (and by the gradient-check tests).
class CondensedProblem {
 public:
  CondensedProblem(const DiscreteModel& model, const MPCConfig& cfg, const Eigen::VectorXd& x0,
                   const ReferenceWindow& ref, const std::vector<UnsafeShape>& shapes,
                   const NoiseRealizations& noise);

  int num_vars() const { return K_ * m_; }
  int num_constraints() const { return num_cvar_ + num_box_; }
  int num_cvar_constraints() const { return num_cvar_; }

  const Eigen::VectorXd& lower_bounds() const { return lo_; }
  const Eigen::VectorXd& upper_bounds() const { return hi_; }

  // Smoothed augmented Lagrangian value and gradient at stacked input u.
  double al_value_grad(const Eigen::VectorXd& u, double tau, const Eigen::VectorXd& lambda, double nu,
                       Eigen::VectorXd& grad);

  double objective(const Eigen::VectorXd& u) const;
  // Unsmoothed residuals, CVaR constraints first then state-box faces.
  Eigen::VectorXd exact_residuals(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd eta_values(const Eigen::VectorXd& u) const;  // K x n_obs
  std::vector<Eigen::VectorXd> roll_mean(const Eigen::VectorXd& u) const;

 private:
  void stage_values(int j, int o, const Eigen::MatrixXd& mu, std::vector<double>& v,
                    Eigen::MatrixXd* dv_dg) const;

  DiscreteModel model_;
  MPCConfig cfg_;
  Eigen::VectorXd x0_;
  ReferenceWindow ref_;
  std::vector<UnsafeShape> shapes_;
  int K_ = 0, N_ = 0, n_ = 0, m_ = 0;
  int num_cvar_ = 0, num_box_ = 0;
  std::vector<std::vector<Eigen::MatrixXd>> rel_offsets_;  // [obstacle][stage-1]: C L xi - z_hat
  std::vector<std::pair<int, int>> box_faces_;             // (stage, signed axis) finite faces
  Eigen::VectorXd lo_, hi_;                                // stacked input box
};

}  // namespace planner_detail

// Solves the sample-based distributionally robust MPC problem from initial
// state x0 with frozen noise realizations. Warm start is a previous input
// sequence (shifted by the caller).
MPCSolution solve_drmpc(const Eigen::VectorXd& x0, const DiscreteModel& model, const MPCConfig& cfg,
                        const ReferenceWindow& ref, const std::vector<UnsafeShape>& shapes,
                        const NoiseRealizations& noise,
                        const std::vector<Eigen::VectorXd>* warm_u = nullptr);

struct PolicyStep {
  Eigen::VectorXd u0;      // zero-order-hold input reference
  Eigen::VectorXd x_bar0;  // zero-order-hold state reference
  MPCSolution solution;
  bool fallback = false;  // true when the shift-and-hold fallback was applied
};

// Receding-horizon wrapper: warm starts from the previous plan shifted by one
// stage and falls back to holding that shifted plan when a solve fails.
class RecedingHorizonPlanner {
 public:
  RecedingHorizonPlanner(DiscreteModel model, MPCConfig cfg, std::vector<UnsafeShape> shapes);

  PolicyStep policy(const Eigen::VectorXd& x_meas, const ReferenceWindow& ref, const NoiseRealizations& noise);
  void reset();

  const MPCConfig& config() const { return cfg_; }
  const DiscreteModel& model() const { return model_; }

 private:
  DiscreteModel model_;
  MPCConfig cfg_;
  std::vector<UnsafeShape> shapes_;
  std::optional<MPCSolution> previous_;
  int fallback_shift_ = 0;
};

}  // namespace drmpc
