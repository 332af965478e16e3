#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "drmpc/rng.hpp"

namespace drmpc {

// Thrown when a simulated state exceeds the divergence threshold; the harness
// turns this into a failed run rather than propagating garbage states.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Continuous-time linear dynamics dX = (A_mu X + B U) dt + A_sigma dW.
struct LinearSystemSpec {
  Eigen::MatrixXd A_mu;     // n x n drift
  Eigen::MatrixXd B;        // n x m input, full column rank
  Eigen::MatrixXd A_sigma;  // n x d diffusion

  int n() const { return static_cast<int>(A_mu.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int d() const { return static_cast<int>(A_sigma.cols()); }

  // Checks dimensions, finiteness, and that B has full column rank
  // (singular values above 1e-10). Throws std::invalid_argument.
  void validate() const;
};

// Matched drift/diffusion uncertainty entering through the input channel,
// with the growth/regularity constants used by the bound validator.
struct UncertaintySpec {
  using DriftFn = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;      // -> m
  using DiffusionFn = std::function<Eigen::MatrixXd(double t, const Eigen::VectorXd& x)>;  // -> m x d

  DriftFn lambda_mu;
  DiffusionFn lambda_sigma;

  // Growth-bound constants: ||L_mu(t,x)||^2   <= delta_mu1^2 + delta_mu2^2 ||x||^2
  //                         ||L_sig(t,x)||_F^2 <= (delta_sigma1^2 + delta_sigma2^2 ||x||^2)^{1/2}
  double delta_mu1 = 0.0;
  double delta_mu2 = 0.0;
  double delta_sigma1 = 0.0;
  double delta_sigma2 = 0.0;

  // Regularity moduli: Lipschitz in t for both, Lipschitz in x for the drift,
  // Hoelder-1/2 in x for the diffusion.
  double lip_mu_t = 0.0;
  double lip_mu_x = 0.0;
  double lip_sigma_t = 0.0;
  double lip_sigma_x = 0.0;

  bool is_zero() const { return !lambda_mu && !lambda_sigma; }
};

// Zero-order-hold discretization of the nominal system.
struct DiscreteModel {
  Eigen::MatrixXd A_d;      // n x n
  Eigen::MatrixXd B_d;      // n x m
  Eigen::MatrixXd Sigma_d;  // n x n, symmetric PSD process-noise covariance
  double dt = 0.0;

  int n() const { return static_cast<int>(A_d.rows()); }
  int m() const { return static_cast<int>(B_d.cols()); }

  // Symmetry within 1e-12, eigenvalues >= -1e-12, dt > 0.
  void validate() const;
};

// Value-type simulation state; owns its noise stream so trajectories can be
// advanced and replayed independently.
struct SimState {
  double t = 0.0;
  Eigen::VectorXd x;
  RngStream noise;
};

struct BoundProbeReport {
  double max_drift_ratio = 0.0;      // max ||L_mu||^2 / bound
  double max_diffusion_ratio = 0.0;  // max ||L_sig||_F^2 / bound
  double max_drift_t_modulus = 0.0;      // empirical Lipschitz-in-t modulus vs lip_mu_t
  double max_drift_x_modulus = 0.0;      // vs lip_mu_x
  double max_diffusion_t_modulus = 0.0;  // vs lip_sigma_t
  double max_diffusion_x_modulus = 0.0;  // vs lip_sigma_x (Hoelder 1/2)
  bool growth_ok = false;  // all ratios <= 1 + 1e-9
};

// Exact ZOH matrices: A_d = exp(A_mu dt), B_d = int_0^dt exp(A_mu s) ds B,
// Sigma_d = int_0^dt exp(A_mu s) A_sigma A_sigma^T exp(A_mu^T s) ds, all via
// augmented-matrix exponentials.
DiscreteModel discretize(const LinearSystemSpec& spec, double dt);

// One Euler-Maruyama step of the true (uncertain) system under input u.
// Throws DivergenceError if ||x+|| exceeds divergence_threshold.
SimState true_step(const LinearSystemSpec& spec, const UncertaintySpec& unc, const SimState& state,
                   const Eigen::VectorXd& u, double h, double divergence_threshold = 1e6);

// One Euler-Maruyama step of the uncertainty-free nominal system. Uses the
// state's own (independent) noise stream.
SimState nominal_step(const LinearSystemSpec& spec, const SimState& state, const Eigen::VectorXd& u_bar,
                      double h, double divergence_threshold = 1e6);

// Samples (t, x) probe points and reports the worst-case ratio of each
// growth-bound left-hand side to its bound, plus empirical regularity moduli
// on random pairs. Report-only: never throws on a violated bound.
BoundProbeReport validate_uncertainty_bounds(const UncertaintySpec& unc, int probe_count,
                                             const Eigen::VectorXd& state_lo, const Eigen::VectorXd& state_hi,
                                             double t_max, RngStream rng);

}  // namespace drmpc
