#pragma once

#include <Eigen/Core>

#include "drmpc/dynamics.hpp"

namespace drmpc {

// Gains of the adaptive tracking layer: baseline feedback K_fb plus the
// predictor / piecewise-constant adaptation / low-pass filter cascade.
struct L1Config {
  double omega = 50.0;      // filter bandwidth [rad/s]
  double Ts = 1e-3;         // adaptation period [s]
  double lambda_s = 100.0;  // adaptation gain [1/s]
  Eigen::MatrixXd theta_ad;  // m x n matched-channel projector
  Eigen::MatrixXd K_fb;      // m x n baseline feedback gain

  // omega, Ts, lambda_s > 0; theta_ad * B = I within 1e-9;
  // A_mu - B K_fb Hurwitz (real parts < -1e-9).
  void validate(const LinearSystemSpec& spec) const;
};

// Runtime state of the adaptive layer. x_hat starts at the measured state,
// lambda_hat at zero until the first adaptation boundary.
struct L1State {
  Eigen::VectorXd x_hat;       // predictor state
  Eigen::VectorXd lambda_hat;  // piecewise-constant uncertainty estimate
  Eigen::VectorXd u_l1;        // filtered adaptive input
  long interval = 0;           // adaptation interval index

  static L1State initial(const Eigen::VectorXd& x0, int m);
};

// theta_ad = first m rows of [B B_perp]^{-1}, with B_perp an orthonormal
// basis of ker(B^T). Satisfies theta_ad B = I_m and theta_ad B_perp = 0.
Eigen::MatrixXd build_theta_ad(const Eigen::MatrixXd& B);

// Baseline affine tracking law u_ref - K_fb (x - x_ref).
Eigen::VectorXd tracking_control(const L1Config& cfg, const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref,
                                 const Eigen::VectorXd& u_ref);

// Explicit-Euler predictor update over one adaptation interval.
L1State predictor_step(const L1Config& cfg, const LinearSystemSpec& spec, const L1State& s,
                       const Eigen::VectorXd& x_meas, const Eigen::VectorXd& u, double h,
                       double divergence_threshold = 1e6);

// Piecewise-constant adaptation: lambda_s (1 - e^{lambda_s Ts})^{-1} theta_ad (x_hat - x_meas).
Eigen::VectorXd adaptation_update(const L1Config& cfg, const Eigen::VectorXd& x_hat,
                                  const Eigen::VectorXd& x_meas);

// Exact ZOH discretization of the first-order filter u' = -omega (u + lambda_hat).
L1State filter_step(const L1Config& cfg, const L1State& s, double h);

// One adaptation-period tick: returns the total input (baseline + filtered
// adaptive term) and the advanced state. Ordering within a tick: total input
// from the held u_l1, adaptation at interval boundaries, predictor, filter.
struct L1Output {
  Eigen::VectorXd u_total;
  L1State state;
};
L1Output l1_control(const L1Config& cfg, const LinearSystemSpec& spec, const L1State& s,
                    const Eigen::VectorXd& x_meas, const Eigen::VectorXd& x_ref, const Eigen::VectorXd& u_ref,
                    double h, double divergence_threshold = 1e6);

}  // namespace drmpc
