#include "drmpc/l1_adaptive.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace drmpc {

void L1Config::validate(const LinearSystemSpec& spec) const {
  if (!(omega > 0.0) || !(Ts > 0.0) || !(lambda_s > 0.0))
    throw std::invalid_argument("omega, Ts, lambda_s must be positive");
  const int n = spec.n();
  const int m = spec.m();
  if (theta_ad.rows() != m || theta_ad.cols() != n) throw std::invalid_argument("theta_ad must be m x n");
  if (K_fb.rows() != m || K_fb.cols() != n) throw std::invalid_argument("K_fb must be m x n");
  if ((theta_ad * spec.B - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("theta_ad * B must equal identity");
  Eigen::EigenSolver<Eigen::MatrixXd> es(spec.A_mu - spec.B * K_fb);
  if (es.eigenvalues().real().maxCoeff() >= -1e-9)
    throw std::invalid_argument("A_mu - B K_fb must be Hurwitz");
}

L1State L1State::initial(const Eigen::VectorXd& x0, int m) {
  L1State s;
  s.x_hat = x0;
  s.lambda_hat = Eigen::VectorXd::Zero(m);
  s.u_l1 = Eigen::VectorXd::Zero(m);
  s.interval = 0;
  return s;
}

Eigen::MatrixXd build_theta_ad(const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(B.rows());
  const int m = static_cast<int>(B.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU);
  if (m == 0 || svd.singularValues().minCoeff() <= 1e-10)
    throw std::invalid_argument("B must have full column rank");

  Eigen::MatrixXd B_bar(n, n);
  B_bar.leftCols(m) = B;
  if (n > m) B_bar.rightCols(n - m) = svd.matrixU().rightCols(n - m);  // orthonormal ker(B^T) basis
  return B_bar.inverse().topRows(m);
}

Eigen::VectorXd tracking_control(const L1Config& cfg, const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref,
                                 const Eigen::VectorXd& u_ref) {
  return u_ref - cfg.K_fb * (x - x_ref);
}

L1State predictor_step(const L1Config& cfg, const LinearSystemSpec& spec, const L1State& s,
                       const Eigen::VectorXd& x_meas, const Eigen::VectorXd& u, double h,
                       double divergence_threshold) {
  L1State next = s;
  next.x_hat = s.x_hat + h * (spec.A_mu * s.x_hat + spec.B * (u + s.lambda_hat) - cfg.lambda_s * (s.x_hat - x_meas));
  if (!next.x_hat.allFinite() || next.x_hat.norm() > divergence_threshold)
    throw DivergenceError("predictor state exceeded divergence threshold");
  return next;
}

Eigen::VectorXd adaptation_update(const L1Config& cfg, const Eigen::VectorXd& x_hat,
                                  const Eigen::VectorXd& x_meas) {
  const double coeff = cfg.lambda_s / (1.0 - std::exp(cfg.lambda_s * cfg.Ts));
  return coeff * (cfg.theta_ad * (x_hat - x_meas));
}

L1State filter_step(const L1Config& cfg, const L1State& s, double h) {
  const double decay = std::exp(-cfg.omega * h);
  L1State next = s;
  next.u_l1 = decay * s.u_l1 - (1.0 - decay) * s.lambda_hat;
  return next;
}

L1Output l1_control(const L1Config& cfg, const LinearSystemSpec& spec, const L1State& s,
                    const Eigen::VectorXd& x_meas, const Eigen::VectorXd& x_ref, const Eigen::VectorXd& u_ref,
                    double h, double divergence_threshold) {
  L1Output out;
  out.u_total = tracking_control(cfg, x_meas, x_ref, u_ref) + s.u_l1;

  L1State next = s;
  if (s.interval >= 1) next.lambda_hat = adaptation_update(cfg, s.x_hat, x_meas);
  next = predictor_step(cfg, spec, next, x_meas, out.u_total, h, divergence_threshold);
  next = filter_step(cfg, next, h);
  next.interval = s.interval + 1;
  out.state = std::move(next);
  return out;
}

}  // namespace drmpc
