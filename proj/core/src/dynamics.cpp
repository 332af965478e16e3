#include "drmpc/dynamics.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace drmpc {

void LinearSystemSpec::validate() const {
  if (A_mu.rows() != A_mu.cols()) throw std::invalid_argument("A_mu must be square");
  if (B.rows() != A_mu.rows()) throw std::invalid_argument("B row count must match A_mu");
  if (A_sigma.rows() != A_mu.rows()) throw std::invalid_argument("A_sigma row count must match A_mu");
  if (!A_mu.allFinite() || !B.allFinite() || !A_sigma.allFinite())
    throw std::invalid_argument("system matrices must be finite");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  if (B.cols() == 0 || svd.singularValues().minCoeff() <= 1e-10)
    throw std::invalid_argument("B must have full column rank");
}

void DiscreteModel::validate() const {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if ((Sigma_d - Sigma_d.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("Sigma_d must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma_d);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("Sigma_d must be positive semidefinite");
}

DiscreteModel discretize(const LinearSystemSpec& spec, double dt) {
  spec.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive and finite");

  const int n = spec.n();
  const int m = spec.m();

  // [A B; 0 0] exponential packs A_d and the input integral B_d.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = spec.A_mu;
  M.topRightCorner(n, m) = spec.B;
  const Eigen::MatrixXd Md = (M * dt).exp();

  DiscreteModel model;
  model.dt = dt;
  model.A_d = Md.topLeftCorner(n, n);
  model.B_d = Md.topRightCorner(n, m);

  // Van Loan block [-A Q; 0 A^T] for the diffusion integral.
  const Eigen::MatrixXd Q = spec.A_sigma * spec.A_sigma.transpose();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  H.topLeftCorner(n, n) = -spec.A_mu;
  H.topRightCorner(n, n) = Q;
  H.bottomRightCorner(n, n) = spec.A_mu.transpose();
  const Eigen::MatrixXd F = (H * dt).exp();
  const Eigen::MatrixXd Sigma = F.bottomRightCorner(n, n).transpose() * F.topRightCorner(n, n);
  model.Sigma_d = 0.5 * (Sigma + Sigma.transpose());
  return model;
}

namespace {

SimState euler_maruyama(const LinearSystemSpec& spec, const UncertaintySpec* unc, const SimState& state,
                        const Eigen::VectorXd& u, double h, double divergence_threshold) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!u.allFinite()) throw std::invalid_argument("input must be finite");

  SimState next = state;
  Eigen::VectorXd drift = spec.A_mu * state.x + spec.B * u;
  Eigen::MatrixXd diffusion = spec.A_sigma;
  if (unc) {
    if (unc->lambda_mu) drift += spec.B * unc->lambda_mu(state.t, state.x);
    if (unc->lambda_sigma) diffusion += spec.B * unc->lambda_sigma(state.t, state.x);
  }
  const Eigen::VectorXd xi = next.noise.normal_vector(spec.d());
  next.x = state.x + drift * h + diffusion * (std::sqrt(h) * xi);
  next.t = state.t + h;

  if (!next.x.allFinite() || next.x.norm() > divergence_threshold)
    throw DivergenceError("state norm exceeded divergence threshold");
  return next;
}

}  // namespace

SimState true_step(const LinearSystemSpec& spec, const UncertaintySpec& unc, const SimState& state,
                   const Eigen::VectorXd& u, double h, double divergence_threshold) {
  return euler_maruyama(spec, &unc, state, u, h, divergence_threshold);
}

SimState nominal_step(const LinearSystemSpec& spec, const SimState& state, const Eigen::VectorXd& u_bar,
                      double h, double divergence_threshold) {
  return euler_maruyama(spec, nullptr, state, u_bar, h, divergence_threshold);
}

BoundProbeReport validate_uncertainty_bounds(const UncertaintySpec& unc, int probe_count,
                                             const Eigen::VectorXd& state_lo, const Eigen::VectorXd& state_hi,
                                             double t_max, RngStream rng) {
  if (probe_count < 1) throw std::invalid_argument("probe_count must be >= 1");
  if (state_lo.size() != state_hi.size()) throw std::invalid_argument("state box bounds must match");

  const int n = static_cast<int>(state_lo.size());
  auto draw_probe = [&](double& t, Eigen::VectorXd& x) {
    t = t_max * rng.uniform01();
    x.resize(n);
    for (int i = 0; i < n; ++i) x(i) = state_lo(i) + (state_hi(i) - state_lo(i)) * rng.uniform01();
  };

  BoundProbeReport report;
  double t = 0.0, t2 = 0.0;
  Eigen::VectorXd x, x2;
  for (int k = 0; k < probe_count; ++k) {
    draw_probe(t, x);
    const double xn2 = x.squaredNorm();
    if (unc.lambda_mu) {
      const double lhs = unc.lambda_mu(t, x).squaredNorm();
      const double bound = unc.delta_mu1 * unc.delta_mu1 + unc.delta_mu2 * unc.delta_mu2 * xn2;
      report.max_drift_ratio = std::max(report.max_drift_ratio, bound > 0.0 ? lhs / bound : (lhs > 0.0 ? HUGE_VAL : 0.0));
    }
    if (unc.lambda_sigma) {
      const double lhs = unc.lambda_sigma(t, x).squaredNorm();  // Frobenius^2
      const double bound = std::sqrt(unc.delta_sigma1 * unc.delta_sigma1 + unc.delta_sigma2 * unc.delta_sigma2 * xn2);
      report.max_diffusion_ratio =
          std::max(report.max_diffusion_ratio, bound > 0.0 ? lhs / bound : (lhs > 0.0 ? HUGE_VAL : 0.0));
    }

    // Regularity probes on an independent second point.
    draw_probe(t2, x2);
    const double dt_abs = std::abs(t - t2);
    const double dx = (x - x2).norm();
    if (unc.lambda_mu) {
      const double diff = (unc.lambda_mu(t, x) - unc.lambda_mu(t2, x2)).norm();
      const double denom_t = unc.lip_mu_t * dt_abs + unc.lip_mu_x * dx;
      if (denom_t > 1e-12) {
        const double modulus = diff / denom_t;
        report.max_drift_t_modulus = std::max(report.max_drift_t_modulus, modulus);
        report.max_drift_x_modulus = std::max(report.max_drift_x_modulus, modulus);
      }
    }
    if (unc.lambda_sigma) {
      const double diff = (unc.lambda_sigma(t, x) - unc.lambda_sigma(t2, x2)).norm();
      const double denom = unc.lip_sigma_t * dt_abs + unc.lip_sigma_x * std::sqrt(dx);
      if (denom > 1e-12) {
        const double modulus = diff / denom;
        report.max_diffusion_t_modulus = std::max(report.max_diffusion_t_modulus, modulus);
        report.max_diffusion_x_modulus = std::max(report.max_diffusion_x_modulus, modulus);
      }
    }
  }

  report.growth_ok = report.max_drift_ratio <= 1.0 + 1e-9 && report.max_diffusion_ratio <= 1.0 + 1e-9;
  return report;
}

}  // namespace drmpc
