#include "drmpc/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace drmpc {

SystemPreset make_system_preset(const std::string& name, double noise_std) {
  if (name != "double_integrator_2d")
    throw std::invalid_argument("unknown system preset '" + name + "' (double_integrator_2d)");
  if (noise_std < 0.0) throw std::invalid_argument("system noise_std must be nonnegative");

  SystemPreset preset;
  preset.name = name;
  preset.spec.A_mu = Eigen::MatrixXd::Zero(4, 4);
  preset.spec.A_mu(0, 2) = 1.0;
  preset.spec.A_mu(1, 3) = 1.0;
  preset.spec.B = Eigen::MatrixXd::Zero(4, 2);
  preset.spec.B(2, 0) = 1.0;
  preset.spec.B(3, 1) = 1.0;
  preset.spec.A_sigma = noise_std * preset.spec.B;
  preset.C = Eigen::MatrixXd::Zero(2, 4);
  preset.C(0, 0) = 1.0;
  preset.C(1, 1) = 1.0;
  return preset;
}

UncertaintySpec make_uncertainty_preset(const std::string& name) {
  UncertaintySpec unc;
  if (name == "none") return unc;

  if (name == "bias_ripple") {
    // Constant input-channel bias with a bounded sinusoidal ripple in state
    // and time. The bias is what breaks the unadapted controller.
    const double b1 = 1.6, b2 = -1.2, amp = 0.6, kappa = 1.0, wd = 1.5;
    unc.lambda_mu = [=](double t, const Eigen::VectorXd& x) {
      Eigen::VectorXd l(2);
      l << b1 + amp * std::sin(kappa * x(1) + wd * t), b2 + amp * std::cos(kappa * x(0) + wd * t);
      return l;
    };
    unc.delta_mu1 = std::sqrt((std::abs(b1) + amp) * (std::abs(b1) + amp) +
                              (std::abs(b2) + amp) * (std::abs(b2) + amp));
    unc.delta_mu2 = 0.0;
    unc.lip_mu_t = std::sqrt(2.0) * amp * wd;
    unc.lip_mu_x = std::sqrt(2.0) * amp * kappa;
    return unc;
  }

  if (name == "saturated_drag") {
    const double cd = 1.2, ripple = 0.1;
    unc.lambda_mu = [=](double, const Eigen::VectorXd& x) {
      const Eigen::Vector2d v(x(2), x(3));
      const double speed = v.norm();
      return Eigen::VectorXd(-cd * std::tanh(speed) * v);
    };
    unc.delta_mu1 = 0.0;
    unc.delta_mu2 = cd;
    unc.lip_mu_t = 0.0;
    unc.lip_mu_x = 1.5 * cd;  // sup of the Jacobian norm of tanh(|v|) v is < 1.45
    unc.lambda_sigma = [=](double, const Eigen::VectorXd& x) {
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
      s(0, 0) = ripple * std::sin(x(0));
      s(1, 1) = ripple * std::cos(x(1));
      return s;
    };
    unc.delta_sigma1 = 2.0 * ripple * ripple;  // ||.||_F^2 <= 2 ripple^2 = sqrt(delta_sigma1^2)
    unc.delta_sigma2 = 0.0;
    unc.lip_sigma_t = 0.0;
    unc.lip_sigma_x = 2.0 * std::sqrt(2.0) * ripple;
    return unc;
  }

  throw std::invalid_argument("unknown uncertainty preset '" + name + "'");
}

std::vector<std::string> uncertainty_preset_names() { return {"none", "bias_ripple", "saturated_drag"}; }

}  // namespace drmpc
