#pragma once

#include <string>
#include <vector>

#include "drmpc/dynamics.hpp"

namespace drmpc {

// A named system model plus the selector that maps states to planar positions.
struct SystemPreset {
  std::string name;
  LinearSystemSpec spec;
  Eigen::MatrixXd C;  // n_z x n position selector
};

// Registry of nominal system models. Currently the planar stochastic double
// integrator: state (px, py, vx, vy), acceleration inputs, velocity-channel
// diffusion scaled by noise_std.
SystemPreset make_system_preset(const std::string& name, double noise_std);

// Registry of matched-uncertainty presets, each carrying the growth and
// regularity constants it satisfies (checked by validate_uncertainty_bounds):
//   none           - no uncertainty
//   bias_ripple    - constant acceleration bias plus a bounded state/time ripple
//   saturated_drag - velocity-opposing saturated drag with a diffusion ripple
UncertaintySpec make_uncertainty_preset(const std::string& name);

std::vector<std::string> uncertainty_preset_names();

}  // namespace drmpc
