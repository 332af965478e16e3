#pragma once

#include <string>

#include <Eigen/Core>

namespace drmpc {

enum class ReferenceKind { kCircle, kFigureEight, kLissajous, kSpiral };

ReferenceKind parse_reference_kind(const std::string& name);
const char* to_string(ReferenceKind kind);

struct ReferenceSpec {
  ReferenceKind kind = ReferenceKind::kCircle;
  double amplitude = 1.0;
  double period = 10.0;       // seconds per base revolution
  double spiral_rate = 0.05;  // radial growth [m/s], spiral only
};

// Planar position/velocity reference plus feedforward acceleration, all from
// one analytic parameterization.
struct ReferencePoint {
  Eigen::Vector4d x;  // (px, py, vx, vy)
  Eigen::Vector2d u;  // (ax, ay)
};

ReferencePoint reference_trajectory(const ReferenceSpec& spec, double t);

}  // namespace drmpc
