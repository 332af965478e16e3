#include "drmpc/reference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace drmpc {

ReferenceKind parse_reference_kind(const std::string& name) {
  if (name == "circle") return ReferenceKind::kCircle;
  if (name == "figure8") return ReferenceKind::kFigureEight;
  if (name == "lissajous") return ReferenceKind::kLissajous;
  if (name == "spiral") return ReferenceKind::kSpiral;
  throw std::invalid_argument("unknown reference kind '" + name + "' (circle|figure8|lissajous|spiral)");
}

const char* to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::kCircle: return "circle";
    case ReferenceKind::kFigureEight: return "figure8";
    case ReferenceKind::kLissajous: return "lissajous";
    case ReferenceKind::kSpiral: return "spiral";
  }
  return "unknown";
}

ReferencePoint reference_trajectory(const ReferenceSpec& spec, double t) {
  if (!(spec.period > 0.0)) throw std::invalid_argument("reference period must be positive");
  if (t < 0.0) throw std::invalid_argument("reference time must be nonnegative");
  const double a = spec.amplitude;
  const double w = 2.0 * std::numbers::pi / spec.period;
  const double s = std::sin(w * t);
  const double c = std::cos(w * t);

  ReferencePoint out;
  switch (spec.kind) {
    case ReferenceKind::kCircle:
      out.x << a * c, a * s, -a * w * s, a * w * c;
      out.u << -a * w * w * c, -a * w * w * s;
      break;
    case ReferenceKind::kFigureEight: {
      const double s2 = std::sin(2.0 * w * t);
      const double c2 = std::cos(2.0 * w * t);
      out.x << a * s, 0.5 * a * s2, a * w * c, a * w * c2;
      out.u << -a * w * w * s, -2.0 * a * w * w * s2;
      break;
    }
    case ReferenceKind::kLissajous: {
      const double s3 = std::sin(3.0 * w * t);
      const double c3 = std::cos(3.0 * w * t);
      const double s2 = std::sin(2.0 * w * t);
      const double c2 = std::cos(2.0 * w * t);
      out.x << a * s3, a * s2, 3.0 * a * w * c3, 2.0 * a * w * c2;
      out.u << -9.0 * a * w * w * s3, -4.0 * a * w * w * s2;
      break;
    }
    case ReferenceKind::kSpiral: {
      const double r = a + spec.spiral_rate * t;
      const double dr = spec.spiral_rate;
      out.x << r * c, r * s, dr * c - r * w * s, dr * s + r * w * c;
      out.u << -2.0 * dr * w * s - r * w * w * c, 2.0 * dr * w * c - r * w * w * s;
      break;
    }
  }
  return out;
}

}  // namespace drmpc
