#pragma once

#include <vector>

#include <Eigen/Core>

#include "drmpc/rng.hpp"

namespace drmpc {

// Translated unsafe region: the base set S (disc of radius r, or polytope
// {y : A y <= b}) placed at the obstacle position, with C the selector that
// extracts the position components of the system state.
struct UnsafeShape {
  enum class Kind { kCircle, kPolytope };

  Kind kind = Kind::kCircle;
  double radius = 0.0;       // circle
  Eigen::MatrixXd A;         // polytope faces (m_c x n_z)
  Eigen::VectorXd b;         // polytope offsets
  Eigen::MatrixXd vertices;  // polytope vertices, one per row (2-D fast path)
  Eigen::MatrixXd C;         // n_z x n position selector, full row rank

  static UnsafeShape circle(double r, const Eigen::MatrixXd& C);
  // CCW or CW planar vertex list (one vertex per row); builds faces internally.
  static UnsafeShape polygon(const Eigen::MatrixXd& verts, const Eigen::MatrixXd& C);
  // General halfspace form; nonemptiness checked by one feasibility solve.
  static UnsafeShape polytope(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::MatrixXd& C);

  int nz() const { return static_cast<int>(C.rows()); }

  // dist(w, S) in the obstacle-relative frame, and membership.
  double base_distance(const Eigen::VectorXd& w) const;
  bool base_contains(const Eigen::VectorXd& w, double tol = 1e-9) const;
  // Euclidean projection of w onto S (identity inside).
  Eigen::VectorXd base_projection(const Eigen::VectorXd& w) const;
};

// Constant-velocity obstacle with additive Gaussian position noise.
struct ObstacleProcess {
  Eigen::VectorXd z;          // current position
  Eigen::VectorXd v;          // velocity
  double noise_std = 0.0;     // per-axis sigma_z
  UnsafeShape shape;
};

struct LiftedSample {
  Eigen::VectorXd x;  // system sample
  Eigen::VectorXd z;  // environment sample
};

// Tail constants of the finite-sample environment concentration bound.
struct ConcentrationParams {
  double alpha = 4.0;   // tail exponent, > 2p
  double A_tail = 1.0;  // moment bound
  double c1 = 2.0;
  double c2 = 1.0;
  int n_z = 2;
  int p = 1;  // Wasserstein half-order (order 2p)
};

// One Euler-Maruyama step of the obstacle SDE; velocity is constant.
ObstacleProcess obstacle_step(const ObstacleProcess& o, double h, RngStream& rng);

// For each horizon step j = 1..K, N i.i.d. draws from the nominal law of the
// obstacle after j steps: mean z + v j h, covariance sigma_z^2 j h I.
// Result: K matrices of size n_z x N.
std::vector<Eigen::MatrixXd> sample_obstacle_predictions(const ObstacleProcess& o, int K, int N, double h,
                                                         RngStream& rng);

// Distance from the lifted point (x, z) to the lifted unsafe set:
// (1/sqrt(2)) dist(Cx - z, S). Zero inside.
double lifted_distance(const LiftedSample& y, const UnsafeShape& shape);
double lifted_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& z, const UnsafeShape& shape);

// Euclidean projection onto {y : A y <= b}. Planar polygons use exact
// face/vertex enumeration; the general case runs a dual active-set QP with a
// KKT residual check at 1e-8.
Eigen::VectorXd project_onto_polytope(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& b);

// Two-branch finite-sample radius rho_z(N, delta_z).
double concentration_radius(const ConcentrationParams& params, long N, double delta_z);

}  // namespace drmpc
