#include "drmpc/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace drmpc {
namespace {

void check_selector(const Eigen::MatrixXd& C) {
  if (C.rows() == 0 || C.cols() < C.rows()) throw std::invalid_argument("selector C must be n_z x n with n_z <= n");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  if (svd.singularValues().minCoeff() <= 1e-10) throw std::invalid_argument("selector C must have full row rank");
}

// Euclidean projection onto a convex CCW polygon: containment test, then the
// closest point over all edge segments (vertices are segment endpoints).
Eigen::Vector2d project_polygon(const Eigen::Vector2d& y, const Eigen::MatrixXd& verts) {
  const int nv = static_cast<int>(verts.rows());
  bool inside = true;
  for (int i = 0; i < nv; ++i) {
    const Eigen::Vector2d p = verts.row(i);
    const Eigen::Vector2d q = verts.row((i + 1) % nv);
    const Eigen::Vector2d e = q - p;
    if (e.x() * (y.y() - p.y()) - e.y() * (y.x() - p.x()) < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return y;

  double best_d2 = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best = verts.row(0);
  for (int i = 0; i < nv; ++i) {
    const Eigen::Vector2d p = verts.row(i);
    const Eigen::Vector2d q = verts.row((i + 1) % nv);
    const Eigen::Vector2d e = q - p;
    const double len2 = e.squaredNorm();
    double s = len2 > 0.0 ? (y - p).dot(e) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    const Eigen::Vector2d cand = p + s * e;
    const double d2 = (y - cand).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = cand;
    }
  }
  return best;
}

// Dual active-set solve of min 0.5||y - y0||^2 s.t. A y <= b, i.e. the
// bound-constrained dual min_{l >= 0} 0.5 l^T AA^T l - l^T (A y0 - b).
// Returns the multipliers; the primal point is y0 - A^T lambda.
Eigen::VectorXd projection_multipliers(const Eigen::VectorXd& y0, const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& b) {
  const int mc = static_cast<int>(A.rows());
  const Eigen::MatrixXd G = A * A.transpose();
  const Eigen::VectorXd d = A * y0 - b;
  const double grad_tol = 1e-12 * (1.0 + d.cwiseAbs().maxCoeff());

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(mc);
  std::vector<char> in_active(mc, 0);
  const int max_iter = 100 * (mc + 2);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd grad = G * lambda - d;
    int enter = -1;
    double worst = -grad_tol;
    for (int i = 0; i < mc; ++i) {
      if (!in_active[i] && grad(i) < worst) {
        worst = grad(i);
        enter = i;
      }
    }
    if (enter < 0) return lambda;
    in_active[enter] = 1;

    for (int inner = 0; inner < max_iter; ++inner) {
      std::vector<int> act;
      for (int i = 0; i < mc; ++i)
        if (in_active[i]) act.push_back(i);
      const int na = static_cast<int>(act.size());
      Eigen::MatrixXd Ga(na, na);
      Eigen::VectorXd da(na);
      for (int r = 0; r < na; ++r) {
        da(r) = d(act[r]);
        for (int c = 0; c < na; ++c) Ga(r, c) = G(act[r], act[c]);
      }
      Ga.diagonal().array() += 1e-12;
      const Eigen::VectorXd trial = Ga.ldlt().solve(da);

      if ((trial.array() > 0.0).all()) {
        lambda.setZero();
        for (int r = 0; r < na; ++r) lambda(act[r]) = trial(r);
        break;
      }
      // Partial step until the first active multiplier reaches zero.
      double alpha = 1.0;
      for (int r = 0; r < na; ++r) {
        if (trial(r) <= 0.0) {
          const double cur = lambda(act[r]);
          const double denom = cur - trial(r);
          if (denom > 0.0) alpha = std::min(alpha, cur / denom);
        }
      }
      for (int r = 0; r < na; ++r) {
        lambda(act[r]) += alpha * (trial(r) - lambda(act[r]));
        if (lambda(act[r]) <= 1e-12) {
          lambda(act[r]) = 0.0;
          in_active[act[r]] = 0;
        }
      }
    }
  }
  throw std::invalid_argument("polytope projection did not converge (empty or ill-posed polytope)");
}

}  // namespace

UnsafeShape UnsafeShape::circle(double r, const Eigen::MatrixXd& C) {
  if (!(r > 0.0)) throw std::invalid_argument("circle radius must be positive");
  check_selector(C);
  UnsafeShape s;
  s.kind = Kind::kCircle;
  s.radius = r;
  s.C = C;
  return s;
}

UnsafeShape UnsafeShape::polygon(const Eigen::MatrixXd& verts, const Eigen::MatrixXd& C) {
  check_selector(C);
  if (C.rows() != 2) throw std::invalid_argument("polygon shapes require a planar (n_z = 2) selector");
  if (verts.rows() < 3 || verts.cols() != 2) throw std::invalid_argument("polygon needs >= 3 planar vertices");

  // Orient CCW via the shoelace sign.
  Eigen::MatrixXd v = verts;
  double area2 = 0.0;
  const int nv = static_cast<int>(v.rows());
  for (int i = 0; i < nv; ++i) {
    const auto p = v.row(i);
    const auto q = v.row((i + 1) % nv);
    area2 += p(0) * q(1) - q(0) * p(1);
  }
  if (std::abs(area2) < 1e-12) throw std::invalid_argument("polygon vertices are degenerate");
  if (area2 < 0.0) v = v.colwise().reverse().eval();

  UnsafeShape s;
  s.kind = Kind::kPolytope;
  s.C = C;
  s.vertices = v;
  s.A.resize(nv, 2);
  s.b.resize(nv);
  for (int i = 0; i < nv; ++i) {
    const Eigen::Vector2d p = v.row(i);
    const Eigen::Vector2d q = v.row((i + 1) % nv);
    Eigen::Vector2d normal(q.y() - p.y(), -(q.x() - p.x()));  // outward for CCW
    const double len = normal.norm();
    if (len < 1e-12) throw std::invalid_argument("polygon has a zero-length edge");
    normal /= len;
    s.A.row(i) = normal.transpose();
    s.b(i) = normal.dot(p);
  }
  return s;
}

UnsafeShape UnsafeShape::polytope(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::MatrixXd& C) {
  check_selector(C);
  if (A.rows() != b.size() || A.rows() == 0) throw std::invalid_argument("polytope A, b sizes mismatch");
  if (A.cols() != C.rows()) throw std::invalid_argument("polytope dimension must match selector rows");
  UnsafeShape s;
  s.kind = Kind::kPolytope;
  s.C = C;
  s.A = A;
  s.b = b;
  // Nonemptiness: one feasibility solve (projection of the origin must exist).
  project_onto_polytope(Eigen::VectorXd::Zero(A.cols()), A, b);
  return s;
}

double UnsafeShape::base_distance(const Eigen::VectorXd& w) const {
  if (kind == Kind::kCircle) return std::max(w.norm() - radius, 0.0);
  return (w - base_projection(w)).norm();
}

Eigen::VectorXd UnsafeShape::base_projection(const Eigen::VectorXd& w) const {
  if (kind == Kind::kCircle) {
    const double nrm = w.norm();
    if (nrm <= radius) return w;
    return w * (radius / nrm);
  }
  if (vertices.rows() >= 3) return project_polygon(w, vertices);
  return project_onto_polytope(w, A, b);
}

bool UnsafeShape::base_contains(const Eigen::VectorXd& w, double tol) const {
  if (kind == Kind::kCircle) return w.norm() <= radius + tol;
  return ((A * w - b).array() <= tol).all();
}

ObstacleProcess obstacle_step(const ObstacleProcess& o, double h, RngStream& rng) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  ObstacleProcess next = o;
  const Eigen::VectorXd xi = rng.normal_vector(static_cast<int>(o.z.size()));
  next.z = o.z + o.v * h + o.noise_std * std::sqrt(h) * xi;
  return next;
}

std::vector<Eigen::MatrixXd> sample_obstacle_predictions(const ObstacleProcess& o, int K, int N, double h,
                                                         RngStream& rng) {
  if (K < 1 || N < 1) throw std::invalid_argument("K and N must be >= 1");
  const int nz = static_cast<int>(o.z.size());
  std::vector<Eigen::MatrixXd> out;
  out.reserve(K);
  for (int j = 1; j <= K; ++j) {
    const Eigen::VectorXd mean = o.z + o.v * (j * h);
    const double std_j = o.noise_std * std::sqrt(j * h);
    Eigen::MatrixXd samples(nz, N);
    for (int s = 0; s < N; ++s) samples.col(s) = mean + std_j * rng.normal_vector(nz);
    out.push_back(std::move(samples));
  }
  return out;
}

double lifted_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& z, const UnsafeShape& shape) {
  return shape.base_distance(shape.C * x - z) / std::sqrt(2.0);
}

double lifted_distance(const LiftedSample& y, const UnsafeShape& shape) {
  return lifted_distance(y.x, y.z, shape);
}

Eigen::VectorXd project_onto_polytope(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& b) {
  if (A.rows() != b.size() || A.cols() != y.size()) throw std::invalid_argument("projection dimension mismatch");
  if (((A * y - b).array() <= 1e-12).all()) return y;  // interior/boundary point

  const Eigen::VectorXd lambda = projection_multipliers(y, A, b);
  const Eigen::VectorXd proj = y - A.transpose() * lambda;

  // KKT residual check.
  const double scale = 1.0 + y.norm() + b.cwiseAbs().maxCoeff();
  const Eigen::VectorXd slack = A * proj - b;
  if (slack.maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("polytope projection infeasible (empty polytope?)");
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > 1e-10 && std::abs(slack(i)) > 1e-8 * scale)
      throw std::invalid_argument("polytope projection failed complementarity check");
  }
  return proj;
}

double concentration_radius(const ConcentrationParams& params, long N, double delta_z) {
  if (!(params.alpha > 2.0 * params.p)) throw std::invalid_argument("alpha must exceed 2p");
  if (!(params.c1 > 0.0) || !(params.c2 > 0.0)) throw std::invalid_argument("c1, c2 must be positive");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (!(delta_z > 0.0 && delta_z < 1.0)) throw std::invalid_argument("delta_z must lie in (0,1)");

  const double log_term = std::max(std::log(params.c1 / delta_z), 0.0) / params.c2;
  const double base = log_term / static_cast<double>(N);
  const double two_p = 2.0 * params.p;
  const double exponent =
      static_cast<double>(N) >= log_term ? std::min(two_p / params.n_z, 0.5) : two_p / params.alpha;
  return std::pow(base, exponent);
}

}  // namespace drmpc
