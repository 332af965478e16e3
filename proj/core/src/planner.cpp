#include "drmpc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace drmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_psd(const Eigen::MatrixXd& M, const char* name, bool strict) {
  if (M.rows() != M.cols()) throw std::invalid_argument(std::string(name) + " must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  const double scale = 1.0 + es.eigenvalues().cwiseAbs().maxCoeff();
  const double min_eig = es.eigenvalues().minCoeff();
  if (strict ? (min_eig <= 1e-12 * scale) : (min_eig < -1e-9 * scale))
    throw std::invalid_argument(std::string(name) + (strict ? " must be positive definite" : " must be PSD"));
}

// Cholesky factor with escalating jitter for marginally PSD covariances.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& sigma) {
  const int n = static_cast<int>(sigma.rows());
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = jitter == 0.0 ? 1e-12 : jitter * 100.0;
  }
  throw std::runtime_error("covariance is not PSD even with jitter");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scaled(double x, double tau) {
  const double r = x / tau;
  if (r > 40.0) return x;
  if (r < -40.0) return 0.0;
  return tau * std::log1p(std::exp(r));
}

// Smoothed sample CVaR: the hinge in the eta-representation is replaced by a
// softplus at temperature tau, and the inner minimization over eta is solved
// by a safeguarded Newton iteration on its stationarity condition
// sum_s sigmoid((v_s - eta)/tau) = beta N. By the envelope theorem the
// derivative w.r.t. v_s is sigmoid((v_s - eta*)/tau) / (beta N).
double smoothed_cvar(const std::vector<double>& v, double beta, double tau, std::vector<double>* weights) {
  const int N = static_cast<int>(v.size());
  const double target = beta * N;
  auto phi = [&](double eta, double* dphi) {
    double s = 0.0, ds = 0.0;
    for (double vi : v) {
      const double sig = stable_sigmoid((vi - eta) / tau);
      s += sig;
      ds += sig * (1.0 - sig);
    }
    if (dphi) *dphi = -ds / tau;
    return s - target;
  };

  double lo = *std::min_element(v.begin(), v.end()) - 50.0 * tau;
  double hi = *std::max_element(v.begin(), v.end()) + 50.0 * tau;
  double eta = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double dphi = 0.0;
    const double f = phi(eta, &dphi);
    if (std::abs(f) <= 1e-12 * N) break;
    if (f > 0.0)
      lo = eta;  // too much mass above eta: raise it
    else
      hi = eta;
    double next = dphi < -1e-300 ? eta - f / dphi : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-14 * (1.0 + std::abs(eta))) {
      eta = next;
      break;
    }
    eta = next;
  }

  double acc = 0.0;
  if (weights) weights->resize(N);
  for (int s = 0; s < N; ++s) {
    acc += softplus_scaled(v[s] - eta, tau);
    if (weights) (*weights)[s] = stable_sigmoid((v[s] - eta) / tau) / target;
  }
  return eta + acc / target;
}

double al_penalty(double c, double lambda, double nu, double* dpsi_dc) {
  const double t = std::max(0.0, lambda + nu * c);
  if (dpsi_dc) *dpsi_dc = t;
  return (t * t - lambda * lambda) / (2.0 * nu);
}

struct SpgStats {
  double f = 0.0;
  double pg_norm = 0.0;
  int iters = 0;
};

// Spectral projected gradient with nonmonotone line search on a box.
template <class ValueGrad>
SpgStats spg_minimize(ValueGrad&& value_grad, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi, int max_iter, double pg_tol) {
  auto clamp = [&](Eigen::VectorXd v) {
    for (int i = 0; i < v.size(); ++i) v(i) = std::min(std::max(v(i), lo(i)), hi(i));
    return v;
  };

  x = clamp(x);
  Eigen::VectorXd g(x.size()), g_new(x.size());
  double f = value_grad(x, g);
  std::deque<double> history{f};
  double alpha = 1.0 / std::max(1e-12, g.cwiseAbs().maxCoeff());

  SpgStats stats;
  for (int it = 0; it < max_iter; ++it) {
    stats.pg_norm = (clamp(x - g) - x).cwiseAbs().maxCoeff();
    if (stats.pg_norm <= pg_tol) break;

    const Eigen::VectorXd d = clamp(x - alpha * g) - x;
    const double slope = g.dot(d);
    if (slope >= 0.0) {
      alpha = 1.0 / std::max(1e-12, g.cwiseAbs().maxCoeff());
      continue;
    }
    const double f_ref = *std::max_element(history.begin(), history.end());
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      x_new = x + step * d;
      f_new = value_grad(x_new, g_new);
      if (f_new <= f_ref + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    alpha = sy > 1e-12 ? std::min(std::max(s.squaredNorm() / sy, 1e-10), 1e10) : 2.0 * alpha;

    x = std::move(x_new);
    g = g_new;
    f = f_new;
    history.push_back(f);
    if (history.size() > 10) history.pop_front();
    ++stats.iters;
  }
  stats.f = f;
  return stats;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kMaxIter: return "max_iter";
  }
  return "unknown";
}

void MPCConfig::validate(int n, int m) const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (p < 1) throw std::invalid_argument("half-order p must be >= 1");
  if (rho_y < 0.0) throw std::invalid_argument("rho_y must be nonnegative");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (Q.rows() != n || R.rows() != m || Q_f.rows() != n) throw std::invalid_argument("cost matrix dimensions");
  check_psd(Q, "Q", false);
  check_psd(Q_f, "Q_f", false);
  check_psd(R, "R", true);
  if (u_min.size() != m || u_max.size() != m || x_min.size() != n || x_max.size() != n)
    throw std::invalid_argument("box bound dimensions");
  if ((u_min.array() > u_max.array()).any() || (x_min.array() > x_max.array()).any())
    throw std::invalid_argument("box bounds must satisfy lo <= hi");
}

double MPCConfig::rho_pow() const { return std::pow(rho_y, 2.0 * p); }

NoiseRealizations draw_noise_realizations(int K, int N, int n, const std::vector<ObstacleProcess>& obstacles,
                                          double dt, RngStream& rng) {
  if (K < 1 || N < 1) throw std::invalid_argument("K and N must be >= 1");
  NoiseRealizations noise;
  noise.xi.reserve(K);
  for (int j = 0; j < K; ++j) noise.xi.push_back(rng.normal_matrix(n, N));
  noise.z_hat.reserve(obstacles.size());
  for (const auto& o : obstacles) noise.z_hat.push_back(sample_obstacle_predictions(o, K, N, dt, rng));
  return noise;
}

ReferenceWindow ReferenceWindow::zero(int K, int n, int m) {
  ReferenceWindow ref;
  ref.x.assign(K + 1, Eigen::VectorXd::Zero(n));
  ref.u.assign(K, Eigen::VectorXd::Zero(m));
  return ref;
}

std::vector<Eigen::VectorXd> propagate_mean(const DiscreteModel& model, const Eigen::VectorXd& mu0,
                                            const std::vector<Eigen::VectorXd>& u_seq) {
  std::vector<Eigen::VectorXd> mu;
  mu.reserve(u_seq.size() + 1);
  mu.push_back(mu0);
  for (const auto& u : u_seq) mu.push_back(model.A_d * mu.back() + model.B_d * u);
  return mu;
}

CovariancePlan propagate_covariance(const DiscreteModel& model, const Eigen::MatrixXd& sigma0, int K) {
  CovariancePlan plan;
  plan.sigma_seq.reserve(K + 1);
  plan.sigma_seq.push_back(0.5 * (sigma0 + sigma0.transpose()));
  for (int j = 0; j < K; ++j) {
    Eigen::MatrixXd next = model.A_d * plan.sigma_seq.back() * model.A_d.transpose() + model.Sigma_d;
    plan.sigma_seq.push_back(0.5 * (next + next.transpose()));
  }
  return plan;
}

std::vector<std::vector<LiftedSample>> sample_lifted(const std::vector<Eigen::VectorXd>& mu_seq,
                                                     const CovariancePlan& cov,
                                                     const std::vector<Eigen::MatrixXd>& xi,
                                                     const std::vector<Eigen::MatrixXd>& z_hat_obstacle) {
  const int K = static_cast<int>(xi.size());
  if (mu_seq.size() != static_cast<std::size_t>(K + 1) || cov.sigma_seq.size() != static_cast<std::size_t>(K + 1) ||
      z_hat_obstacle.size() != static_cast<std::size_t>(K))
    throw std::invalid_argument("sample_lifted: inconsistent horizon lengths");

  std::vector<std::vector<LiftedSample>> out(K);
  for (int j = 1; j <= K; ++j) {
    const Eigen::MatrixXd L = cholesky_with_jitter(cov.sigma_seq[j]);
    const Eigen::MatrixXd offsets = L * xi[j - 1];
    const int N = static_cast<int>(offsets.cols());
    out[j - 1].resize(N);
    for (int s = 0; s < N; ++s) {
      out[j - 1][s].x = mu_seq[j] + offsets.col(s);
      out[j - 1][s].z = z_hat_obstacle[j - 1].col(s);
    }
  }
  return out;
}

double cvar_saa(std::vector<double> values, double beta, double* eta_out) {
  if (values.empty()) throw std::invalid_argument("cvar_saa: empty sample set");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  const int N = static_cast<int>(values.size());
  std::sort(values.begin(), values.end());
  // The minimizer of eta + E[(V - eta)_+]/beta is the ceil((1-beta)N)-th
  // order statistic.
  int idx = static_cast<int>(std::ceil((1.0 - beta) * N - 1e-9));
  idx = std::min(std::max(idx, 1), N);
  const double eta = values[idx - 1];
  double tail = 0.0;
  for (int s = idx; s < N; ++s) tail += values[s] - eta;
  if (eta_out) *eta_out = eta;
  return eta + tail / (beta * N);
}

double cvar_constraint_residual(const std::vector<LiftedSample>& samples, const UnsafeShape& shape,
                                const MPCConfig& cfg, double* eta_out) {
  if (samples.empty()) throw std::invalid_argument("cvar_constraint_residual: empty sample set");
  std::vector<double> v(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s)
    v[s] = -std::pow(lifted_distance(samples[s], shape), 2.0 * cfg.p);
  return cvar_saa(std::move(v), cfg.beta, eta_out) + cfg.rho_pow() / cfg.beta;
}

double worst_case_violation(const std::vector<double>& dist2p, double rho2p) {
  if (dist2p.empty()) throw std::invalid_argument("worst_case_violation: empty distance set");
  if (rho2p < 0.0) throw std::invalid_argument("rho must be nonnegative");
  std::vector<double> d = dist2p;
  std::sort(d.begin(), d.end());
  const int N = static_cast<int>(d.size());
  const double budget = N * rho2p;
  const double tol = 1e-12 * (1.0 + budget);

  double spent = 0.0;
  int k = 0;
  while (k < N && spent + d[k] <= budget + tol) spent += d[k++];
  double frac = 0.0;
  if (k < N && d[k] > 0.0) frac = std::clamp((budget - spent) / d[k], 0.0, 1.0);
  return (k + frac) / N;
}

namespace planner_detail {

CondensedProblem::CondensedProblem(const DiscreteModel& model, const MPCConfig& cfg, const Eigen::VectorXd& x0,
                                   const ReferenceWindow& ref, const std::vector<UnsafeShape>& shapes,
                                   const NoiseRealizations& noise)
    : model_(model), cfg_(cfg), x0_(x0), ref_(ref), shapes_(shapes) {
  n_ = model.n();
  m_ = model.m();
  K_ = cfg.horizon;
  N_ = cfg.samples;
  cfg_.validate(n_, m_);
  model_.validate();
  if (!x0.allFinite() || x0.size() != n_) throw std::invalid_argument("x0 must be finite with dimension n");
  if (ref.x.size() != static_cast<std::size_t>(K_ + 1) || ref.u.size() != static_cast<std::size_t>(K_))
    throw std::invalid_argument("reference window must span the horizon");
  if (!shapes.empty()) {
    if (noise.xi.size() != static_cast<std::size_t>(K_)) throw std::invalid_argument("noise.xi must have K stages");
    if (noise.z_hat.size() != shapes.size())
      throw std::invalid_argument("noise.z_hat must have one entry per obstacle");
  }

  // Frozen sample offsets relative to the rolled mean: C L_j xi - z_hat.
  if (!shapes.empty()) {
    const CovariancePlan cov = propagate_covariance(model_, Eigen::MatrixXd::Zero(n_, n_), K_);
    std::vector<Eigen::MatrixXd> offsets(K_);
    for (int j = 1; j <= K_; ++j) {
      if (noise.xi[j - 1].rows() != n_ || noise.xi[j - 1].cols() != N_)
        throw std::invalid_argument("noise.xi entries must be n x N");
      offsets[j - 1] = cholesky_with_jitter(cov.sigma_seq[j]) * noise.xi[j - 1];
    }
    rel_offsets_.resize(shapes.size());
    for (std::size_t o = 0; o < shapes.size(); ++o) {
      if (noise.z_hat[o].size() != static_cast<std::size_t>(K_))
        throw std::invalid_argument("noise.z_hat entries must have K stages");
      rel_offsets_[o].resize(K_);
      for (int j = 1; j <= K_; ++j)
        rel_offsets_[o][j - 1] = shapes[o].C * offsets[j - 1] - noise.z_hat[o][j - 1];
    }
  }
  num_cvar_ = static_cast<int>(shapes_.size()) * K_;

  for (int j = 1; j <= K_; ++j) {
    for (int i = 0; i < n_; ++i) {
      if (std::isfinite(cfg_.x_max(i))) box_faces_.emplace_back(j, i + 1);   // +: mu_j(i) <= x_max(i)
      if (std::isfinite(cfg_.x_min(i))) box_faces_.emplace_back(j, -(i + 1));  // -: mu_j(i) >= x_min(i)
    }
  }
  num_box_ = static_cast<int>(box_faces_.size());

  lo_.resize(K_ * m_);
  hi_.resize(K_ * m_);
  for (int j = 0; j < K_; ++j) {
    lo_.segment(j * m_, m_) = cfg_.u_min;
    hi_.segment(j * m_, m_) = cfg_.u_max;
  }
}

void CondensedProblem::stage_values(int j, int o, const Eigen::MatrixXd& mu, std::vector<double>& v,
                                    Eigen::MatrixXd* dv_dg) const {
  const UnsafeShape& shape = shapes_[o];
  const Eigen::MatrixXd& rel = rel_offsets_[o][j - 1];
  const int nz = shape.nz();
  const Eigen::VectorXd c_mu = shape.C * mu.col(j);
  const double p = cfg_.p;

  v.resize(N_);
  if (dv_dg) dv_dg->setZero(nz, N_);
  Eigen::VectorXd g(nz), diff(nz);
  for (int s = 0; s < N_; ++s) {
    g = c_mu + rel.col(s);
    // q = half squared base distance = squared lifted distance; for a convex
    // base set its gradient in g is exactly g - proj_S(g).
    diff = g - shape.base_projection(g);
    const double q = 0.5 * diff.squaredNorm();
    if (q > 0.0) {
      v[s] = -std::pow(q, p);
      if (dv_dg) dv_dg->col(s) = (-p * std::pow(q, p - 1.0)) * diff;
    } else {
      v[s] = 0.0;
    }
  }
}

double CondensedProblem::al_value_grad(const Eigen::VectorXd& u, double tau, const Eigen::VectorXd& lambda,
                                       double nu, Eigen::VectorXd& grad) {
  if (u.size() != K_ * m_) throw std::invalid_argument("al_value_grad: wrong input dimension");
  if (lambda.size() != num_constraints()) throw std::invalid_argument("al_value_grad: wrong multiplier count");

  Eigen::MatrixXd mu(n_, K_ + 1);
  mu.col(0) = x0_;
  for (int j = 0; j < K_; ++j) mu.col(j + 1) = model_.A_d * mu.col(j) + model_.B_d * u.segment(j * m_, m_);

  Eigen::MatrixXd su = Eigen::MatrixXd::Zero(n_, K_ + 1);  // d(value)/d(mu_j)
  Eigen::MatrixXd gu = Eigen::MatrixXd::Zero(m_, K_);      // direct d(value)/d(u_j)
  double value = 0.0;

  for (int j = 0; j < K_; ++j) {
    const Eigen::VectorXd ex = mu.col(j) - ref_.x[j];
    const Eigen::VectorXd eu = u.segment(j * m_, m_) - ref_.u[j];
    value += ex.dot(cfg_.Q * ex) + eu.dot(cfg_.R * eu);
    if (j >= 1) su.col(j) += 2.0 * (cfg_.Q * ex);
    gu.col(j) += 2.0 * (cfg_.R * eu);
  }
  const Eigen::VectorXd ef = mu.col(K_) - ref_.x[K_];
  value += ef.dot(cfg_.Q_f * ef);
  su.col(K_) += 2.0 * (cfg_.Q_f * ef);

  const double rho_term = cfg_.rho_pow() / cfg_.beta;
  std::vector<double> v;
  std::vector<double> weights;
  Eigen::MatrixXd dv_dg;
  int ci = 0;
  for (std::size_t o = 0; o < shapes_.size(); ++o) {
    for (int j = 1; j <= K_; ++j, ++ci) {
      stage_values(j, static_cast<int>(o), mu, v, &dv_dg);
      const double cvar = smoothed_cvar(v, cfg_.beta, tau, &weights);
      const double c = cvar + rho_term;
      double dpsi = 0.0;
      value += al_penalty(c, lambda(ci), nu, &dpsi);
      if (dpsi > 0.0) {
        Eigen::VectorXd wg = Eigen::VectorXd::Zero(shapes_[o].nz());
        for (int s = 0; s < N_; ++s) wg += weights[s] * dv_dg.col(s);
        su.col(j) += dpsi * (shapes_[o].C.transpose() * wg);
      }
    }
  }
  for (const auto& [stage, face] : box_faces_) {
    const int axis = std::abs(face) - 1;
    const double c = face > 0 ? mu(axis, stage) - cfg_.x_max(axis) : cfg_.x_min(axis) - mu(axis, stage);
    double dpsi = 0.0;
    value += al_penalty(c, lambda(ci), nu, &dpsi);
    su(axis, stage) += face > 0 ? dpsi : -dpsi;
    ++ci;
  }

  grad.resize(K_ * m_);
  Eigen::VectorXd q = su.col(K_);
  for (int j = K_ - 1; j >= 0; --j) {
    grad.segment(j * m_, m_) = gu.col(j) + model_.B_d.transpose() * q;
    q = su.col(j) + model_.A_d.transpose() * q;
  }
  return value;
}

double CondensedProblem::objective(const Eigen::VectorXd& u) const {
  Eigen::VectorXd mu = x0_;
  double value = 0.0;
  for (int j = 0; j < K_; ++j) {
    const Eigen::VectorXd ex = mu - ref_.x[j];
    const Eigen::VectorXd eu = u.segment(j * m_, m_) - ref_.u[j];
    value += ex.dot(cfg_.Q * ex) + eu.dot(cfg_.R * eu);
    mu = model_.A_d * mu + model_.B_d * u.segment(j * m_, m_);
  }
  const Eigen::VectorXd ef = mu - ref_.x[K_];
  return value + ef.dot(cfg_.Q_f * ef);
}

Eigen::VectorXd CondensedProblem::exact_residuals(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd mu(n_, K_ + 1);
  mu.col(0) = x0_;
  for (int j = 0; j < K_; ++j) mu.col(j + 1) = model_.A_d * mu.col(j) + model_.B_d * u.segment(j * m_, m_);

  Eigen::VectorXd res(num_constraints());
  const double rho_term = cfg_.rho_pow() / cfg_.beta;
  std::vector<double> v;
  int ci = 0;
  for (std::size_t o = 0; o < shapes_.size(); ++o) {
    for (int j = 1; j <= K_; ++j, ++ci) {
      stage_values(j, static_cast<int>(o), mu, v, nullptr);
      res(ci) = cvar_saa(v, cfg_.beta) + rho_term;
    }
  }
  for (const auto& [stage, face] : box_faces_) {
    const int axis = std::abs(face) - 1;
    res(ci++) = face > 0 ? mu(axis, stage) - cfg_.x_max(axis) : cfg_.x_min(axis) - mu(axis, stage);
  }
  return res;
}

Eigen::MatrixXd CondensedProblem::eta_values(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd mu(n_, K_ + 1);
  mu.col(0) = x0_;
  for (int j = 0; j < K_; ++j) mu.col(j + 1) = model_.A_d * mu.col(j) + model_.B_d * u.segment(j * m_, m_);

  Eigen::MatrixXd eta = Eigen::MatrixXd::Constant(K_, static_cast<int>(shapes_.size()),
                                                  std::numeric_limits<double>::quiet_NaN());
  std::vector<double> v;
  for (std::size_t o = 0; o < shapes_.size(); ++o) {
    for (int j = 1; j <= K_; ++j) {
      stage_values(j, static_cast<int>(o), mu, v, nullptr);
      double eta_j = 0.0;
      cvar_saa(v, cfg_.beta, &eta_j);
      eta(j - 1, static_cast<int>(o)) = eta_j;
    }
  }
  return eta;
}

std::vector<Eigen::VectorXd> CondensedProblem::roll_mean(const Eigen::VectorXd& u) const {
  std::vector<Eigen::VectorXd> u_seq(K_);
  for (int j = 0; j < K_; ++j) u_seq[j] = u.segment(j * m_, m_);
  return propagate_mean(model_, x0_, u_seq);
}

}  // namespace planner_detail

MPCSolution solve_drmpc(const Eigen::VectorXd& x0, const DiscreteModel& model, const MPCConfig& cfg,
                        const ReferenceWindow& ref, const std::vector<UnsafeShape>& shapes,
                        const NoiseRealizations& noise, const std::vector<Eigen::VectorXd>* warm_u) {
  planner_detail::CondensedProblem problem(model, cfg, x0, ref, shapes, noise);
  const SolverOptions& opt = cfg.solver;
  const int K = cfg.horizon;
  const int m = model.m();

  Eigen::VectorXd u(K * m);
  if (warm_u && warm_u->size() == static_cast<std::size_t>(K)) {
    for (int j = 0; j < K; ++j) u.segment(j * m, m) = (*warm_u)[j];
  } else {
    for (int j = 0; j < K; ++j) u.segment(j * m, m) = ref.u[j];  // feedforward start
  }

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(problem.num_constraints());
  double nu = opt.nu_init;
  double tau = opt.tau_init;

  MPCSolution sol;
  double prev_viol = kInf;
  int stall = 0;
  int total_inner = 0;
  bool budget_exhausted = false;
  double pg_norm = kInf;

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    auto value_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      return problem.al_value_grad(x, tau, lambda, nu, g);
    };
    const auto stats = spg_minimize(value_grad, u, problem.lower_bounds(), problem.upper_bounds(),
                                    opt.max_inner, opt.pg_tol);
    total_inner += stats.iters;
    pg_norm = stats.pg_norm;
    sol.outer_iterations = outer + 1;

    const Eigen::VectorXd res = problem.exact_residuals(u);
    const double viol = res.size() > 0 ? std::max(res.maxCoeff(), 0.0) : 0.0;

    if (viol <= opt.feas_tol) {
      if (pg_norm <= 10.0 * opt.pg_tol || problem.num_constraints() == 0) break;
      // Feasible but not yet stationary: another pass with the current
      // multipliers sharpens the iterate.
      if (outer == opt.max_outer - 1) break;
    } else {
      if (viol > 0.9 * prev_viol) {
        ++stall;
        nu = std::min(nu * opt.nu_growth, opt.nu_max);
      } else {
        stall = 0;
      }
      if (stall >= opt.stall_limit && nu >= opt.nu_max && outer >= 3) break;
    }
    prev_viol = std::min(prev_viol, viol);

    for (int i = 0; i < res.size(); ++i) lambda(i) = std::max(0.0, lambda(i) + nu * res(i));
    tau = std::max(opt.tau_min, tau * opt.tau_decay);
    if (total_inner >= opt.max_outer * opt.max_inner) {
      budget_exhausted = true;
      break;
    }
  }

  const Eigen::VectorXd res = problem.exact_residuals(u);
  sol.max_violation = res.size() > 0 ? std::max(res.maxCoeff(), 0.0) : 0.0;
  sol.inner_iterations = total_inner;
  sol.u_seq.resize(K);
  for (int j = 0; j < K; ++j) sol.u_seq[j] = u.segment(j * m, m);
  sol.mu_seq = problem.roll_mean(u);
  sol.eta = problem.eta_values(u);
  sol.objective = problem.objective(u);
  if (sol.max_violation <= opt.feas_tol)
    sol.status = pg_norm <= 10.0 * opt.pg_tol ? SolveStatus::kOptimal : SolveStatus::kFeasible;
  else
    sol.status = budget_exhausted ? SolveStatus::kMaxIter : SolveStatus::kInfeasible;
  return sol;
}

RecedingHorizonPlanner::RecedingHorizonPlanner(DiscreteModel model, MPCConfig cfg, std::vector<UnsafeShape> shapes)
    : model_(std::move(model)), cfg_(std::move(cfg)), shapes_(std::move(shapes)) {
  cfg_.validate(model_.n(), model_.m());
}

void RecedingHorizonPlanner::reset() {
  previous_.reset();
  fallback_shift_ = 0;
}

PolicyStep RecedingHorizonPlanner::policy(const Eigen::VectorXd& x_meas, const ReferenceWindow& ref,
                                          const NoiseRealizations& noise) {
  std::optional<std::vector<Eigen::VectorXd>> warm;
  if (previous_) {
    std::vector<Eigen::VectorXd> shifted(previous_->u_seq.begin() + 1, previous_->u_seq.end());
    shifted.push_back(previous_->u_seq.back());
    warm = std::move(shifted);
  }

  PolicyStep step;
  step.solution = solve_drmpc(x_meas, model_, cfg_, ref, shapes_, noise, warm ? &*warm : nullptr);

  if (step.solution.status == SolveStatus::kOptimal || step.solution.status == SolveStatus::kFeasible) {
    previous_ = step.solution;
    fallback_shift_ = 0;
    step.u0 = step.solution.u_seq.front();
    step.x_bar0 = step.solution.mu_seq.front();
    return step;
  }

  // Shift-and-hold fallback: reuse the last accepted plan, advanced one stage
  // per failed solve, and flag the step for the failure bookkeeping.
  step.fallback = true;
  ++fallback_shift_;
  if (previous_ && fallback_shift_ < static_cast<int>(previous_->u_seq.size())) {
    step.u0 = previous_->u_seq[fallback_shift_];
    step.x_bar0 = previous_->mu_seq[fallback_shift_];
  } else {
    step.u0 = Eigen::VectorXd::Zero(model_.m());
    step.x_bar0 = x_meas;
  }
  return step;
}

}  // namespace drmpc
