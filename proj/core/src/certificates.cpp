#include "drmpc/certificates.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace drmpc {

double assignment_cost(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols() || cost.rows() == 0) throw std::invalid_argument("cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting paths with dual potentials (1-based sentinels).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

namespace {

Eigen::MatrixXd pad_by_resampling(const Eigen::MatrixXd& pts, int target) {
  Eigen::MatrixXd out(pts.rows(), target);
  for (int i = 0; i < target; ++i) out.col(i) = pts.col(i % pts.cols());
  return out;
}

}  // namespace

double empirical_wasserstein(const Ensemble& a, const Ensemble& b, int p, bool* padded, int size_cap) {
  if (a.size() < 1 || b.size() < 1) throw std::invalid_argument("ensembles must be nonempty");
  if (a.dim() != b.dim()) throw std::invalid_argument("ensembles must share a dimension");
  if (p < 1) throw std::invalid_argument("half-order p must be >= 1");
  const int M = std::max(a.size(), b.size());
  if (M > size_cap)
    throw std::invalid_argument("ensemble size " + std::to_string(M) + " exceeds cap " +
                                std::to_string(size_cap) + "; subsample before comparing");

  Eigen::MatrixXd pa = a.size() == M ? a.points : pad_by_resampling(a.points, M);
  Eigen::MatrixXd pb = b.size() == M ? b.points : pad_by_resampling(b.points, M);
  if (padded) *padded = a.size() != b.size();

  const double order = 2.0 * p;
  Eigen::MatrixXd cost(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) cost(i, j) = std::pow((pa.col(i) - pb.col(j)).norm(), order);

  const double total = assignment_cost(cost);
  return std::pow(total / M, 1.0 / order);
}

AmbiguityRadii compose_radius(double rho_x, double rho_z) {
  if (rho_x < 0.0 || rho_z < 0.0) throw std::invalid_argument("radii must be nonnegative");
  return AmbiguityRadii{rho_x, rho_z, rho_x + rho_z};
}

TubeReport check_tube(const std::vector<double>& times, const std::vector<Ensemble>& true_ensembles,
                      const std::vector<Ensemble>& nominal_ensembles, double rho_x, int p) {
  if (times.size() != true_ensembles.size() || times.size() != nominal_ensembles.size())
    throw std::invalid_argument("time grids of the two ensembles are misaligned");
  if (times.empty()) throw std::invalid_argument("empty tube input");

  TubeReport report;
  report.rho_x = rho_x;
  report.ensemble_size = true_ensembles.front().size();
  int within = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (true_ensembles[k].size() != nominal_ensembles[k].size())
      throw std::invalid_argument("ensemble sizes differ at step " + std::to_string(k));
    const double w = empirical_wasserstein(true_ensembles[k], nominal_ensembles[k], p);
    report.times.push_back(times[k]);
    report.distances.push_back(w);
    report.max_distance = std::max(report.max_distance, w);
    if (w <= rho_x) ++within;
  }
  report.within_fraction = static_cast<double>(within) / static_cast<double>(times.size());
  return report;
}

void write_tube_csv(const TubeReport& report, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "t,W_2p,rho_x,within_tube\n");
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%d\n", report.times[k], report.distances[k], report.rho_x,
                 report.distances[k] <= report.rho_x ? 1 : 0);
  }
  std::fclose(f);
}

}  // namespace drmpc
