#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace drmpc {

// Uniformly weighted empirical measure: one point per column.
struct Ensemble {
  Eigen::MatrixXd points;  // dim x M

  int size() const { return static_cast<int>(points.cols()); }
  int dim() const { return static_cast<int>(points.rows()); }
};

struct AmbiguityRadii {
  double rho_x = 0.0;
  double rho_z = 0.0;
  double rho_y = 0.0;  // rho_x + rho_z
};

struct TubeReport {
  std::vector<double> times;
  std::vector<double> distances;  // W_2p(true_t, nominal_t)
  double max_distance = 0.0;
  double within_fraction = 0.0;  // fraction of steps with distance <= rho_x
  double rho_x = 0.0;
  int ensemble_size = 0;
};

// Exact minimum cost of a perfect matching on a square cost matrix
// (Jonker-Volgenant shortest augmenting paths).
double assignment_cost(const Eigen::MatrixXd& cost);

// Exact order-2p Wasserstein distance between equal-size uniform empirical
// measures via minimum-cost matching with cost ||a_i - b_j||^{2p}. Unequal
// sizes are padded by deterministic resampling (flagged through `padded`).
// Sizes above size_cap are rejected with a size error suggesting subsampling.
double empirical_wasserstein(const Ensemble& a, const Ensemble& b, int p, bool* padded = nullptr,
                             int size_cap = 2000);

AmbiguityRadii compose_radius(double rho_x, double rho_z);

// Per-step empirical Wasserstein between aligned true/nominal ensembles,
// compared against the configured system radius.
TubeReport check_tube(const std::vector<double>& times, const std::vector<Ensemble>& true_ensembles,
                      const std::vector<Ensemble>& nominal_ensembles, double rho_x, int p);

// CSV emission: t, W_2p, rho_x, within_tube.
void write_tube_csv(const TubeReport& report, const std::string& path);

}  // namespace drmpc
