#include "drmpc/rng.hpp"

#include <cmath>
#include <numbers>

namespace drmpc {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream RngStream::derive(std::uint64_t seed, std::uint64_t role, std::uint64_t instance) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ (role * 0xD1342543DE82EF95ULL));
  k = splitmix64(k ^ (instance * 0xAF251AF3B0F025B5ULL));
  return RngStream(k, 0);
}

std::uint64_t RngStream::next_raw() {
  ++counter_;
  return splitmix64(key_ + counter_ * kGamma);
}

double RngStream::uniform01() {
  // 53-bit mantissa, shifted into (0, 1).
  return (static_cast<double>(next_raw() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RngStream::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Eigen::MatrixXd RngStream::normal_matrix(int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill so normal_matrix(n, 1) replays normal_vector(n).
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

}  // namespace drmpc
