#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace drmpc {

// Counter-based random stream. Each draw hashes (key, counter) with the
// splitmix64 finalizer, so a stream is a value: copy it, replay it, or
// hand it to another thread without touching global state. All stochastic
// components of a run (true noise, nominal noise, obstacle noise, planner
// sampling) own separate streams derived from one master seed, which keeps
// runs bitwise reproducible regardless of scheduling.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  // Derives an independent stream from (seed, role, instance). Role ids are
  // small enums (see StreamRole); instance distinguishes e.g. Monte Carlo runs.
  static RngStream derive(std::uint64_t seed, std::uint64_t role, std::uint64_t instance = 0);

  // Uniform draw in the open interval (0, 1).
  double uniform01();

  // Standard normal via Box-Muller; consumes exactly two uniform draws.
  double normal();

  Eigen::VectorXd normal_vector(int n);
  Eigen::MatrixXd normal_matrix(int rows, int cols);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t next_raw();

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

enum class StreamRole : std::uint64_t {
  kTrueNoise = 1,
  kNominalNoise = 2,
  kObstacleNoise = 3,
  kSamplingNoise = 4,
  kProbe = 5,
};

inline RngStream derive_stream(std::uint64_t seed, StreamRole role, std::uint64_t instance = 0) {
  return RngStream::derive(seed, static_cast<std::uint64_t>(role), instance);
}

}  // namespace drmpc
