#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "drmpc/dynamics.hpp"
#include "drmpc/environment.hpp"
#include "drmpc/l1_adaptive.hpp"
#include "drmpc/planner.hpp"
#include "drmpc/presets.hpp"
#include "drmpc/reference.hpp"

namespace drmpc {

// Scenario-file problem: carries the offending line when one exists so the
// CLI can point at it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = -1;
};

// Flat `dotted.key = value` text format with '#' comments. Values are
// scalars, names, or whitespace-separated numeric lists. Unknown keys are
// rejected after loading so typos fail loudly.
class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  long get_int(const std::string& key);
  long get_int(const std::string& key, long fallback);
  Eigen::VectorXd get_vector(const std::string& key, int expected_size = -1);
  Eigen::VectorXd get_vector(const std::string& key, int expected_size, const Eigen::VectorXd& fallback);

  int line_of(const std::string& key) const;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  // Throws ConfigError naming the first key that was never consumed.
  void reject_unused() const;

 private:
  struct Entry {
    std::string value;
    int line = -1;
    mutable bool used = false;
  };
  std::map<std::string, Entry> entries_;
  std::string origin_;
};

enum class Method { kNominal, kTrueNoL1, kTrueWithL1 };
Method parse_method(const std::string& name);
const char* to_string(Method method);

// A fully resolved scenario: raw keys plus the derived model, gains, and
// obstacle processes, validated and ready to simulate.
struct ScenarioConfig {
  std::string name;
  SystemPreset system;
  std::string uncertainty_preset;
  UncertaintySpec uncertainty;
  L1Config l1;
  MPCConfig mpc;
  DiscreteModel model;  // system discretized at the planning period
  ReferenceSpec reference;
  std::vector<ObstacleProcess> obstacles;

  double total_time = 10.0;
  int runs = 20;
  std::uint64_t seed = 1;
  Method method = Method::kTrueWithL1;
  double divergence_threshold = 1e6;

  double rho_x_certificate = 0.02;  // configured system radius for tube checks
  int ensemble_members = 0;

  int planner_steps() const;  // T / dt
  int inner_steps() const;    // dt / Ts

  static ScenarioConfig load(const std::string& path);
  static ScenarioConfig from_map(ConfigMap& map);
};

}  // namespace drmpc
