#include "drmpc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace drmpc {
namespace {

bool is_integer_multiple(double value, double base) {
  if (!(base > 0.0)) return false;
  const double ratio = value / base;
  return std::abs(ratio - std::round(ratio)) <= 1e-6 * std::max(1.0, std::abs(ratio));
}

double parse_number(const std::string& token, const std::string& key, int line) {
  if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number '" + token + "'", line);
  }
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

ConfigMap ConfigMap::from_string(const std::string& text, const std::string& origin) {
  ConfigMap map;
  map.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (value.empty()) throw ConfigError("key '" + key + "' has an empty value", line_no);
    if (map.entries_.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    map.entries_[key] = Entry{value, line_no, false};
  }
  return map;
}

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) > 0; }

int ConfigMap::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? -1 : it->second.line;
}

std::string ConfigMap::get_string(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
  it->second.used = true;
  return it->second.value;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
  return has(key) ? get_string(key) : fallback;
}

double ConfigMap::get_double(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
  it->second.used = true;
  return parse_number(it->second.value, key, it->second.line);
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  return has(key) ? get_double(key) : fallback;
}

long ConfigMap::get_int(const std::string& key) {
  const double v = get_double(key);
  if (std::abs(v - std::round(v)) > 1e-9) throw ConfigError("key '" + key + "' must be an integer", line_of(key));
  return static_cast<long>(std::llround(v));
}

long ConfigMap::get_int(const std::string& key, long fallback) { return has(key) ? get_int(key) : fallback; }

Eigen::VectorXd ConfigMap::get_vector(const std::string& key, int expected_size) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
  it->second.used = true;
  std::istringstream in(it->second.value);
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_number(token, key, it->second.line));
  if (expected_size >= 0 && static_cast<int>(values.size()) != expected_size)
    throw ConfigError("key '" + key + "' expects " + std::to_string(expected_size) + " numbers, got " +
                          std::to_string(values.size()),
                      it->second.line);
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Eigen::VectorXd ConfigMap::get_vector(const std::string& key, int expected_size, const Eigen::VectorXd& fallback) {
  return has(key) ? get_vector(key, expected_size) : fallback;
}

std::vector<std::string> ConfigMap::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_)
    if (key.rfind(prefix, 0) == 0) out.push_back(key);
  return out;
}

void ConfigMap::reject_unused() const {
  for (const auto& [key, entry] : entries_)
    if (!entry.used) throw ConfigError("unknown key '" + key + "'", entry.line);
}

Method parse_method(const std::string& name) {
  if (name == "nominal") return Method::kNominal;
  if (name == "true_no_l1") return Method::kTrueNoL1;
  if (name == "true_with_l1") return Method::kTrueWithL1;
  throw ConfigError("unknown method '" + name + "' (nominal|true_no_l1|true_with_l1)");
}

const char* to_string(Method method) {
  switch (method) {
    case Method::kNominal: return "nominal";
    case Method::kTrueNoL1: return "true_no_l1";
    case Method::kTrueWithL1: return "true_with_l1";
  }
  return "unknown";
}

int ScenarioConfig::planner_steps() const {
  return static_cast<int>(std::llround(total_time / mpc.dt));
}

int ScenarioConfig::inner_steps() const {
  return static_cast<int>(std::llround(mpc.dt / l1.Ts));
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  ConfigMap map = ConfigMap::from_file(path);
  return from_map(map);
}

ScenarioConfig ScenarioConfig::from_map(ConfigMap& map) {
  ScenarioConfig cfg;
  cfg.name = map.get_string("name", "scenario");

  cfg.system = make_system_preset(map.get_string("system.preset", "double_integrator_2d"),
                                  map.get_double("system.noise_std", 0.05));
  const int n = cfg.system.spec.n();
  const int m = cfg.system.spec.m();

  cfg.uncertainty_preset = map.get_string("uncertainty.preset", "none");
  cfg.uncertainty = make_uncertainty_preset(cfg.uncertainty_preset);

  cfg.l1.omega = map.get_double("l1.omega_rad_per_s", 50.0);
  cfg.l1.Ts = map.get_double("l1.Ts_seconds", 1e-3);
  cfg.l1.lambda_s = map.get_double("l1.lambda_s_per_s", 100.0);
  cfg.l1.theta_ad = build_theta_ad(cfg.system.spec.B);
  const double kp = map.get_double("feedback.kp", 4.0);
  const double kd = map.get_double("feedback.kd", 4.0);
  cfg.l1.K_fb = Eigen::MatrixXd::Zero(m, n);
  cfg.l1.K_fb.leftCols(m) = kp * Eigen::MatrixXd::Identity(m, m);
  cfg.l1.K_fb.rightCols(m) = kd * Eigen::MatrixXd::Identity(m, m);

  cfg.mpc.horizon = static_cast<int>(map.get_int("mpc.horizon", 25));
  cfg.mpc.beta = map.get_double("mpc.beta", 0.05);
  cfg.mpc.samples = static_cast<int>(map.get_int("mpc.samples", 40));
  cfg.mpc.p = static_cast<int>(map.get_int("mpc.p", 1));
  cfg.mpc.rho_y = map.get_double("mpc.rho_y", 0.04);
  cfg.mpc.dt = map.get_double("mpc.dt_seconds", 0.1);
  const Eigen::VectorXd q_diag = map.get_vector("mpc.q_diag", n, Eigen::Vector4d(10, 10, 1, 1));
  const Eigen::VectorXd r_diag = map.get_vector("mpc.r_diag", m, Eigen::Vector2d(1, 1));
  const Eigen::VectorXd qf_diag = map.get_vector("mpc.qf_diag", n, q_diag);
  cfg.mpc.Q = q_diag.asDiagonal();
  cfg.mpc.R = r_diag.asDiagonal();
  cfg.mpc.Q_f = qf_diag.asDiagonal();
  const double inf = std::numeric_limits<double>::infinity();
  cfg.mpc.u_min = map.get_vector("mpc.u_min", m, Eigen::VectorXd::Constant(m, -8.0));
  cfg.mpc.u_max = map.get_vector("mpc.u_max", m, Eigen::VectorXd::Constant(m, 8.0));
  cfg.mpc.x_min = map.get_vector("mpc.x_min", n, Eigen::VectorXd::Constant(n, -inf));
  cfg.mpc.x_max = map.get_vector("mpc.x_max", n, Eigen::VectorXd::Constant(n, inf));

  cfg.mpc.solver.max_outer = static_cast<int>(map.get_int("solver.max_outer", cfg.mpc.solver.max_outer));
  cfg.mpc.solver.max_inner = static_cast<int>(map.get_int("solver.max_inner", cfg.mpc.solver.max_inner));
  cfg.mpc.solver.pg_tol = map.get_double("solver.pg_tol", cfg.mpc.solver.pg_tol);
  cfg.mpc.solver.feas_tol = map.get_double("solver.feas_tol", cfg.mpc.solver.feas_tol);

  cfg.reference.kind = parse_reference_kind(map.get_string("reference.kind", "circle"));
  cfg.reference.amplitude = map.get_double("reference.amplitude", 3.0);
  cfg.reference.period = map.get_double("reference.period_seconds", 10.0);
  cfg.reference.spiral_rate = map.get_double("reference.spiral_rate", 0.05);

  cfg.total_time = map.get_double("run.T_seconds", 10.0);
  cfg.runs = static_cast<int>(map.get_int("run.runs", 20));
  cfg.seed = static_cast<std::uint64_t>(map.get_int("run.seed", 1));
  cfg.method = parse_method(map.get_string("run.method", "true_with_l1"));
  cfg.divergence_threshold = map.get_double("run.divergence_threshold", 1e6);

  cfg.rho_x_certificate = map.get_double("certificate.rho_x", 0.02);
  cfg.ensemble_members = static_cast<int>(map.get_int("certificate.members", 0));

  // Obstacles: indexed groups obstacles.<i>.*
  for (int i = 0;; ++i) {
    const std::string prefix = "obstacles." + std::to_string(i) + ".";
    if (map.keys_with_prefix(prefix).empty()) break;
    ObstacleProcess o;
    const std::string shape_kind = map.get_string(prefix + "shape");
    o.z = map.get_vector(prefix + "position", 2);
    o.v = map.get_vector(prefix + "velocity", 2, Eigen::Vector2d::Zero());
    o.noise_std = map.get_double(prefix + "noise_std", 0.0);
    if (o.noise_std < 0.0) throw ConfigError("obstacle noise_std must be nonnegative", map.line_of(prefix + "noise_std"));
    if (shape_kind == "circle") {
      o.shape = UnsafeShape::circle(map.get_double(prefix + "radius"), cfg.system.C);
    } else if (shape_kind == "polygon") {
      const Eigen::VectorXd flat = map.get_vector(prefix + "vertices");
      if (flat.size() < 6 || flat.size() % 2 != 0)
        throw ConfigError("polygon vertices need >= 3 (x y) pairs", map.line_of(prefix + "vertices"));
      Eigen::MatrixXd verts(flat.size() / 2, 2);
      for (int r = 0; r < verts.rows(); ++r) verts.row(r) = flat.segment(2 * r, 2).transpose();
      o.shape = UnsafeShape::polygon(verts, cfg.system.C);
    } else {
      throw ConfigError("obstacle shape must be circle or polygon", map.line_of(prefix + "shape"));
    }
    cfg.obstacles.push_back(std::move(o));
  }

  map.reject_unused();

  // Semantic validation.
  try {
    cfg.system.spec.validate();
    cfg.l1.validate(cfg.system.spec);
    cfg.mpc.validate(n, m);
    cfg.model = discretize(cfg.system.spec, cfg.mpc.dt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!is_integer_multiple(cfg.mpc.dt, cfg.l1.Ts))
    throw ConfigError("planning period mpc.dt_seconds must be an integer multiple of l1.Ts_seconds");
  if (!is_integer_multiple(cfg.total_time, cfg.mpc.dt))
    throw ConfigError("run.T_seconds must be an integer multiple of mpc.dt_seconds");
  if (cfg.runs < 1) throw ConfigError("run.runs must be >= 1");
  if (cfg.ensemble_members < 0) throw ConfigError("certificate.members must be >= 0");
  if (!(cfg.divergence_threshold > 0.0)) throw ConfigError("run.divergence_threshold must be positive");
  return cfg;
}

}  // namespace drmpc
