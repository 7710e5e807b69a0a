#include "invfilter/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "invfilter/errors.hpp"

namespace invfilter {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& text, const std::string& key) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
  return value;
}

Eigen::VectorXd to_vector(const std::string& text, const std::string& key) {
  const auto t = tokens(text);
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(t[i], key);
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (c.values_.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key) const { return raw(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double Config::get_double(const std::string& key) const { return to_double(raw(key), key); }

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const std::string& s = raw(key);
  int value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  }
  return value;
}

int Config::get_int(const std::string& key, int fallback) const { return has(key) ? get_int(key) : fallback; }

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  std::uint64_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an unsigned integer");
  }
  return value;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
}

Eigen::VectorXd Config::get_vector(const std::string& key) const { return to_vector(raw(key), key); }

Eigen::VectorXd Config::get_vector(const std::string& key, const Eigen::VectorXd& fallback) const {
  return has(key) ? get_vector(key) : fallback;
}

Eigen::MatrixXd Config::get_square(const std::string& key, int n) const {
  const Eigen::VectorXd v = get_vector(key);
  if (v.size() == 1) return v(0) * Eigen::MatrixXd::Identity(n, n);
  if (v.size() == n) return v.asDiagonal();
  if (v.size() == static_cast<Eigen::Index>(n) * n) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = v(i * n + j);
    return m;
  }
  throw ConfigError("key '" + key + "': expected 1, " + std::to_string(n) + " or " + std::to_string(n * n) +
                    " values, got " + std::to_string(v.size()));
}

Eigen::MatrixXd Config::get_matrix(const std::string& key) const {
  std::vector<Eigen::VectorXd> rows;
  std::stringstream ss(raw(key));
  std::string row;
  while (std::getline(ss, row, ';')) {
    if (trim(row).empty()) continue;
    rows.push_back(to_vector(row, key));
  }
  if (rows.empty()) throw ConfigError("key '" + key + "': empty matrix");
  const Eigen::Index cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ConfigError("key '" + key + "': ragged matrix rows");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return m;
}

std::vector<std::string> Config::get_list(const std::string& key) const { return tokens(raw(key)); }

void Config::check_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (!known.count(key)) throw ConfigError(origin_ + ": unknown key '" + key + "'");
  }
}

std::string Config::text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys = {
      "name", "group", "output_kind", "b1", "b2", "g_ref", "H", "Qw", "Qv", "P0", "N", "dt",
      "outlier_prob", "outlier_std", "upsilon", "omega", "initial_estimate"};
  return keys;
}

Scenario scenario_from_config(const Config& config) {
  Scenario s;
  s.name = config.get_string("name", "scenario");
  s.descriptor = GroupDescriptor::parse(config.get_string("group"));
  const int d = s.descriptor.algebra_dim();
  const OutputKind kind = parse_output_kind(config.get_string("output_kind"));
  switch (kind) {
    case OutputKind::TwoVector:
      s.output = OutputMap::two_vector(config.get_vector("b1"), config.get_vector("b2"));
      break;
    case OutputKind::SingleVector:
      s.output = OutputMap::single_vector(config.get_vector("g_ref"));
      break;
    case OutputKind::VelocitySE3:
      s.output = OutputMap::velocity_se3();
      break;
    case OutputKind::LinearH:
      s.output = OutputMap::linear(config.get_matrix("H"));
      break;
  }
  if (!(s.output.descriptor() == s.descriptor)) {
    throw ConfigError("output_kind " + to_string(kind) + " is not defined on group " + s.descriptor.name());
  }
  if (kind == OutputKind::TwoVector || kind == OutputKind::SingleVector) {
    for (const char* key : {"b1", "b2", "g_ref"}) {
      if (config.has(key) && config.get_vector(key).size() != 3) {
        throw ConfigError(std::string("key '") + key + "' must have 3 entries");
      }
    }
  }
  s.dt = config.get_double("dt", 0.02);
  if (!(s.dt > 0.0)) throw ConfigError("dt must be positive");
  s.horizon = config.get_int("N", 50);
  const int p = s.output.obs_dim();
  s.noise.process_cov = config.get_square("Qw", d) / s.dt;
  s.noise.obs_cov = config.get_square("Qv", p);
  s.noise.outlier.probability = config.get_double("outlier_prob", 0.0);
  s.noise.outlier.std_dev = config.get_double("outlier_std", 0.0);
  s.prior_cov = config.get_square("P0", d);
  s.upsilon = config.get_vector("upsilon", Eigen::VectorXd::Zero(d));
  s.omega = config.get_vector("omega", Eigen::VectorXd::Zero(d));
  if (s.upsilon.size() != d || s.omega.size() != d) {
    throw ConfigError("upsilon and omega need " + std::to_string(d) + " entries");
  }
  const Eigen::VectorXd x0 = config.get_vector("initial_estimate", Eigen::VectorXd::Zero(d));
  if (x0.size() != d) throw ConfigError("initial_estimate needs " + std::to_string(d) + " entries");
  s.truth_init = exp_g(s.descriptor, x0);
  s.validate();
  return s;
}

namespace {

const char* kTable3 = R"(# Attitude from two vector observations with a gyroscope.
name = exp-table3
group = SO3
output_kind = two_vector
b1 = 1, 0, 0
b2 = 0, 1, 0
# 0.01745^2 rad^2 per step
Qw = 3.045025e-4
# 0.0873^2 per component
Qv = 7.62129e-3
# 0.5236^2 rad^2
P0 = 0.27415696
N = 50
dt = 0.02
omega = 0.5, -0.3, 0.8
seed = 1
num_trajectories = 1000
filter = iekf
filters = iekf, mekf, ienkf, asymptotic-iekf
particles = 10000
)";

const char* kHorizon = R"(# Artificial horizon: gyroscope plus accelerometer with outliers.
name = exp-horizon
group = SO3
output_kind = single_vector
g_ref = 0, 0, 1
# (1.75e-4 rad)^2 per step
Qw = 3.0625e-8
# (1.75e-3)^2 per component
Qv = 3.0625e-6
outlier_prob = 0.01
# 30 degrees
outlier_std = 0.5235987755982988
P0 = 0.0025
N = 1000
dt = 0.02
omega = 0.1, -0.05, 0.2
seed = 1
num_trajectories = 200
filter = fixed-gain
filters = fixed-gain, mekf
k = 0.1202
lambda = 0.0029
k_min = 0.02
k_max = 0.5
k_count = 10
lambda_min = 5e-4
lambda_max = 0.1
lambda_count = 10
chains = 500
burn_in = 500
retain = 500
mekf_min = 1
mekf_max = 1e4
mekf_count = 17
)";

const char* kLinear = R"(# Translation group T(4) with a linear output: the invariant filter is a Kalman filter.
name = exp-linear-equiv
group = TN4
output_kind = linear_h
H = 1, 0.5, 0, -0.2; 0, 1, -0.3, 0.1; 0.4, 0, 1, 0.6
Qw = 0.01, 0.02, 0.015, 0.01
Qv = 0.04
P0 = 1
N = 100
dt = 0.1
upsilon = 0.1, 0.2, -0.1, 0.05
seed = 1
num_trajectories = 100
filter = iekf
filters = iekf, asymptotic-iekf
)";

}  // namespace

std::vector<std::string> preset_names() { return {"exp-table3", "exp-horizon", "exp-linear-equiv"}; }

Config preset(const std::string& name) {
  if (name == "exp-table3") return Config::parse(kTable3, name);
  if (name == "exp-horizon") return Config::parse(kHorizon, name);
  if (name == "exp-linear-equiv") return Config::parse(kLinear, name);
  throw ConfigError("unknown preset '" + name + "'");
}

Config load_config(const std::string& name_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end() &&
      !std::filesystem::exists(name_or_path)) {
    return preset(name_or_path);
  }
  return Config::load(name_or_path);
}

}  // namespace invfilter
