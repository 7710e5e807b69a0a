/**
 * @file config.hpp
 * @brief key = value scenario/experiment files and the named presets.
 *
 * Syntax: one `key = value` per line, `#` starts a comment. Vectors are
 * comma or space separated. Matrix keys accept a scalar s (s I), d values
 * (diagonal) or d*d values (row-major); `;` may separate rows.
 */
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/models.hpp"

namespace invfilter {

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Eigen::VectorXd get_vector(const std::string& key) const;
  Eigen::VectorXd get_vector(const std::string& key, const Eigen::VectorXd& fallback) const;
  /// n x n matrix from scalar / diagonal / full forms.
  Eigen::MatrixXd get_square(const std::string& key, int n) const;
  /// General matrix with rows separated by ';'.
  Eigen::MatrixXd get_matrix(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  /// Throws ConfigError naming the first key not in `known`.
  void check_known(const std::set<std::string>& known) const;

  /// Canonical text (sorted keys).
  std::string text() const;
  const std::string& origin() const { return origin_; }

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::string origin_;
};

/// Keys understood by scenario_from_config.
const std::set<std::string>& scenario_keys();

/// Builds and validates a scenario. Qw is the per-step process covariance;
/// the stored NoiseSpec holds it per unit time (Qw / dt).
Scenario scenario_from_config(const Config& config);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
Config preset(const std::string& name);
/// A preset name or a file path.
Config load_config(const std::string& name_or_path);

}  // namespace invfilter
