/**
 * @file experiment.hpp
 * @brief Monte-Carlo experiment runner shared by the CLI and the tests.
 *
 * Trajectory t draws from stream (seed, t): first the initial error
 * eta_0 ~ exp(N(0, P0)) (truth chi_0 = eta_0 xhat_0), then the model noise.
 * Every filter therefore sees the same trajectories for a given seed.
 * Errors are reported as log(eta_n), eta_n = chi_n xhat_n^{-1}.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/config.hpp"
#include "invfilter/gain_functions.hpp"
#include "invfilter/ienkf.hpp"
#include "invfilter/iekf.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

enum class FilterKind { IEKF, IEnKF, FixedGain, MEKF, AsymptoticIEKF };

std::string to_string(FilterKind kind);
/// iekf | ienkf | fixed-gain | mekf | asymptotic-iekf
FilterKind parse_filter_kind(const std::string& text);

struct FilterSettings {
  TwoVectorGainParams two_vector;
  HorizonGainParams horizon;
  IenkfOptions ienkf;
  QwMode qw_mode = QwMode::Lyapunov;
  /// Convergence threshold of the asymptotic IEKF gain.
  double asymptotic_tol = 1e-9;
  /// Qv multiplier of the MEKF.
  double mekf_inflation = 1.0;
};

struct ExperimentConfig {
  Scenario scenario;
  FilterKind filter = FilterKind::IEKF;
  std::vector<FilterKind> compare;
  FilterSettings settings;
  int n_trajectories = 100;
  std::uint64_t seed = 1;
};

/// Keys understood on top of scenario_keys().
const std::set<std::string>& experiment_keys();

/// Reads scenario and experiment keys; unknown keys are rejected.
ExperimentConfig experiment_from_config(const Config& config);

struct TrajectoryBatch {
  std::vector<Trajectory> trajectories;
  GroupElement estimate0 = GroupElement::identity(GroupDescriptor::so3());
  std::uint64_t truth_hash = 0;
};

TrajectoryBatch simulate_batch(const Scenario& scenario, int n_trajectories, std::uint64_t seed);

struct MonteCarloReport {
  FilterKind filter = FilterKind::IEKF;
  int steps = 0;
  int dim = 0;
  int n_trajectories = 0;
  std::uint64_t seed = 0;
  std::uint64_t truth_hash = 0;
  bool has_reported_covariance = false;

  std::vector<Eigen::MatrixXd> errors;  ///< per trajectory, (N+1) x dim
  Eigen::MatrixXd mean;                 ///< (N+1) x dim
  Eigen::MatrixXd std_dev;              ///< (N+1) x dim
  Eigen::VectorXd rmse;                 ///< (N+1): sqrt(mean |log eta|^2)
  Eigen::MatrixXd coverage;             ///< (N+1) x dim, fraction inside 3 sigma
  Eigen::MatrixXd reported_3sigma;      ///< (N+1) x dim, mean of 3 sqrt(P_ii)
  std::vector<Eigen::MatrixXd> gains;   ///< gain trace (first trajectory for the MEKF)
  std::vector<Eigen::MatrixXd> covariances;  ///< IEKF P_0..P_N
  double final_rmse = 0.0;
  double wall_seconds = 0.0;
};

/// Runs one filter over a batch. The IEnKF schedule is computed from
/// settings.ienkf unless `schedule` is given.
MonteCarloReport run_filter_batch(const ExperimentConfig& config, FilterKind filter, const TrajectoryBatch& batch,
                                  const GainSchedule* schedule = nullptr);

/// Simulates config.n_trajectories trajectories and runs config.filter.
MonteCarloReport run_experiment(const ExperimentConfig& config);

/// errors.csv, envelope.csv, and gains.csv / covariance.csv when present.
void write_report(const MonteCarloReport& report, const std::string& out_dir);

struct ComparisonResult {
  std::vector<MonteCarloReport> reports;
  std::uint64_t truth_hash = 0;
};

/// Runs each filter on the same trajectories.
ComparisonResult compare_filters(const ExperimentConfig& config, const std::vector<FilterKind>& filters);

/// comparison.csv: step, then rmse_<f>, coverage1_<f> per filter.
void write_comparison(const ComparisonResult& result, const std::string& out_dir);

/// Mean over steps [from, to] of the first-axis coverage.
double mean_coverage(const MonteCarloReport& report, int axis, int from, int to);

}  // namespace invfilter
