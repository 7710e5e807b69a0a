/**
 * @file fixed_gain.hpp
 * @brief Constant-gain invariant filters: noiseless convergence, Lyapunov
 * function of the two-vector filter, empirical stationary error laws and the
 * exhaustive gain search of the artificial horizon.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/filter_core.hpp"
#include "invfilter/gain_functions.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

/// Error recursion with the noise off:
///   gamma' = Upsilon gamma Upsilon^{-1},  gamma = gamma' K(h(gamma', 0))^{-1}.
/// Returns gamma_0..gamma_N.
std::vector<GroupElement> noiseless_iterate(const GroupElement& gamma0, const GainFunction& gain,
                                            const GroupElement& upsilon, const OutputMap& output, int steps);

/// E(gamma) = k1 |gamma^T b1 - b1|^2 + k2 |gamma^T b2 - b2|^2.
double lyapunov_E(const Eigen::Matrix3d& gamma, const TwoVectorGainParams& p);
double lyapunov_E(const GroupElement& gamma, const TwoVectorGainParams& p);

/// Error coordinates used by stationary reports. For single-vector outputs the
/// error is only defined up to a rotation about g_ref, so the reduced tilt
/// vector (rotation taking g to eta^T g) is used; otherwise log(eta).
Eigen::VectorXd stationary_coordinates(const GroupElement& eta, const OutputMap& output);

/// Squared error entering the RMSE: |eta g - g|^2 for single-vector outputs,
/// |log eta|^2 otherwise.
double stationary_squared_error(const GroupElement& eta, const OutputMap& output);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

struct StationaryOptions {
  int burn_in = 500;
  int retain = 500;
  int chains = 1000;
  std::uint64_t seed = 1;
  /// Overrides the scenario's P0 for the initial errors.
  std::optional<Eigen::MatrixXd> prior_cov;
  int histogram_bins = 64;
  /// Histogram half-width per axis; 0 selects 5 x the axis RMSE.
  double histogram_range = 0.0;
  bool keep_samples = true;
};

struct StationaryReport {
  int burn_in = 0;
  int retain = 0;
  int chains = 0;
  std::size_t n_samples = 0;
  /// Row per retained (chain, step), chain-major. Empty unless keep_samples.
  Eigen::MatrixXd samples;
  double rmse = 0.0;
  Eigen::VectorXd axis_rmse;
  std::vector<Histogram> marginals;
};

/// Runs independent error chains for burn_in + retain steps under a constant
/// gain and a constant left input. Chain c draws its noise from stream
/// (seed, c) and its initial error from a separate stream family, so two runs
/// that differ only in the prior share every noise realization.
StationaryReport estimate_stationary(const Scenario& scenario, const GainFunction& gain,
                                     const StationaryOptions& options);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

struct GridPoint {
  double k = 0.0;
  double lambda = 0.0;
  double rmse = 0.0;
  std::size_t n_samples = 0;
};

struct GridResult {
  std::vector<GridPoint> surface;  ///< k-major: index = i_k * |lambda_grid| + i_lambda
  std::size_t best_index = 0;
  const GridPoint& best() const { return surface.at(best_index); }
};

/// Exhaustive search with common random numbers (the same options.seed at
/// every grid point). The scenario must have a single-vector output.
GridResult grid_optimize_horizon(const Scenario& scenario, const std::vector<double>& k_grid,
                                 const std::vector<double>& lambda_grid, const StationaryOptions& options);

/// Columns k, lambda, rmse, n_samples.
void write_surface_csv(const std::string& path, const GridResult& result);

/// 1-Wasserstein distance between two empirical distributions on the line.
double wasserstein1(std::vector<double> a, std::vector<double> b);

}  // namespace invfilter
