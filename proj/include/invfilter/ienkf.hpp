/**
 * @file ienkf.hpp
 * @brief Invariant ensemble Kalman filter: gains computed off-line from a
 * particle sampling of the error law, then applied on-line as a schedule.
 *
 * Needs a constant left input so the error recursion is free of the inputs.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/lie_group.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

struct IenkfOptions {
  int particles = 10000;
  std::uint64_t seed = 1;
  /// Mean-subtracted moments instead of the raw second moments.
  bool centered = false;
  /// Added to S before the solve.
  double regularization = 1e-10;
};

struct GainSchedule {
  GroupDescriptor descriptor = GroupDescriptor::so3();
  int obs_dim = 0;
  std::uint64_t fingerprint = 0;
  std::vector<Eigen::MatrixXd> gains;  ///< L_1..L_N

  /// Diagnostics of the off-line run (not persisted).
  std::vector<Eigen::MatrixXd> predicted_moments;  ///< P_{n+1|n}, n = 0..N-1
  std::vector<Eigen::MatrixXd> error_moments;      ///< second moment of log(eta_n), n = 0..N
  std::size_t resampled = 0;  ///< particles redrawn from the prior after a log failure

  int horizon() const { return static_cast<int>(gains.size()); }
};

GainSchedule offline_gains(const Scenario& scenario, const IenkfOptions& options);

/// Filter run with the stored gains; returns xhat_0..xhat_N. Throws
/// ConfigError when the schedule was computed for another scenario.
std::vector<GroupElement> apply_schedule(const Scenario& scenario, const Trajectory& trajectory,
                                         const GainSchedule& schedule, const GroupElement& estimate0);

/// CSV: a header line "group_id,N,p,algebra_dim,fingerprint", its values,
/// then one row per step: step followed by L row-major.
void save_schedule(const std::string& path, const GainSchedule& schedule);
GainSchedule load_schedule(const std::string& path);

}  // namespace invfilter
