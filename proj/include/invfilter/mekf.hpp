/**
 * @file mekf.hpp
 * @brief Multiplicative EKF baseline on SO(3) for vector observations.
 *
 * Body-frame error chi = xhat exp(xi), P = var(xi). The observation Jacobian
 * is re-evaluated at every estimate, unlike the invariant filter:
 *   predict  P' = Ad_{Omega^-1} (P + Ad_{xhat^-1} Qw Ad_{xhat^-1}^T) Ad_{Omega^-1}^T
 *   update   H = [(xhat^T b_i)_x], y_hat = xhat^T b_i, xhat <- xhat exp(L (y - y_hat)).
 */
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/lie_group.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

struct MekfState {
  Eigen::Matrix3d estimate = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
  int step = 0;
};

MekfState mekf_predict(const MekfState& state, const Eigen::Matrix3d& upsilon, const Eigen::Matrix3d& omega,
                       const Eigen::Matrix3d& Qw);

/// Works for the two_vector and single_vector outputs; Qv is p x p.
MekfState mekf_update(const MekfState& state, const Eigen::VectorXd& y, const OutputMap& output,
                      const Eigen::MatrixXd& Qv, Eigen::MatrixXd* gain = nullptr);

/// Predict then update; returns the gain through `gain` when non-null.
MekfState mekf_step(const MekfState& state, const Eigen::Matrix3d& upsilon, const Eigen::Matrix3d& omega,
                    const Eigen::VectorXd& y, const OutputMap& output, const Eigen::Matrix3d& Qw,
                    const Eigen::MatrixXd& Qv, Eigen::MatrixXd* gain = nullptr);

/// Covariance of log(eta), eta = chi xhat^{-1}, implied by the body-frame P.
Eigen::Matrix3d mekf_error_covariance(const MekfState& state);

struct MekfRun {
  std::vector<GroupElement> estimates;       ///< xhat_0..xhat_N
  std::vector<Eigen::MatrixXd> gains;        ///< L_1..L_N
  std::vector<Eigen::Matrix3d> covariances;  ///< body-frame P_0..P_N
  std::vector<Eigen::Matrix3d> error_covariances;  ///< covariance of log(eta_n)
};

MekfRun run_mekf(const DiscreteModel& model, const Trajectory& trajectory, const MekfState& initial,
                 const Eigen::Matrix3d& Qw, const Eigen::MatrixXd& Qv);

struct MekfTuningOptions {
  int burn_in = 500;
  int retain = 500;
  int chains = 500;
  std::uint64_t seed = 1;
};

struct MekfTuningPoint {
  double inflation = 1.0;
  double rmse = 0.0;
};

struct MekfTuning {
  std::vector<MekfTuningPoint> points;
  std::size_t best_index = 0;
  const MekfTuningPoint& best() const { return points.at(best_index); }
};

/// Stationary RMSE of the MEKF with Qv replaced by inflation * Qv, for a
/// single-vector scenario. Chains use the same noise streams as
/// estimate_stationary with the same seed.
double mekf_stationary_rmse(const Scenario& scenario, double inflation, const MekfTuningOptions& options);

/// Grid search over Qv inflation factors.
MekfTuning tune_mekf_obs_noise(const Scenario& scenario, const std::vector<double>& inflations,
                               const MekfTuningOptions& options);

}  // namespace invfilter
