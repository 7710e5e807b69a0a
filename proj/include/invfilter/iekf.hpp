/**
 * @file iekf.hpp
 * @brief Discrete-time Invariant EKF.
 *
 * The error is linearized once, at the identity, so the Riccati recursion is
 * time-invariant for constant Upsilon and its gains converge. P is the
 * covariance of xi in chi ~ exp(xi) xhat.
 */
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/lie_group.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

/// h(exp(xi), V) = h0 + H_xi xi + H_V V + O(|xi|^2, |V|^2).
struct Linearization {
  Eigen::MatrixXd H_xi;
  Eigen::MatrixXd H_V;
  Eigen::VectorXd h0;
};

Linearization linearize_two_vector(const Eigen::Vector3d& b1, const Eigen::Vector3d& b2);
/// Closed-form linearization of any built-in output.
Linearization linearize(const OutputMap& output);

/// Central differences of xi -> h(exp(xi), 0) at xi = 0.
Eigen::MatrixXd numerical_output_jacobian(const OutputMap& output, double eps = 1e-6);

enum class QwMode {
  /// dM/dt = Q + ad M + M ad^T: the variance of the noise transported by
  /// the left flow over the step.
  Lyapunov,
  /// dM/dt = Q + ad M ad^T, kept for comparison.
  AsPrinted,
};

/// Per-step process covariance for the left input `upsilon` held over dt.
/// Q is per unit time. Returns Q dt exactly when upsilon = 0, or on SO3 when
/// Q is a multiple of the identity in Lyapunov mode; otherwise RK4 with
/// `substeps` steps.
Eigen::MatrixXd compute_Qw(const Eigen::MatrixXd& Q, const AlgebraVector& upsilon, double dt,
                           QwMode mode = QwMode::Lyapunov, int substeps = 100);

struct IekfState {
  GroupElement estimate;
  Eigen::MatrixXd P;
  int step = 0;
};

/// L = P H^T S^{-1}, S = H_V Qv H_V^T + H P H^T, by a Cholesky solve.
/// Throws NumericalError when the smallest eigenvalue of S is below 1e-12.
Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P_pred, const Linearization& lin, const Eigen::MatrixXd& Qv);

IekfState iekf_predict(const IekfState& state, const GroupElement& upsilon, const GroupElement& omega,
                       const Eigen::MatrixXd& Qw);

/// Updates with observation y; writes L_{n+1} to `gain` when non-null.
IekfState iekf_update(const IekfState& state, const Eigen::VectorXd& y, const Linearization& lin,
                      const Eigen::MatrixXd& Qv, const OutputMap& output, Eigen::MatrixXd* gain = nullptr);

struct IekfRun {
  std::vector<GroupElement> estimates;   ///< xhat_0..xhat_N
  std::vector<Eigen::MatrixXd> gains;    ///< L_1..L_N
  std::vector<Eigen::MatrixXd> covariances;  ///< P_0..P_N
};

/// Qw is per step; Qv the observation covariance.
IekfRun run_iekf(const DiscreteModel& model, const Trajectory& trajectory, const IekfState& initial,
                 const Eigen::MatrixXd& Qw, const Eigen::MatrixXd& Qv);

/// Gain and covariance recursion alone; it does not depend on the data.
IekfRun iekf_riccati(const GroupElement& upsilon, const Eigen::MatrixXd& P0, const Eigen::MatrixXd& Qw,
                     const Linearization& lin, const Eigen::MatrixXd& Qv, int steps);

/// The final gain if the last `window` successive differences are all below
/// `tol` in max-norm; nullopt otherwise.
std::optional<Eigen::MatrixXd> asymptotic_gain(const std::vector<Eigen::MatrixXd>& gains, double tol,
                                               int window = 10);

}  // namespace invfilter
