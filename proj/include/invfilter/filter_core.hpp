/**
 * @file filter_core.hpp
 * @brief The generic invariant filter and its error recursion.
 *
 *   predict:  xhat'_{n+1} = Upsilon_n xhat_n Omega_n
 *   update:   xhat_{n+1}  = K(xhat'_{n+1} . Y_{n+1}) xhat'_{n+1}
 *   error:    eta_n = chi_n xhat_n^{-1}
 *
 * The error obeys eta'_{n+1} = Upsilon_n W_n eta_n Upsilon_n^{-1} and
 * eta_{n+1} = eta'_{n+1} K(h(eta'_{n+1}, V_{n+1}))^{-1}, which involves
 * neither Omega_n nor the true state.
 */
#pragma once

#include <functional>
#include <vector>

#include "invfilter/gain_functions.hpp"
#include "invfilter/lie_group.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

struct FilterState {
  GroupElement estimate;
  int step = 0;
};

struct ErrorSample {
  GroupElement eta;       ///< corrected error
  GroupElement eta_pred;  ///< predicted error
};

FilterState predict(const FilterState& state, const GroupElement& upsilon, const GroupElement& omega);

/// Left-multiplies the prediction by K evaluated at the acted observation.
FilterState update(const FilterState& state, const Eigen::VectorXd& y, const GainFunction& gain,
                   const OutputMap& output);

/// eta = chi xhat^{-1}.
GroupElement error_of(const GroupElement& truth, const GroupElement& estimate);

/// One step of the direct error recursion with given noise realizations.
ErrorSample propagate_error(const GroupElement& eta, const GroupElement& w, const Eigen::VectorXd& v,
                            const GroupElement& upsilon, const GainFunction& gain, const OutputMap& output);

/// Per-step gain provider: step n+1 -> K_{n+1}.
using GainSchedulePolicy = std::function<const GainFunction&(int)>;

/// Runs predict/update along a simulated trajectory; returns xhat_0..xhat_N.
std::vector<GroupElement> run_filter(const DiscreteModel& model, const Trajectory& trajectory,
                                     const GroupElement& estimate0, const GainSchedulePolicy& gains);
/// Constant-gain convenience overload.
std::vector<GroupElement> run_filter(const DiscreteModel& model, const Trajectory& trajectory,
                                     const GroupElement& estimate0, const GainFunction& gain);

/// Replays the error recursion with the trajectory's noise log; returns eta_0..eta_N.
std::vector<GroupElement> run_error_recursion(const DiscreteModel& model, const Trajectory& trajectory,
                                              const GroupElement& eta0, const GainSchedulePolicy& gains);

}  // namespace invfilter
