#include "invfilter/filter_core.hpp"

#include "invfilter/errors.hpp"

namespace invfilter {

FilterState predict(const FilterState& state, const GroupElement& upsilon, const GroupElement& omega) {
  return FilterState{upsilon * state.estimate * omega, state.step + 1};
}

FilterState update(const FilterState& state, const Eigen::VectorXd& y, const GainFunction& gain,
                   const OutputMap& output) {
  const Eigen::VectorXd innovation = output.act(state.estimate, y);
  return FilterState{gain(innovation) * state.estimate, state.step};
}

GroupElement error_of(const GroupElement& truth, const GroupElement& estimate) {
  return truth * inverse(estimate);
}

ErrorSample propagate_error(const GroupElement& eta, const GroupElement& w, const Eigen::VectorXd& v,
                            const GroupElement& upsilon, const GainFunction& gain, const OutputMap& output) {
  const GroupElement eta_pred = upsilon * w * eta * inverse(upsilon);
  const Eigen::VectorXd y = output.evaluate(eta_pred, v);
  return ErrorSample{eta_pred * inverse(gain(y)), eta_pred};
}

namespace {

void check_trajectory(const DiscreteModel& model, const Trajectory& t) {
  if (t.steps() < 0) throw DimensionError("empty trajectory");
  if (static_cast<int>(t.observations.size()) != t.steps() + 1 ||
      static_cast<int>(t.process_noise.size()) != t.steps()) {
    throw DimensionError("trajectory logs have inconsistent lengths");
  }
  if (!(t.truth.front().descriptor() == model.descriptor)) {
    throw DimensionError("trajectory group does not match the model");
  }
}

}  // namespace

std::vector<GroupElement> run_filter(const DiscreteModel& model, const Trajectory& trajectory,
                                     const GroupElement& estimate0, const GainSchedulePolicy& gains) {
  check_trajectory(model, trajectory);
  std::vector<GroupElement> out;
  out.reserve(trajectory.truth.size());
  FilterState state{estimate0, 0};
  out.push_back(state.estimate);
  for (int n = 0; n < trajectory.steps(); ++n) {
    state = predict(state, model.left(n), model.right(n));
    state = update(state, trajectory.observations[static_cast<std::size_t>(n) + 1], gains(n + 1), model.output);
    out.push_back(state.estimate);
  }
  return out;
}

std::vector<GroupElement> run_filter(const DiscreteModel& model, const Trajectory& trajectory,
                                     const GroupElement& estimate0, const GainFunction& gain) {
  return run_filter(model, trajectory, estimate0, [&gain](int) -> const GainFunction& { return gain; });
}

std::vector<GroupElement> run_error_recursion(const DiscreteModel& model, const Trajectory& trajectory,
                                              const GroupElement& eta0, const GainSchedulePolicy& gains) {
  check_trajectory(model, trajectory);
  std::vector<GroupElement> out;
  out.reserve(trajectory.truth.size());
  out.push_back(eta0);
  for (int n = 0; n < trajectory.steps(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    out.push_back(propagate_error(out.back(), trajectory.process_noise[i], trajectory.observation_noise[i + 1],
                                  model.left(n), gains(n + 1), model.output)
                      .eta);
  }
  return out;
}

}  // namespace invfilter
