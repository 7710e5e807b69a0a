#include "invfilter/mekf.hpp"

#include <cmath>

#include "invfilter/errors.hpp"
#include "invfilter/parallel.hpp"
#include "invfilter/so3.hpp"

namespace invfilter {

namespace {

template <int P>
struct VectorObservation {
  Eigen::Matrix<double, P, 3> H;
  Eigen::Matrix<double, P, 1> predicted;
};

template <int P>
VectorObservation<P> observation_model(const Eigen::Matrix3d& estimate, const Eigen::Vector3d& b1,
                                       const Eigen::Vector3d& b2) {
  VectorObservation<P> obs;
  const Eigen::Matrix3d rt = estimate.transpose();
  const Eigen::Vector3d y1 = rt * b1;
  obs.H.template topRows<3>() = so3::hat(y1);
  obs.predicted.template head<3>() = y1;
  if constexpr (P == 6) {
    const Eigen::Vector3d y2 = rt * b2;
    obs.H.template bottomRows<3>() = so3::hat(y2);
    obs.predicted.template tail<3>() = y2;
  }
  return obs;
}

template <int P>
MekfState update_fixed(const MekfState& state, const Eigen::Matrix<double, P, 1>& y, const Eigen::Vector3d& b1,
                       const Eigen::Vector3d& b2, const Eigen::Matrix<double, P, P>& Qv,
                       Eigen::Matrix<double, 3, P>* gain) {
  const VectorObservation<P> obs = observation_model<P>(state.estimate, b1, b2);
  Eigen::Matrix<double, P, P> S = obs.H * state.P * obs.H.transpose() + Qv;
  S = 0.5 * (S + S.transpose());
  const Eigen::LLT<Eigen::Matrix<double, P, P>> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("MEKF innovation covariance is singular");
  const Eigen::Matrix<double, 3, P> L = llt.solve(obs.H * state.P).transpose();
  MekfState out;
  out.estimate = so3::compose(state.estimate, so3::exp(L * (y - obs.predicted)));
  Eigen::Matrix3d Pn = (Eigen::Matrix3d::Identity() - L * obs.H) * state.P;
  out.P = 0.5 * (Pn + Pn.transpose());
  out.step = state.step;
  if (gain) *gain = L;
  return out;
}

void check_output(const OutputMap& output) {
  if (output.kind() != OutputKind::TwoVector && output.kind() != OutputKind::SingleVector) {
    throw ConfigError("the MEKF baseline supports two_vector and single_vector outputs only");
  }
}

}  // namespace

MekfState mekf_predict(const MekfState& state, const Eigen::Matrix3d& upsilon, const Eigen::Matrix3d& omega,
                       const Eigen::Matrix3d& Qw) {
  MekfState out;
  out.estimate = so3::compose(so3::compose(upsilon, state.estimate), omega);
  // Ad on SO(3) is the rotation itself.
  const Eigen::Matrix3d rt = state.estimate.transpose();
  const Eigen::Matrix3d ot = omega.transpose();
  Eigen::Matrix3d P = ot * (state.P + rt * Qw * rt.transpose()) * ot.transpose();
  out.P = 0.5 * (P + P.transpose());
  out.step = state.step + 1;
  return out;
}

MekfState mekf_update(const MekfState& state, const Eigen::VectorXd& y, const OutputMap& output,
                      const Eigen::MatrixXd& Qv, Eigen::MatrixXd* gain) {
  check_output(output);
  const int p = output.obs_dim();
  if (y.size() != p || Qv.rows() != p || Qv.cols() != p) throw DimensionError("MEKF update: size mismatch");
  if (p == 6) {
    Eigen::Matrix<double, 3, 6> L;
    const MekfState out = update_fixed<6>(state, Eigen::Matrix<double, 6, 1>(y), output.b1(), output.b2(),
                                          Eigen::Matrix<double, 6, 6>(Qv), &L);
    if (gain) *gain = L;
    return out;
  }
  Eigen::Matrix3d L;
  const MekfState out = update_fixed<3>(state, Eigen::Vector3d(y), output.g_ref(), Eigen::Vector3d::Zero(),
                                        Eigen::Matrix3d(Qv), &L);
  if (gain) *gain = L;
  return out;
}

MekfState mekf_step(const MekfState& state, const Eigen::Matrix3d& upsilon, const Eigen::Matrix3d& omega,
                    const Eigen::VectorXd& y, const OutputMap& output, const Eigen::Matrix3d& Qw,
                    const Eigen::MatrixXd& Qv, Eigen::MatrixXd* gain) {
  return mekf_update(mekf_predict(state, upsilon, omega, Qw), y, output, Qv, gain);
}

Eigen::Matrix3d mekf_error_covariance(const MekfState& state) {
  return state.estimate * state.P * state.estimate.transpose();
}

MekfRun run_mekf(const DiscreteModel& model, const Trajectory& trajectory, const MekfState& initial,
                 const Eigen::Matrix3d& Qw, const Eigen::MatrixXd& Qv) {
  if (model.descriptor.id() != GroupId::SO3) throw ConfigError("the MEKF baseline runs on SO3 only");
  check_output(model.output);
  MekfRun run;
  MekfState state = initial;
  run.estimates.push_back(make_unchecked(model.descriptor, state.estimate));
  run.covariances.push_back(state.P);
  run.error_covariances.push_back(mekf_error_covariance(state));
  for (int n = 0; n < trajectory.steps(); ++n) {
    Eigen::MatrixXd L;
    state = mekf_step(state, model.left(n).matrix(), model.right(n).matrix(),
                      trajectory.observations[static_cast<std::size_t>(n) + 1], model.output, Qw, Qv, &L);
    run.estimates.push_back(make_unchecked(model.descriptor, state.estimate));
    run.covariances.push_back(state.P);
    run.error_covariances.push_back(mekf_error_covariance(state));
    run.gains.push_back(std::move(L));
  }
  return run;
}

namespace {

constexpr std::uint64_t kPriorStreamOffset = std::uint64_t{1} << 40;

}  // namespace

double mekf_stationary_rmse(const Scenario& scenario, double inflation, const MekfTuningOptions& options) {
  scenario.validate();
  if (scenario.output.kind() != OutputKind::SingleVector || scenario.descriptor.id() != GroupId::SO3) {
    throw ConfigError("MEKF tuning needs an SO3 single_vector scenario");
  }
  if (!(inflation > 0.0)) throw ConfigError("MEKF inflation must be positive");
  if (options.chains < 1 || options.retain < 1 || options.burn_in < 0) {
    throw ConfigError("MEKF tuning needs chains >= 1, retain >= 1 and burn_in >= 0");
  }
  const DiscreteModel model = scenario.model();
  const NoiseSampler noise(scenario.noise, scenario.descriptor, 3, scenario.dt);
  const GaussianSampler prior(scenario.prior_cov);
  const Eigen::Matrix3d upsilon = model.left(0).matrix();
  const Eigen::Matrix3d omega = model.right(0).matrix();
  const Eigen::Matrix3d Qw = scenario.process_cov_per_step();
  const Eigen::Matrix3d Qv = inflation * scenario.noise.obs_cov;
  const Eigen::Matrix3d proc_factor = noise.process_sampler().factor();
  const Eigen::Matrix3d obs_factor = noise.observation_sampler().factor();
  const OutlierSpec outlier = noise.outlier();
  const Eigen::Vector3d g = scenario.output.g_ref();

  std::vector<double> sums(static_cast<std::size_t>(options.chains), 0.0);
  parallel_for(sums.size(), [&](std::size_t c) {
    RandomStream prior_rng(options.seed, kPriorStreamOffset + c);
    RandomStream rng(options.seed, c);
    Eigen::Matrix3d truth = so3::exp(Eigen::Vector3d(prior.sample(prior_rng)));
    MekfState state;
    state.P = scenario.prior_cov;
    double sum = 0.0;
    for (int n = 0; n < options.burn_in + options.retain; ++n) {
      const Eigen::Vector3d w = proc_factor * rng.gaussian_fixed<3>();
      Eigen::Vector3d v = obs_factor * rng.gaussian_fixed<3>();
      const double u = rng.uniform();
      const Eigen::Vector3d extra = rng.gaussian_fixed<3>();
      if (u < outlier.probability) v += outlier.std_dev * extra;
      truth = so3::compose(so3::compose(upsilon, so3::compose(so3::exp(w), truth)), omega);
      const Eigen::Vector3d y = truth.transpose() * (g + v);
      state = mekf_predict(state, upsilon, omega, Qw);
      state = update_fixed<3>(state, y, g, Eigen::Vector3d::Zero(), Qv, nullptr);
      if (n >= options.burn_in) {
        const Eigen::Matrix3d eta = truth * state.estimate.transpose();
        sum += (eta * g - g).squaredNorm();
      }
    }
    sums[c] = sum;
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return std::sqrt(total / (static_cast<double>(options.chains) * options.retain));
}

MekfTuning tune_mekf_obs_noise(const Scenario& scenario, const std::vector<double>& inflations,
                               const MekfTuningOptions& options) {
  if (inflations.empty()) throw ConfigError("MEKF inflation grid is empty");
  MekfTuning tuning;
  for (double f : inflations) tuning.points.push_back(MekfTuningPoint{f, mekf_stationary_rmse(scenario, f, options)});
  for (std::size_t i = 1; i < tuning.points.size(); ++i) {
    if (tuning.points[i].rmse < tuning.points[tuning.best_index].rmse) tuning.best_index = i;
  }
  return tuning;
}

}  // namespace invfilter
