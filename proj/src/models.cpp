#include "invfilter/models.hpp"

#include <charconv>
#include <cmath>

#include "invfilter/errors.hpp"

namespace invfilter {

// ---------------------------------------------------------------------------
// Gaussian sampling

void check_covariance(const Eigen::MatrixXd& cov, const std::string& what) {
  if (cov.rows() != cov.cols()) throw DimensionError(what + ": covariance must be square");
  if (cov.size() == 0) return;
  if (!cov.allFinite()) throw NumericalError(what + ": covariance has non-finite entries");
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw NumericalError(what + ": covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12) {
    throw NumericalError(what + ": covariance is not positive semi-definite");
  }
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) : cov_(cov) {
  check_covariance(cov, "GaussianSampler");
  const Eigen::Index n = cov.rows();
  zero_ = cov.isZero(0.0);
  if (zero_) {
    factor_ = Eigen::MatrixXd::Zero(n, n);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = eig.eigenvectors() * root.asDiagonal();
  // Isotropic covariances give an exactly diagonal factor.
  if (cov.isDiagonal(0.0)) factor_ = cov.diagonal().cwiseSqrt().asDiagonal();
}

Eigen::VectorXd GaussianSampler::sample(RandomStream& rng) const {
  const Eigen::VectorXd z = rng.gaussian_vector(dim());
  if (zero_) return Eigen::VectorXd::Zero(dim());
  return factor_ * z;
}

// ---------------------------------------------------------------------------
// Noise spec

void NoiseSpec::validate(int algebra_dim, int obs_dim) const {
  if (process_cov.rows() != algebra_dim || process_cov.cols() != algebra_dim) {
    throw DimensionError("process covariance must be " + std::to_string(algebra_dim) + "x" +
                         std::to_string(algebra_dim));
  }
  if (obs_cov.rows() != obs_dim || obs_cov.cols() != obs_dim) {
    throw DimensionError("observation covariance must be " + std::to_string(obs_dim) + "x" +
                         std::to_string(obs_dim));
  }
  check_covariance(process_cov, "process covariance");
  check_covariance(obs_cov, "observation covariance");
  if (!(outlier.probability >= 0.0 && outlier.probability <= 1.0)) {
    throw ConfigError("outlier probability must lie in [0, 1]");
  }
  if (!(outlier.std_dev >= 0.0)) throw ConfigError("outlier std must be non-negative");
}

// ---------------------------------------------------------------------------
// Output maps

std::string to_string(OutputKind kind) {
  switch (kind) {
    case OutputKind::TwoVector: return "two_vector";
    case OutputKind::SingleVector: return "single_vector";
    case OutputKind::VelocitySE3: return "velocity_se3";
    case OutputKind::LinearH: return "linear_h";
  }
  return {};
}

OutputKind parse_output_kind(const std::string& text) {
  if (text == "two_vector") return OutputKind::TwoVector;
  if (text == "single_vector") return OutputKind::SingleVector;
  if (text == "velocity_se3") return OutputKind::VelocitySE3;
  if (text == "linear_h") return OutputKind::LinearH;
  throw ConfigError("unknown output_kind '" + text +
                    "' (expected two_vector, single_vector, velocity_se3 or linear_h)");
}

OutputMap OutputMap::two_vector(const Eigen::Vector3d& b1, const Eigen::Vector3d& b2) {
  if (!(b1.cross(b2).norm() > 1e-12)) throw ConfigError("two_vector output needs b1 x b2 != 0");
  OutputMap m(OutputKind::TwoVector, GroupDescriptor::so3());
  m.b1_ = b1;
  m.b2_ = b2;
  m.h0_.resize(6);
  m.h0_ << b1, b2;
  return m;
}

OutputMap OutputMap::single_vector(const Eigen::Vector3d& g_ref) {
  if (!(g_ref.norm() > 0.0)) throw ConfigError("single_vector output needs a non-zero g_ref");
  OutputMap m(OutputKind::SingleVector, GroupDescriptor::so3());
  m.b1_ = g_ref;
  m.h0_ = g_ref;
  return m;
}

OutputMap OutputMap::velocity_se3() {
  OutputMap m(OutputKind::VelocitySE3, GroupDescriptor::se3());
  m.h0_ = Eigen::VectorXd::Zero(3);
  return m;
}

OutputMap OutputMap::linear(const Eigen::MatrixXd& h) {
  if (h.rows() < 1 || h.cols() < 1) throw ConfigError("linear_h output needs a non-empty H");
  OutputMap m(OutputKind::LinearH, GroupDescriptor::tn(static_cast<int>(h.cols())));
  m.h_ = h;
  m.h0_ = Eigen::VectorXd::Zero(h.rows());
  return m;
}

void OutputMap::check(const GroupElement& g, const Eigen::VectorXd& y) const {
  if (!(g.descriptor() == descriptor_)) {
    throw DimensionError(to_string(kind_) + " output is defined on " + descriptor_.name() +
                         ", got " + g.descriptor().name());
  }
  if (y.size() != obs_dim()) {
    throw DimensionError(to_string(kind_) + " output expects vectors of length " +
                         std::to_string(obs_dim()) + ", got " + std::to_string(y.size()));
  }
}

Eigen::VectorXd OutputMap::evaluate(const GroupElement& chi, const Eigen::VectorXd& noise) const {
  check(chi, noise);
  switch (kind_) {
    case OutputKind::TwoVector: {
      const Eigen::Matrix3d rt = chi.rotation().transpose();
      Eigen::VectorXd y(6);
      y << rt * (b1_ + noise.head<3>()), rt * (b2_ + noise.tail<3>());
      return y;
    }
    case OutputKind::SingleVector:
      return chi.rotation().transpose() * (b1_ + noise);
    case OutputKind::VelocitySE3: {
      const Eigen::Matrix3d rt = chi.rotation().transpose();
      return rt * (noise - chi.translation());
    }
    case OutputKind::LinearH:
      return h_ * chi.translation() + noise;
  }
  return {};
}

Eigen::VectorXd OutputMap::evaluate(const GroupElement& chi) const {
  return evaluate(chi, Eigen::VectorXd::Zero(obs_dim()));
}

Eigen::VectorXd OutputMap::act(const GroupElement& g, const Eigen::VectorXd& y) const {
  check(g, y);
  switch (kind_) {
    case OutputKind::TwoVector: {
      const Eigen::Matrix3d r = g.rotation();
      Eigen::VectorXd out(6);
      out << r * y.head<3>(), r * y.tail<3>();
      return out;
    }
    case OutputKind::SingleVector:
      return g.rotation() * y;
    case OutputKind::VelocitySE3:
      return g.rotation() * y + g.translation();
    case OutputKind::LinearH:
      return y - h_ * g.translation();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Models and scenarios

const GroupElement& DiscreteModel::left(int n) const {
  return left_inputs.size() == 1 ? left_inputs.front() : left_inputs.at(static_cast<std::size_t>(n));
}

const GroupElement& DiscreteModel::right(int n) const {
  return right_inputs.size() == 1 ? right_inputs.front() : right_inputs.at(static_cast<std::size_t>(n));
}

void Scenario::validate() const {
  if (horizon < 1) throw ConfigError("horizon N must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(output.descriptor() == descriptor)) {
    throw ConfigError(to_string(output.kind()) + " output does not apply to group " + descriptor.name());
  }
  if (!(truth_init.descriptor() == descriptor)) throw ConfigError("truth_init is not in " + descriptor.name());
  const int d = descriptor.algebra_dim();
  noise.validate(d, output.obs_dim());
  if (prior_cov.rows() != d || prior_cov.cols() != d) throw DimensionError("P0 has the wrong size");
  check_covariance(prior_cov, "P0");
  if (upsilon.size() != d || omega.size() != d) throw DimensionError("inputs have the wrong size");
}

std::pair<GroupElement, GroupElement> discretize(const AlgebraVector& upsilon, const AlgebraVector& omega,
                                                 double dt) {
  return {exp_g(upsilon.descriptor, dt * upsilon.coords), exp_g(omega.descriptor, dt * omega.coords)};
}

DiscreteModel Scenario::model() const {
  validate();
  auto [left, right] = discretize(AlgebraVector(descriptor, upsilon), AlgebraVector(descriptor, omega), dt);
  return DiscreteModel{descriptor, {left}, {right}, noise, output, dt};
}

namespace {

class Fnv1a {
 public:
  void add(std::string_view s) {
    for (unsigned char c : s) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
    add_separator();
  }
  void add(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    add(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
  }
  void add(const Eigen::MatrixXd& m) {
    add(static_cast<double>(m.rows()));
    add(static_cast<double>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) add(m(i, j));
  }
  std::uint64_t value() const { return hash_; }

 private:
  void add_separator() {
    hash_ ^= 0x1f;
    hash_ *= 0x100000001b3ULL;
  }
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::uint64_t Scenario::fingerprint() const {
  Fnv1a h;
  h.add(descriptor.name());
  h.add(to_string(output.kind()));
  h.add(Eigen::MatrixXd(output.h0()));
  h.add(Eigen::MatrixXd(output.b1()));
  h.add(Eigen::MatrixXd(output.b2()));
  h.add(output.H());
  h.add(noise.process_cov);
  h.add(noise.obs_cov);
  h.add(noise.outlier.probability);
  h.add(noise.outlier.std_dev);
  h.add(dt);
  h.add(static_cast<double>(horizon));
  h.add(prior_cov);
  h.add(Eigen::MatrixXd(upsilon));
  h.add(Eigen::MatrixXd(omega));
  return h.value();
}

// ---------------------------------------------------------------------------
// Sampling and simulation

NoiseSampler::NoiseSampler(const NoiseSpec& spec, const GroupDescriptor& d, int obs_dim, double dt)
    : descriptor_(d),
      obs_dim_(obs_dim),
      process_(spec.process_cov * dt),
      obs_(spec.obs_cov),
      outlier_(spec.outlier) {
  if (process_.dim() != d.algebra_dim()) throw DimensionError("process covariance size mismatch");
  if (obs_.dim() != obs_dim) throw DimensionError("observation covariance size mismatch");
}

Eigen::VectorXd NoiseSampler::process_coords(RandomStream& rng) const { return process_.sample(rng); }

GroupElement NoiseSampler::process(RandomStream& rng) const {
  if (process_.is_zero()) {
    process_.sample(rng);
    return GroupElement::identity(descriptor_);
  }
  return exp_g(descriptor_, process_.sample(rng));
}

Eigen::VectorXd NoiseSampler::observation(RandomStream& rng) const {
  Eigen::VectorXd v = obs_.sample(rng);
  const double u = rng.uniform();
  const Eigen::VectorXd extra = rng.gaussian_vector(obs_dim_);
  if (u < outlier_.probability) v += outlier_.std_dev * extra;
  return v;
}

GroupElement sample_process_noise(const NoiseSpec& spec, const GroupDescriptor& d, double dt,
                                  RandomStream& rng) {
  const GaussianSampler sampler(spec.process_cov * dt);
  if (sampler.dim() != d.algebra_dim()) throw DimensionError("process covariance size mismatch");
  return exp_g(d, sampler.sample(rng));
}

Eigen::VectorXd observe(const GroupElement& chi, const OutputMap& map, const NoiseSpec& noise,
                        RandomStream& rng) {
  const NoiseSampler sampler(noise, chi.descriptor(), map.obs_dim(), 1.0);
  return map.evaluate(chi, sampler.observation(rng));
}

Trajectory simulate_with_noise(const DiscreteModel& model, const GroupElement& truth0,
                               const std::vector<GroupElement>& process_noise,
                               const std::vector<Eigen::VectorXd>& observation_noise) {
  const std::size_t steps = process_noise.size();
  if (observation_noise.size() != steps + 1) {
    throw DimensionError("observation noise log must have one more slot than the process noise log");
  }
  Trajectory t;
  t.truth.reserve(steps + 1);
  t.truth.push_back(truth0);
  t.observations.assign(steps + 1, Eigen::VectorXd());
  t.process_noise = process_noise;
  t.observation_noise = observation_noise;
  for (std::size_t n = 0; n < steps; ++n) {
    const int i = static_cast<int>(n);
    t.truth.push_back(model.left(i) * process_noise[n] * t.truth.back() * model.right(i));
    t.observations[n + 1] = model.output.evaluate(t.truth.back(), observation_noise[n + 1]);
  }
  return t;
}

Trajectory simulate_trajectory(const DiscreteModel& model, const GroupElement& truth0, int steps,
                               RandomStream& rng) {
  const NoiseSampler sampler(model.noise, model.descriptor, model.output.obs_dim(), model.dt);
  std::vector<GroupElement> w;
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(steps) + 1);
  w.reserve(static_cast<std::size_t>(steps));
  for (int n = 0; n < steps; ++n) {
    w.push_back(sampler.process(rng));
    v[static_cast<std::size_t>(n) + 1] = sampler.observation(rng);
  }
  return simulate_with_noise(model, truth0, w, v);
}

Trajectory simulate_trajectory(const Scenario& scenario, RandomStream& rng) {
  return simulate_trajectory(scenario.model(), scenario.truth_init, scenario.horizon, rng);
}

GroupElement sample_prior_error(const Scenario& scenario, RandomStream& rng) {
  const GaussianSampler prior(scenario.prior_cov);
  return exp_g(scenario.descriptor, prior.sample(rng));
}

}  // namespace invfilter
