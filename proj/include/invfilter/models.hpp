/**
 * @file models.hpp
 * @brief Discrete-time group models chi_{n+1} = Upsilon_n W_n chi_n Omega_n,
 * equivariant output maps, noise sampling and trajectory simulation.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "invfilter/lie_group.hpp"
#include "invfilter/random.hpp"

namespace invfilter {

/// Zero-mean Gaussian sampler from a symmetric PSD covariance.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  /// Throws NumericalError if `cov` is not symmetric PSD (min eigenvalue
  /// below -1e-12) and DimensionError if it is not square.
  explicit GaussianSampler(const Eigen::MatrixXd& cov);

  Eigen::VectorXd sample(RandomStream& rng) const;
  Eigen::Index dim() const { return factor_.rows(); }
  bool is_zero() const { return zero_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  /// F with F F^T = cov; samples are F z with z standard normal.
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
  bool zero_ = true;
};

/// Throws unless `cov` is square, symmetric and PSD.
void check_covariance(const Eigen::MatrixXd& cov, const std::string& what);

struct OutlierSpec {
  double probability = 0.0;
  double std_dev = 0.0;  ///< radians (on unit reference vectors)
};

struct NoiseSpec {
  Eigen::MatrixXd process_cov;  ///< algebra_dim^2, per unit time
  Eigen::MatrixXd obs_cov;      ///< p x p
  OutlierSpec outlier;

  void validate(int algebra_dim, int obs_dim) const;
};

enum class OutputKind { TwoVector, SingleVector, VelocitySE3, LinearH };

std::string to_string(OutputKind kind);
OutputKind parse_output_kind(const std::string& text);

/// Output map h(chi, V) together with the left action of the group on the
/// output space that makes it equivariant: h(chi g, 0) = g^{-1} . h(chi, 0).
///
///  - TwoVector    (SO3):  (chi^{-1}(b1 + V1), chi^{-1}(b2 + V2)), action per block
///  - SingleVector (SO3):  chi^{-1}(g_ref + V), action R y
///  - VelocitySE3  (SE3):  first three entries of chi^{-1}(V; 1), action R y + T
///  - LinearH      (TN):   H x + V, action y - H x_g
class OutputMap {
 public:
  static OutputMap two_vector(const Eigen::Vector3d& b1, const Eigen::Vector3d& b2);
  static OutputMap single_vector(const Eigen::Vector3d& g_ref);
  static OutputMap velocity_se3();
  static OutputMap linear(const Eigen::MatrixXd& h);

  OutputKind kind() const { return kind_; }
  const GroupDescriptor& descriptor() const { return descriptor_; }
  int obs_dim() const { return static_cast<int>(h0_.size()); }
  /// h(I_d, 0).
  const Eigen::VectorXd& h0() const { return h0_; }

  const Eigen::Vector3d& b1() const { return b1_; }
  const Eigen::Vector3d& b2() const { return b2_; }
  const Eigen::Vector3d& g_ref() const { return b1_; }
  const Eigen::MatrixXd& H() const { return h_; }

  Eigen::VectorXd evaluate(const GroupElement& chi, const Eigen::VectorXd& noise) const;
  Eigen::VectorXd evaluate(const GroupElement& chi) const;
  /// g . y
  Eigen::VectorXd act(const GroupElement& g, const Eigen::VectorXd& y) const;

 private:
  OutputMap(OutputKind kind, GroupDescriptor d) : kind_(kind), descriptor_(d) {}
  void check(const GroupElement& g, const Eigen::VectorXd& y) const;

  OutputKind kind_;
  GroupDescriptor descriptor_;
  Eigen::Vector3d b1_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d b2_ = Eigen::Vector3d::Zero();
  Eigen::MatrixXd h_;
  Eigen::VectorXd h0_;
};

/// Per-step inputs and laws of the discrete model. Input sequences either
/// have one entry (constant) or one entry per step.
struct DiscreteModel {
  GroupDescriptor descriptor;
  std::vector<GroupElement> left_inputs;
  std::vector<GroupElement> right_inputs;
  NoiseSpec noise;
  OutputMap output;
  double dt;

  const GroupElement& left(int n) const;
  const GroupElement& right(int n) const;
  bool constant_left() const { return left_inputs.size() == 1; }
};

/// Constant-input scenario description.
struct Scenario {
  std::string name;
  GroupDescriptor descriptor = GroupDescriptor::so3();
  OutputMap output = OutputMap::two_vector(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY());
  NoiseSpec noise;
  double dt = 0.02;
  int horizon = 50;
  GroupElement truth_init = GroupElement::identity(GroupDescriptor::so3());
  Eigen::MatrixXd prior_cov;  ///< covariance of log(eta_0)
  Eigen::VectorXd upsilon;    ///< left algebra input (per second)
  Eigen::VectorXd omega;      ///< right algebra input (per second)

  void validate() const;
  DiscreteModel model() const;
  /// Per-step process covariance Q^w dt.
  Eigen::MatrixXd process_cov_per_step() const { return noise.process_cov * dt; }
  /// FNV-1a hash of every field that influences simulation or gains.
  std::uint64_t fingerprint() const;
};

/// Exact one-step flows of constant inputs: Upsilon = exp(dt upsilon),
/// Omega = exp(dt omega).
std::pair<GroupElement, GroupElement> discretize(const AlgebraVector& upsilon,
                                                 const AlgebraVector& omega, double dt);

/// Samplers for one model, built once and reused over many steps.
class NoiseSampler {
 public:
  NoiseSampler(const NoiseSpec& spec, const GroupDescriptor& d, int obs_dim, double dt);

  /// W_n = exp(w), w ~ N(0, Q^w dt).
  GroupElement process(RandomStream& rng) const;
  Eigen::VectorXd process_coords(RandomStream& rng) const;
  /// Regular Gaussian part plus, with the outlier probability, an extra
  /// isotropic Gaussian. Always consumes the same number of draws.
  Eigen::VectorXd observation(RandomStream& rng) const;

  const GaussianSampler& process_sampler() const { return process_; }
  const GaussianSampler& observation_sampler() const { return obs_; }
  const OutlierSpec& outlier() const { return outlier_; }

 private:
  GroupDescriptor descriptor_;
  int obs_dim_;
  GaussianSampler process_;
  GaussianSampler obs_;
  OutlierSpec outlier_;
};

GroupElement sample_process_noise(const NoiseSpec& spec, const GroupDescriptor& d, double dt,
                                  RandomStream& rng);

/// Y = h(chi, V) with freshly sampled V.
Eigen::VectorXd observe(const GroupElement& chi, const OutputMap& map, const NoiseSpec& noise,
                        RandomStream& rng);

struct Trajectory {
  std::vector<GroupElement> truth;               ///< chi_0..chi_N
  std::vector<Eigen::VectorXd> observations;     ///< Y_1..Y_N at [1..N]; [0] empty
  std::vector<GroupElement> process_noise;       ///< W_0..W_{N-1}
  std::vector<Eigen::VectorXd> observation_noise;  ///< V_1..V_N at [1..N]; [0] empty

  int steps() const { return static_cast<int>(truth.size()) - 1; }
};

/// Replays the model with given noise realizations.
Trajectory simulate_with_noise(const DiscreteModel& model, const GroupElement& truth0,
                               const std::vector<GroupElement>& process_noise,
                               const std::vector<Eigen::VectorXd>& observation_noise);

/// Draw order per step n: W_n, then V_{n+1}.
Trajectory simulate_trajectory(const DiscreteModel& model, const GroupElement& truth0, int steps,
                               RandomStream& rng);
Trajectory simulate_trajectory(const Scenario& scenario, RandomStream& rng);

/// eta_0 = exp(xi), xi ~ N(0, P0).
GroupElement sample_prior_error(const Scenario& scenario, RandomStream& rng);

}  // namespace invfilter
