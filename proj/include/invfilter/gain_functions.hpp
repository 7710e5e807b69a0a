/**
 * @file gain_functions.hpp
 * @brief Gain functions y -> K(y) in G used by the invariant update.
 *
 * Three families: the linear-exponential gain exp(L (y - h0)) of the Kalman
 * type filters, the two-vector attitude gain and the thresholded horizon gain.
 * The fixed-size kernels are exposed separately for the Monte-Carlo loops.
 */
#pragma once

#include <variant>

#include <Eigen/Dense>

#include "invfilter/lie_group.hpp"
#include "invfilter/models.hpp"

namespace invfilter {

struct TwoVectorGainParams {
  double k1 = 0.3;
  double k2 = 0.3;
  Eigen::Vector3d b1 = Eigen::Vector3d::UnitX();
  Eigen::Vector3d b2 = Eigen::Vector3d::UnitY();

  /// Requires k1 > 0, k2 > 0, k1 + k2 <= 1 and b1 x b2 != 0.
  void validate() const;
};

struct HorizonGainParams {
  double k = 0.1202;
  double lambda = 0.0029;  ///< radians
  Eigen::Vector3d g_ref = Eigen::Vector3d::UnitZ();

  /// Requires 0 < k <= 1 and 0 < lambda <= pi.
  void validate() const;
};

/// Degenerate cross-product threshold of the horizon gain.
inline constexpr double kHorizonDegenerate = 1e-12;

/// exp(k1 (y1 x b1) + k2 (y2 x b2)).
Eigen::Matrix3d two_vector_gain_matrix(const Eigen::Vector3d& y1, const Eigen::Vector3d& y2,
                                       const TwoVectorGainParams& p);
/// exp(k min(angle(y, g), lambda) (y x g)/|y x g|), identity when |y x g| < 1e-12.
Eigen::Matrix3d horizon_gain_matrix(const Eigen::Vector3d& y, const HorizonGainParams& p);

GroupElement two_vector_gain(const Eigen::VectorXd& y, const TwoVectorGainParams& p);
GroupElement horizon_gain(const Eigen::VectorXd& y, const HorizonGainParams& p);

/// K(y) = exp(L (y - h0)).
struct LinearExpGain {
  GroupDescriptor descriptor;
  Eigen::MatrixXd L;  ///< algebra_dim x p
  Eigen::VectorXd h0;
};

/// A gain function on a given group. Construction checks K(h0) = I to 1e-12.
class GainFunction {
 public:
  static GainFunction linear_exp(const GroupDescriptor& d, const Eigen::MatrixXd& L,
                                 const Eigen::VectorXd& h0);
  static GainFunction two_vector(const TwoVectorGainParams& p);
  static GainFunction horizon(const HorizonGainParams& p);

  GroupElement operator()(const Eigen::VectorXd& y) const;

  const GroupDescriptor& descriptor() const { return descriptor_; }
  /// Length of the vectors the gain accepts.
  int input_dim() const { return static_cast<int>(h0_.size()); }
  /// The output value at which the gain is the identity.
  const Eigen::VectorXd& h0() const { return h0_; }

  const LinearExpGain* as_linear() const { return std::get_if<LinearExpGain>(&kind_); }
  const TwoVectorGainParams* as_two_vector() const { return std::get_if<TwoVectorGainParams>(&kind_); }
  const HorizonGainParams* as_horizon() const { return std::get_if<HorizonGainParams>(&kind_); }

 private:
  using Kind = std::variant<LinearExpGain, TwoVectorGainParams, HorizonGainParams>;
  GainFunction(GroupDescriptor d, Kind kind, Eigen::VectorXd h0);

  GroupDescriptor descriptor_;
  Kind kind_;
  Eigen::VectorXd h0_;
};

}  // namespace invfilter
