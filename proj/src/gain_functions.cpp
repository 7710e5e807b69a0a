#include "invfilter/gain_functions.hpp"

#include <cmath>
#include <numbers>

#include "invfilter/errors.hpp"
#include "invfilter/so3.hpp"

namespace invfilter {

void TwoVectorGainParams::validate() const {
  if (!(k1 > 0.0 && k2 > 0.0 && k1 + k2 <= 1.0)) {
    throw ConfigError("two-vector gains need k1 > 0, k2 > 0 and k1 + k2 <= 1");
  }
  if (!(b1.cross(b2).norm() > 1e-12)) throw ConfigError("two-vector gain needs b1 x b2 != 0");
}

void HorizonGainParams::validate() const {
  if (!(k > 0.0 && k <= 1.0)) throw ConfigError("horizon gain needs 0 < k <= 1");
  if (!(lambda > 0.0 && lambda <= std::numbers::pi)) throw ConfigError("horizon gain needs 0 < lambda <= pi");
  if (!(g_ref.norm() > 0.0)) throw ConfigError("horizon gain needs a non-zero g_ref");
}

Eigen::Matrix3d two_vector_gain_matrix(const Eigen::Vector3d& y1, const Eigen::Vector3d& y2,
                                       const TwoVectorGainParams& p) {
  return so3::exp(p.k1 * y1.cross(p.b1) + p.k2 * y2.cross(p.b2));
}

Eigen::Matrix3d horizon_gain_matrix(const Eigen::Vector3d& y, const HorizonGainParams& p) {
  const Eigen::Vector3d c = y.cross(p.g_ref);
  const double n = c.norm();
  if (n < kHorizonDegenerate) return Eigen::Matrix3d::Identity();
  const double angle = so3::angle_between(y, p.g_ref);
  return so3::exp(((p.k * std::min(angle, p.lambda)) / n) * c);
}

namespace {

void check_input(const Eigen::VectorXd& y, Eigen::Index n, const char* what) {
  if (y.size() != n) {
    throw DimensionError(std::string(what) + " gain expects a vector of length " + std::to_string(n) +
                         ", got " + std::to_string(y.size()));
  }
}

}  // namespace

GroupElement two_vector_gain(const Eigen::VectorXd& y, const TwoVectorGainParams& p) {
  check_input(y, 6, "two-vector");
  return make_unchecked(GroupDescriptor::so3(), two_vector_gain_matrix(y.head<3>(), y.tail<3>(), p));
}

GroupElement horizon_gain(const Eigen::VectorXd& y, const HorizonGainParams& p) {
  check_input(y, 3, "horizon");
  return make_unchecked(GroupDescriptor::so3(), horizon_gain_matrix(Eigen::Vector3d(y), p));
}

GainFunction::GainFunction(GroupDescriptor d, Kind kind, Eigen::VectorXd h0)
    : descriptor_(d), kind_(std::move(kind)), h0_(std::move(h0)) {
  const GroupElement k0 = (*this)(h0_);
  const int n = d.matrix_size();
  const double defect = (k0.matrix() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(defect < 1e-12)) throw ConfigError("gain function is not the identity at h(I, 0)");
}

GainFunction GainFunction::linear_exp(const GroupDescriptor& d, const Eigen::MatrixXd& L,
                                      const Eigen::VectorXd& h0) {
  if (L.rows() != d.algebra_dim() || L.cols() != h0.size()) {
    throw DimensionError("linear gain must be " + std::to_string(d.algebra_dim()) + "x" +
                         std::to_string(h0.size()) + ", got " + std::to_string(L.rows()) + "x" +
                         std::to_string(L.cols()));
  }
  if (!L.allFinite()) throw NumericalError("linear gain has non-finite entries");
  return GainFunction(d, LinearExpGain{d, L, h0}, h0);
}

GainFunction GainFunction::two_vector(const TwoVectorGainParams& p) {
  p.validate();
  Eigen::VectorXd h0(6);
  h0 << p.b1, p.b2;
  return GainFunction(GroupDescriptor::so3(), p, h0);
}

GainFunction GainFunction::horizon(const HorizonGainParams& p) {
  p.validate();
  return GainFunction(GroupDescriptor::so3(), p, Eigen::VectorXd(p.g_ref));
}

GroupElement GainFunction::operator()(const Eigen::VectorXd& y) const {
  check_input(y, h0_.size(), "this");
  if (const auto* lin = std::get_if<LinearExpGain>(&kind_)) {
    return exp_g(descriptor_, lin->L * (y - lin->h0));
  }
  if (const auto* tv = std::get_if<TwoVectorGainParams>(&kind_)) return two_vector_gain(y, *tv);
  return horizon_gain(y, std::get<HorizonGainParams>(kind_));
}

}  // namespace invfilter
