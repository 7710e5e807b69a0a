/**
 * @file se3.hpp
 * @brief Rigid-motion group kernels. Algebra coordinates are ordered
 * (rotation, translation).
 */
#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "invfilter/so3.hpp"

namespace invfilter::se3 {

template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using Matrix6 = Eigen::Matrix<Scalar, 6, 6>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;

template <typename Derived>
Matrix4<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  using S = typename Derived::Scalar;
  Matrix4<S> m = Matrix4<S>::Zero();
  m.template topLeftCorner<3, 3>() = so3::hat(v.template head<3>());
  m.template topRightCorner<3, 1>() = v.template tail<3>();
  return m;
}

template <typename Derived>
Vector6<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  Vector6<typename Derived::Scalar> v;
  v << so3::vee(m.template topLeftCorner<3, 3>()), m.template topRightCorner<3, 1>();
  return v;
}

namespace detail {

/// (1-cos t)/t^2 and (t-sin t)/t^3.
template <typename Scalar>
void translation_coefficients(Scalar theta, Scalar& b, Scalar& c) {
  const Scalar t2 = theta * theta;
  if (theta < Scalar(so3::kSmallAngle)) {
    b = Scalar(0.5) - t2 / Scalar(24) + t2 * t2 / Scalar(720);
    c = Scalar(1) / Scalar(6) - t2 / Scalar(120) + t2 * t2 / Scalar(5040);
  } else {
    using std::sin;
    const Scalar half = sin(theta / Scalar(2));
    b = Scalar(2) * half * half / t2;
    c = (theta - sin(theta)) / (t2 * theta);
  }
}

}  // namespace detail

template <typename Derived>
Matrix4<typename Derived::Scalar> exp(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  using S = typename Derived::Scalar;
  const so3::Vector3<S> phi = v.template head<3>();
  const S theta = phi.norm();
  S b, c;
  detail::translation_coefficients(theta, b, c);
  const so3::Matrix3<S> k = so3::hat(phi);
  const so3::Matrix3<S> left_jacobian = so3::Matrix3<S>::Identity() + b * k + c * (k * k);
  Matrix4<S> g = Matrix4<S>::Identity();
  g.template topLeftCorner<3, 3>() = so3::exp(phi);
  g.template topRightCorner<3, 1>() = left_jacobian * v.template tail<3>();
  return g;
}

template <typename Derived>
Vector6<typename Derived::Scalar> log(const Eigen::MatrixBase<Derived>& g) {
  using S = typename Derived::Scalar;
  const so3::Vector3<S> phi = so3::log(g.template topLeftCorner<3, 3>());
  const S theta = phi.norm();
  const S t2 = theta * theta;
  S d;
  if (theta < S(so3::kSmallAngle)) {
    d = S(1) / S(12) + t2 / S(720) + t2 * t2 / S(30240);
  } else {
    using std::tan;
    d = (S(1) - (theta / S(2)) / tan(theta / S(2))) / t2;
  }
  const so3::Matrix3<S> k = so3::hat(phi);
  const so3::Matrix3<S> inv_left_jacobian = so3::Matrix3<S>::Identity() - k / S(2) + d * (k * k);
  Vector6<S> v;
  v << phi, inv_left_jacobian * g.template topRightCorner<3, 1>();
  return v;
}

template <typename Derived>
Matrix4<typename Derived::Scalar> inverse(const Eigen::MatrixBase<Derived>& g) {
  using S = typename Derived::Scalar;
  Matrix4<S> out = Matrix4<S>::Identity();
  const so3::Matrix3<S> rt = g.template topLeftCorner<3, 3>().transpose();
  out.template topLeftCorner<3, 3>() = rt;
  out.template topRightCorner<3, 1>() = -rt * g.template topRightCorner<3, 1>();
  return out;
}

template <typename DerivedA, typename DerivedB>
Matrix4<typename DerivedA::Scalar> compose(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  using S = typename DerivedA::Scalar;
  Matrix4<S> p = a * b;
  const so3::Matrix3<S> r = p.template topLeftCorner<3, 3>();
  if (so3::orthogonality_defect(r) > S(so3::kReorthonormalizeAbove)) {
    p.template topLeftCorner<3, 3>() = so3::project(r);
  }
  return p;
}

template <typename Derived>
Matrix6<typename Derived::Scalar> Ad(const Eigen::MatrixBase<Derived>& g) {
  using S = typename Derived::Scalar;
  const so3::Matrix3<S> r = g.template topLeftCorner<3, 3>();
  Matrix6<S> out = Matrix6<S>::Zero();
  out.template topLeftCorner<3, 3>() = r;
  out.template bottomRightCorner<3, 3>() = r;
  out.template bottomLeftCorner<3, 3>() = so3::hat(g.template topRightCorner<3, 1>()) * r;
  return out;
}

template <typename Derived>
Matrix6<typename Derived::Scalar> ad(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const so3::Matrix3<S> k = so3::hat(v.template head<3>());
  Matrix6<S> out = Matrix6<S>::Zero();
  out.template topLeftCorner<3, 3>() = k;
  out.template bottomRightCorner<3, 3>() = k;
  out.template bottomLeftCorner<3, 3>() = so3::hat(v.template tail<3>());
  return out;
}

}  // namespace invfilter::se3
