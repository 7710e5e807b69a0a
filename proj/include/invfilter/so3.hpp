/**
 * @file so3.hpp
 * @brief Rotation group kernels on fixed-size Eigen types.
 *
 * Elements are plain 3x3 rotation matrices, algebra coordinates are rotation
 * vectors (radians). All functions are templated on the scalar type and accept
 * any Eigen expression of the right shape.
 */
#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "invfilter/errors.hpp"

namespace invfilter::so3 {

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Below this rotation angle the sin/cos coefficients switch to Taylor series.
inline constexpr double kSmallAngle = 1e-4;
/// Angles closer than this to pi are rejected by log().
inline constexpr double kBranchMargin = 1e-6;
/// Orthogonality drift that triggers re-projection after a product.
inline constexpr double kReorthonormalizeAbove = 1e-12;

template <typename Derived>
Matrix3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  Matrix3<S> m;
  m << S(0), -v(2), v(1),
       v(2), S(0), -v(0),
       -v(1), v(0), S(0);
  return m;
}

template <typename Derived>
Vector3<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  return Vector3<typename Derived::Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

/// sin(t)/t and (1-cos t)/t^2 with a 4th-order series near zero.
template <typename Scalar>
void rodrigues_coefficients(Scalar theta, Scalar& a, Scalar& b) {
  const Scalar t2 = theta * theta;
  if (theta < Scalar(kSmallAngle)) {
    a = Scalar(1) - t2 / Scalar(6) + t2 * t2 / Scalar(120);
    b = Scalar(0.5) - t2 / Scalar(24) + t2 * t2 / Scalar(720);
  } else {
    using std::sin;
    const Scalar half = sin(theta / Scalar(2));
    a = sin(theta) / theta;
    b = Scalar(2) * half * half / t2;
  }
}

template <typename Derived>
Matrix3<typename Derived::Scalar> exp(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  const S theta = v.norm();
  S a, b;
  rodrigues_coefficients(theta, a, b);
  const Matrix3<S> k = hat(v);
  return Matrix3<S>::Identity() + a * k + b * (k * k);
}

/// Principal logarithm. Throws BranchError when the angle is within
/// kBranchMargin of pi, where the rotation axis sign is undetermined.
template <typename Derived>
Vector3<typename Derived::Scalar> log(const Eigen::MatrixBase<Derived>& r) {
  using S = typename Derived::Scalar;
  using std::atan2;
  using std::sqrt;
  const S c = (r.trace() - S(1)) / S(2);
  const Vector3<S> s_vec = vee(r - r.transpose()) / S(2);
  const S s = s_vec.norm();
  const S theta = atan2(s, c);
  if (theta > S(std::numbers::pi - kBranchMargin)) {
    throw BranchError("so3::log: rotation angle too close to pi");
  }
  if (theta < S(kSmallAngle)) {
    const S t2 = theta * theta;
    return (S(1) + t2 / S(6) + S(7) * t2 * t2 / S(360)) * s_vec;
  }
  if (c > S(-0.5)) {
    return (theta / s) * s_vec;
  }
  // Large angles: the antisymmetric part is small, take the axis from the
  // symmetric part (1-c) a a^T instead and the sign from s_vec.
  const Matrix3<S> m = (r + r.transpose()) / S(2) - c * Matrix3<S>::Identity();
  Eigen::Index i = 0;
  m.diagonal().maxCoeff(&i);
  Vector3<S> axis = m.col(i) / sqrt(m(i, i) * (S(1) - c));
  if (axis.dot(s_vec) < S(0)) axis = -axis;
  return theta * axis.normalized();
}

template <typename Derived>
typename Derived::Scalar orthogonality_defect(const Eigen::MatrixBase<Derived>& r) {
  using S = typename Derived::Scalar;
  return (r.transpose() * r - Matrix3<S>::Identity()).cwiseAbs().maxCoeff();
}

/// Nearest rotation in Frobenius norm (polar factor).
template <typename Derived>
Matrix3<typename Derived::Scalar> project(const Eigen::MatrixBase<Derived>& r) {
  using S = typename Derived::Scalar;
  Eigen::JacobiSVD<Matrix3<S>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3<S> u = svd.matrixU();
  const Matrix3<S> v = svd.matrixV();
  if ((u * v.transpose()).determinant() < S(0)) u.col(2) = -u.col(2);
  return u * v.transpose();
}

template <typename DerivedA, typename DerivedB>
Matrix3<typename DerivedA::Scalar> compose(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  using S = typename DerivedA::Scalar;
  Matrix3<S> p = a * b;
  if (orthogonality_defect(p) > S(kReorthonormalizeAbove)) p = project(p);
  return p;
}

template <typename Derived>
Matrix3<typename Derived::Scalar> Ad(const Eigen::MatrixBase<Derived>& r) {
  return r;
}

template <typename Derived>
Matrix3<typename Derived::Scalar> ad(const Eigen::MatrixBase<Derived>& v) {
  return hat(v);
}

/// Angle between two non-zero vectors, accurate at both ends of [0, pi].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar angle_between(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using std::atan2;
  return atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace invfilter::so3
