/**
 * @file tn.hpp
 * @brief Translation group T(N): R^N embedded as (N+1)x(N+1) matrices
 *
 *     | I_N  0 |
 *     | x^T  1 |
 *
 * Products add the bottom rows, so a filter written on this group is an
 * ordinary linear filter on R^N.
 */
#pragma once

#include <Eigen/Dense>

namespace invfilter::tn {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
MatrixX<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  MatrixX<S> m = MatrixX<S>::Zero(n + 1, n + 1);
  m.row(n).head(n) = x.transpose();
  return m;
}

template <typename Derived>
VectorX<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  const Eigen::Index n = m.rows() - 1;
  return m.row(n).head(n).transpose();
}

template <typename Derived>
MatrixX<typename Derived::Scalar> exp(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  MatrixX<S> g = MatrixX<S>::Identity(n + 1, n + 1);
  g.row(n).head(n) = x.transpose();
  return g;
}

template <typename Derived>
VectorX<typename Derived::Scalar> log(const Eigen::MatrixBase<Derived>& g) {
  return vee(g);
}

/// Same as exp(); named after its role in the linear-filter embedding.
template <typename Derived>
MatrixX<typename Derived::Scalar> embed(const Eigen::MatrixBase<Derived>& x) {
  return exp(x);
}

template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> compose(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  MatrixX<typename DerivedA::Scalar> p = a;
  const Eigen::Index n = a.rows() - 1;
  p.row(n).head(n) += b.row(n).head(n);
  return p;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> inverse(const Eigen::MatrixBase<Derived>& g) {
  MatrixX<typename Derived::Scalar> out = g;
  const Eigen::Index n = g.rows() - 1;
  out.row(n).head(n) = -g.row(n).head(n);
  return out;
}

/// The group is abelian: Ad is the identity and ad vanishes.
template <typename Scalar>
MatrixX<Scalar> Ad(Eigen::Index n) {
  return MatrixX<Scalar>::Identity(n, n);
}

template <typename Scalar>
MatrixX<Scalar> ad(Eigen::Index n) {
  return MatrixX<Scalar>::Zero(n, n);
}

}  // namespace invfilter::tn
