/**
 * @file lie_group.hpp
 * @brief Runtime-typed matrix Lie group elements for SO(3), SE(3) and T(N).
 *
 * The filters, models and the experiment harness pick the group from a
 * scenario file, so they work on these runtime types. Each operation
 * dispatches to the fixed-size kernels in so3.hpp / se3.hpp / tn.hpp.
 */
#pragma once

#include <string>

#include <Eigen/Dense>

namespace invfilter {

enum class GroupId { SO3, SE3, TN };

/// Which group, and therefore the algebra dimension and matrix size.
class GroupDescriptor {
 public:
  static GroupDescriptor so3() { return GroupDescriptor(GroupId::SO3, 3); }
  static GroupDescriptor se3() { return GroupDescriptor(GroupId::SE3, 6); }
  /// Translation group embedding R^n; n >= 1.
  static GroupDescriptor tn(int n);
  /// Parses "SO3", "SE3", "TN4" (case-insensitive).
  static GroupDescriptor parse(const std::string& text);

  GroupId id() const { return id_; }
  int algebra_dim() const { return algebra_dim_; }
  int matrix_size() const;
  std::string name() const;

  friend bool operator==(const GroupDescriptor&, const GroupDescriptor&) = default;

 private:
  GroupDescriptor(GroupId id, int algebra_dim) : id_(id), algebra_dim_(algebra_dim) {}
  GroupId id_;
  int algebra_dim_;
};

/// Membership tolerance used when validating elements.
inline constexpr double kMembershipTolerance = 1e-9;

/// A validated group element. Immutable after construction.
class GroupElement {
 public:
  /// Throws DimensionError if `mat` has the wrong size or violates the
  /// group's membership pattern beyond kMembershipTolerance.
  GroupElement(GroupDescriptor descriptor, Eigen::MatrixXd mat);

  static GroupElement identity(GroupDescriptor descriptor);

  const GroupDescriptor& descriptor() const { return descriptor_; }
  const Eigen::MatrixXd& matrix() const { return mat_; }

  /// Rotation block for SO3/SE3 elements.
  Eigen::Matrix3d rotation() const;
  /// Translation column (SE3) or bottom row (TN).
  Eigen::VectorXd translation() const;

 private:
  struct Unchecked {};
  GroupElement(GroupDescriptor descriptor, Eigen::MatrixXd mat, Unchecked)
      : descriptor_(descriptor), mat_(std::move(mat)) {}

  GroupDescriptor descriptor_;
  Eigen::MatrixXd mat_;

  friend GroupElement make_unchecked(GroupDescriptor, Eigen::MatrixXd);
};

/// Skips validation; for kernels whose output is a group element by
/// construction.
GroupElement make_unchecked(GroupDescriptor descriptor, Eigen::MatrixXd mat);

/// Coordinates in R^{dim g}, identified with the algebra through hat().
struct AlgebraVector {
  AlgebraVector(GroupDescriptor d, Eigen::VectorXd c);
  static AlgebraVector zero(GroupDescriptor d);

  GroupDescriptor descriptor;
  Eigen::VectorXd coords;
};

Eigen::MatrixXd hat(const AlgebraVector& v);
/// Throws DimensionError if `m` is not within 1e-9 of the algebra pattern.
AlgebraVector vee(const Eigen::MatrixXd& m, const GroupDescriptor& d);

GroupElement exp_g(const AlgebraVector& v);
GroupElement exp_g(const GroupDescriptor& d, const Eigen::VectorXd& coords);
/// Principal logarithm; throws BranchError at the rotation cut.
AlgebraVector log_g(const GroupElement& g);

Eigen::MatrixXd adjoint_Ad(const GroupElement& g);
Eigen::MatrixXd adjoint_ad(const AlgebraVector& v);

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& a);
GroupElement identity(const GroupDescriptor& d);
inline GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  return compose(a, b);
}

/// R^N -> T(N) embedding.
GroupElement embed_translation(const Eigen::VectorXd& x);

/// Rotation angle of the SO3 part (the norm of the rotational log); the
/// diagnostic distance to the identity used by reports.
double rotation_angle(const GroupElement& g);

/// Largest entry-wise deviation from the membership pattern.
double membership_defect(const GroupElement& g);

}  // namespace invfilter
