#include "invfilter/lie_group.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "invfilter/errors.hpp"
#include "invfilter/se3.hpp"
#include "invfilter/so3.hpp"
#include "invfilter/tn.hpp"

namespace invfilter {

GroupDescriptor GroupDescriptor::tn(int n) {
  if (n < 1) throw DimensionError("TN group needs n >= 1");
  return GroupDescriptor(GroupId::TN, n);
}

GroupDescriptor GroupDescriptor::parse(const std::string& text) {
  std::string t;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  if (t == "SO3") return so3();
  if (t == "SE3") return se3();
  if (t.size() > 2 && t.starts_with("TN")) {
    std::string digits = t.substr(2);
    if (digits.front() == '(' && digits.back() == ')') digits = digits.substr(1, digits.size() - 2);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      return tn(std::stoi(digits));
    }
  }
  throw ConfigError("unknown group '" + text + "' (expected SO3, SE3 or TN<n>)");
}

int GroupDescriptor::matrix_size() const {
  switch (id_) {
    case GroupId::SO3: return 3;
    case GroupId::SE3: return 4;
    case GroupId::TN: return algebra_dim_ + 1;
  }
  return 0;
}

std::string GroupDescriptor::name() const {
  switch (id_) {
    case GroupId::SO3: return "SO3";
    case GroupId::SE3: return "SE3";
    case GroupId::TN: return "TN" + std::to_string(algebra_dim_);
  }
  return {};
}

namespace {

double so3_defect(const Eigen::Ref<const Eigen::MatrixXd>& r) {
  const Eigen::Matrix3d m = r;
  double defect = so3::orthogonality_defect(m);
  if (m.determinant() <= 0.0) defect = std::max(defect, 1.0);
  return defect;
}

void check_size(const GroupDescriptor& d, const Eigen::MatrixXd& mat) {
  const int n = d.matrix_size();
  if (mat.rows() != n || mat.cols() != n) {
    throw DimensionError("matrix of size " + std::to_string(mat.rows()) + "x" +
                         std::to_string(mat.cols()) + " does not belong to " + d.name());
  }
}

double pattern_defect(const GroupDescriptor& d, const Eigen::MatrixXd& mat) {
  switch (d.id()) {
    case GroupId::SO3:
      return so3_defect(mat);
    case GroupId::SE3: {
      const double bottom = (mat.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff();
      // The bottom row must be exact.
      if (bottom != 0.0) return std::max(bottom, 1.0);
      return so3_defect(mat.topLeftCorner<3, 3>());
    }
    case GroupId::TN: {
      const int n = d.algebra_dim();
      Eigen::MatrixXd expected = tn::exp(Eigen::VectorXd(mat.row(n).head(n).transpose()));
      return (mat - expected).cwiseAbs().maxCoeff();
    }
  }
  return 0.0;
}

}  // namespace

GroupElement::GroupElement(GroupDescriptor descriptor, Eigen::MatrixXd mat)
    : descriptor_(descriptor), mat_(std::move(mat)) {
  check_size(descriptor_, mat_);
  if (!mat_.allFinite()) throw DimensionError("group element has non-finite entries");
  const double defect = pattern_defect(descriptor_, mat_);
  if (!(defect < kMembershipTolerance)) {
    throw DimensionError("matrix is not an element of " + descriptor_.name() +
                         " (defect " + std::to_string(defect) + ")");
  }
}

GroupElement GroupElement::identity(GroupDescriptor descriptor) {
  const int n = descriptor.matrix_size();
  return GroupElement(descriptor, Eigen::MatrixXd::Identity(n, n), Unchecked{});
}

Eigen::Matrix3d GroupElement::rotation() const {
  if (descriptor_.id() == GroupId::TN) throw DimensionError("TN elements have no rotation block");
  return mat_.topLeftCorner<3, 3>();
}

Eigen::VectorXd GroupElement::translation() const {
  switch (descriptor_.id()) {
    case GroupId::SE3: return mat_.topRightCorner<3, 1>();
    case GroupId::TN: return tn::vee(mat_);
    case GroupId::SO3: break;
  }
  throw DimensionError("SO3 elements have no translation part");
}

GroupElement make_unchecked(GroupDescriptor descriptor, Eigen::MatrixXd mat) {
  return GroupElement(descriptor, std::move(mat), GroupElement::Unchecked{});
}

AlgebraVector::AlgebraVector(GroupDescriptor d, Eigen::VectorXd c)
    : descriptor(d), coords(std::move(c)) {
  if (coords.size() != d.algebra_dim()) {
    throw DimensionError("algebra vector of length " + std::to_string(coords.size()) +
                         " for " + d.name() + " (dim " + std::to_string(d.algebra_dim()) + ")");
  }
}

AlgebraVector AlgebraVector::zero(GroupDescriptor d) {
  return AlgebraVector(d, Eigen::VectorXd::Zero(d.algebra_dim()));
}

Eigen::MatrixXd hat(const AlgebraVector& v) {
  switch (v.descriptor.id()) {
    case GroupId::SO3: return so3::hat(Eigen::Vector3d(v.coords));
    case GroupId::SE3: return se3::hat(se3::Vector6<double>(v.coords));
    case GroupId::TN: return tn::hat(v.coords);
  }
  return {};
}

AlgebraVector vee(const Eigen::MatrixXd& m, const GroupDescriptor& d) {
  const int n = d.matrix_size();
  if (m.rows() != n || m.cols() != n) throw DimensionError("vee: wrong matrix size for " + d.name());
  AlgebraVector v = AlgebraVector::zero(d);
  switch (d.id()) {
    case GroupId::SO3: v.coords = so3::vee(m.topLeftCorner<3, 3>()); break;
    case GroupId::SE3: v.coords = se3::vee(Eigen::Matrix4d(m)); break;
    case GroupId::TN: v.coords = tn::vee(m); break;
  }
  const double defect = (hat(v) - m).cwiseAbs().maxCoeff();
  if (!(defect <= 1e-9)) {
    throw DimensionError("vee: matrix is not in the algebra of " + d.name());
  }
  return v;
}

GroupElement exp_g(const AlgebraVector& v) {
  const GroupDescriptor& d = v.descriptor;
  switch (d.id()) {
    case GroupId::SO3: return make_unchecked(d, so3::exp(Eigen::Vector3d(v.coords)));
    case GroupId::SE3: return make_unchecked(d, se3::exp(se3::Vector6<double>(v.coords)));
    case GroupId::TN: return make_unchecked(d, tn::exp(v.coords));
  }
  return GroupElement::identity(d);
}

GroupElement exp_g(const GroupDescriptor& d, const Eigen::VectorXd& coords) {
  return exp_g(AlgebraVector(d, coords));
}

AlgebraVector log_g(const GroupElement& g) {
  const GroupDescriptor& d = g.descriptor();
  switch (d.id()) {
    case GroupId::SO3: return AlgebraVector(d, so3::log(Eigen::Matrix3d(g.matrix())));
    case GroupId::SE3: return AlgebraVector(d, se3::log(Eigen::Matrix4d(g.matrix())));
    case GroupId::TN: return AlgebraVector(d, tn::log(g.matrix()));
  }
  return AlgebraVector::zero(d);
}

Eigen::MatrixXd adjoint_Ad(const GroupElement& g) {
  switch (g.descriptor().id()) {
    case GroupId::SO3: return so3::Ad(Eigen::Matrix3d(g.matrix()));
    case GroupId::SE3: return se3::Ad(Eigen::Matrix4d(g.matrix()));
    case GroupId::TN: return tn::Ad<double>(g.descriptor().algebra_dim());
  }
  return {};
}

Eigen::MatrixXd adjoint_ad(const AlgebraVector& v) {
  switch (v.descriptor.id()) {
    case GroupId::SO3: return so3::ad(Eigen::Vector3d(v.coords));
    case GroupId::SE3: return se3::ad(se3::Vector6<double>(v.coords));
    case GroupId::TN: return tn::ad<double>(v.descriptor.algebra_dim());
  }
  return {};
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  const GroupDescriptor& d = a.descriptor();
  if (!(d == b.descriptor())) {
    throw DimensionError("compose: " + d.name() + " with " + b.descriptor().name());
  }
  switch (d.id()) {
    case GroupId::SO3:
      return make_unchecked(d, so3::compose(Eigen::Matrix3d(a.matrix()), Eigen::Matrix3d(b.matrix())));
    case GroupId::SE3:
      return make_unchecked(d, se3::compose(Eigen::Matrix4d(a.matrix()), Eigen::Matrix4d(b.matrix())));
    case GroupId::TN:
      return make_unchecked(d, tn::compose(a.matrix(), b.matrix()));
  }
  return a;
}

GroupElement inverse(const GroupElement& a) {
  const GroupDescriptor& d = a.descriptor();
  switch (d.id()) {
    case GroupId::SO3: return make_unchecked(d, a.matrix().transpose());
    case GroupId::SE3: return make_unchecked(d, se3::inverse(Eigen::Matrix4d(a.matrix())));
    case GroupId::TN: return make_unchecked(d, tn::inverse(a.matrix()));
  }
  return a;
}

GroupElement identity(const GroupDescriptor& d) { return GroupElement::identity(d); }

GroupElement embed_translation(const Eigen::VectorXd& x) {
  const GroupDescriptor d = GroupDescriptor::tn(static_cast<int>(x.size()));
  return make_unchecked(d, tn::embed(x));
}

double rotation_angle(const GroupElement& g) {
  if (g.descriptor().id() == GroupId::TN) return 0.0;
  const Eigen::Matrix3d r = g.matrix().topLeftCorner<3, 3>();
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double s = (so3::vee(r - r.transpose()) / 2.0).norm();
  return std::atan2(s, c);
}

double membership_defect(const GroupElement& g) { return pattern_defect(g.descriptor(), g.matrix()); }

}  // namespace invfilter
