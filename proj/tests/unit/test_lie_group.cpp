#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "invfilter/errors.hpp"
#include "invfilter/lie_group.hpp"
#include "invfilter/random.hpp"
#include "invfilter/se3.hpp"
#include "invfilter/so3.hpp"
#include "oracles.hpp"

using namespace invfilter;

namespace {

std::vector<GroupDescriptor> groups() {
  return {GroupDescriptor::so3(), GroupDescriptor::se3(), GroupDescriptor::tn(1), GroupDescriptor::tn(4)};
}

// Algebra vector with rotation part of norm below `max_angle`.
Eigen::VectorXd random_coords(const GroupDescriptor& d, RandomStream& rng, double max_angle = 3.0) {
  Eigen::VectorXd v = rng.gaussian_vector(d.algebra_dim());
  if (d.id() != GroupId::TN) {
    const Eigen::Vector3d r = v.head<3>();
    v.head<3>() = r.normalized() * max_angle * rng.uniform();
  }
  return v;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(LieGroup, DescriptorParse) {
  EXPECT_EQ(GroupDescriptor::parse("so3"), GroupDescriptor::so3());
  EXPECT_EQ(GroupDescriptor::parse("SE3"), GroupDescriptor::se3());
  EXPECT_EQ(GroupDescriptor::parse("TN4"), GroupDescriptor::tn(4));
  EXPECT_EQ(GroupDescriptor::tn(4).matrix_size(), 5);
  EXPECT_THROW(GroupDescriptor::parse("SO4"), ConfigError);
  EXPECT_THROW(GroupDescriptor::tn(0), DimensionError);
}

TEST(LieGroup, HatVeeRoundTrip) {
  RandomStream rng(3);
  for (const auto& d : groups()) {
    const AlgebraVector v(d, rng.gaussian_vector(d.algebra_dim()));
    EXPECT_LT(max_abs(vee(hat(v), d).coords - v.coords), 1e-15) << d.name();
  }
}

TEST(LieGroup, ExpMatchesPowerSeries) {
  RandomStream rng(4);
  for (const auto& d : groups()) {
    for (int i = 0; i < 200; ++i) {
      const AlgebraVector v(d, random_coords(d, rng));
      EXPECT_LT(max_abs(exp_g(v).matrix() - oracle::series_expm(hat(v))), 1e-12) << d.name();
    }
  }
}

TEST(LieGroup, SmallAngleBranchIsSmooth) {
  // Taylor branch below 1e-4 against the series just on both sides.
  for (double theta : {1e-12, 1e-8, 9.99e-5, 1.0001e-4, 1e-3}) {
    const Eigen::Vector3d w = theta * Eigen::Vector3d(1, -2, 2) / 3.0;
    EXPECT_LT(max_abs(so3::exp(w) - oracle::series_expm(so3::hat(w))), 1e-15);
    EXPECT_LT((so3::log(so3::exp(w)) - w).norm(), 1e-15 + 1e-10 * theta);
    Eigen::Matrix<double, 6, 1> x;
    x << w, 1.0, -2.0, 0.5;
    EXPECT_LT(max_abs(se3::exp(x) - oracle::series_expm(se3::hat(x))), 1e-14);
  }
}

TEST(LieGroup, LogRoundTrip) {
  RandomStream rng(5);
  for (const auto& d : groups()) {
    for (int i = 0; i < 500; ++i) {
      const AlgebraVector v(d, random_coords(d, rng, 3.1));
      EXPECT_LT(max_abs(log_g(exp_g(v)).coords - v.coords), 1e-9) << d.name();
    }
  }
}

TEST(LieGroup, LogNearPi) {
  // Just inside the branch margin, on an axis where the atan2 route is weak.
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.4, 0.5).normalized();
  const double theta = std::numbers::pi - 1e-5;
  EXPECT_LT((so3::log(so3::exp(theta * axis)) - theta * axis).norm(), 1e-9);
}

TEST(LieGroup, LogThrowsAtBranchCut) {
  const Eigen::Matrix3d r = so3::exp(Eigen::Vector3d(0, 0, std::numbers::pi));
  EXPECT_THROW(so3::log(r), BranchError);
  EXPECT_THROW(log_g(GroupElement(GroupDescriptor::so3(), r)), BranchError);
}

TEST(LieGroup, AdjointIdentity) {
  RandomStream rng(6);
  for (const auto& d : groups()) {
    for (int i = 0; i < 200; ++i) {
      const GroupElement g = exp_g(d, random_coords(d, rng));
      const AlgebraVector u(d, random_coords(d, rng, 1.0));
      const Eigen::MatrixXd lhs = exp_g(d, adjoint_Ad(g) * u.coords).matrix();
      const Eigen::MatrixXd rhs = (g * exp_g(u) * inverse(g)).matrix();
      EXPECT_LT(max_abs(lhs - rhs), 1e-9) << d.name();
    }
  }
}

TEST(LieGroup, SmallAdjointIsBracketAndDerivative) {
  RandomStream rng(7);
  for (const auto& d : groups()) {
    const AlgebraVector u(d, rng.gaussian_vector(d.algebra_dim()));
    const AlgebraVector v(d, rng.gaussian_vector(d.algebra_dim()));
    const Eigen::MatrixXd bracket = hat(u) * hat(v) - hat(v) * hat(u);
    EXPECT_LT(max_abs(adjoint_ad(u) * v.coords - vee(bracket, d).coords), 1e-12);
    const double h = 1e-5;
    const Eigen::VectorXd fd = (adjoint_Ad(exp_g(d, h * u.coords)) * v.coords -
                                adjoint_Ad(exp_g(d, -h * u.coords)) * v.coords) / (2 * h);
    EXPECT_LT(max_abs(adjoint_ad(u) * v.coords - fd), 1e-4) << d.name();
  }
}

TEST(LieGroup, InverseAndIdentity) {
  RandomStream rng(8);
  for (const auto& d : groups()) {
    const GroupElement g = exp_g(d, random_coords(d, rng));
    EXPECT_LT(max_abs((g * inverse(g)).matrix() - identity(d).matrix()), 1e-14);
    EXPECT_LT(max_abs(inverse(g).matrix() - g.matrix().inverse()), 1e-12);
  }
}

TEST(LieGroup, MembershipValidation) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 1) = 0.1;
  EXPECT_THROW(GroupElement(GroupDescriptor::so3(), m), DimensionError);
  EXPECT_THROW(GroupElement(GroupDescriptor::so3(), Eigen::Matrix4d::Identity()), DimensionError);
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1;
  EXPECT_THROW(GroupElement(GroupDescriptor::so3(), reflection), DimensionError);
  EXPECT_THROW(compose(identity(GroupDescriptor::so3()), identity(GroupDescriptor::se3())), DimensionError);
  EXPECT_THROW(AlgebraVector(GroupDescriptor::se3(), Eigen::Vector3d::Zero()), DimensionError);
}

TEST(LieGroup, TranslationEmbedding) {
  const Eigen::Vector4d x(1, -2, 3, 0.5), y(0.1, 0.2, 0.3, 0.4);
  const GroupElement g = embed_translation(x) * embed_translation(y);
  EXPECT_LT(max_abs(g.translation() - (x + y)), 1e-15);
  EXPECT_LT(max_abs(log_g(embed_translation(x)).coords - x), 1e-15);
  EXPECT_TRUE(adjoint_Ad(g).isIdentity(0.0));
}

TEST(LieGroup, LongProductStaysOrthogonal) {
  RandomStream rng(9);
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d step = so3::exp(Eigen::Vector3d(0.3, -0.7, 1.1));
  for (int i = 0; i < 100000; ++i) r = so3::compose(r, step);
  EXPECT_LT(so3::orthogonality_defect(r), 1e-9);
}

TEST(LieGroup, ProjectRestoresRotation) {
  RandomStream rng(10);
  const Eigen::Matrix3d r = random_rotation(rng);
  const Eigen::Matrix3d noisy = r + 1e-6 * Eigen::Matrix3d::Random();
  const Eigen::Matrix3d p = so3::project(noisy);
  EXPECT_LT(so3::orthogonality_defect(p), 1e-14);
  EXPECT_NEAR(p.determinant(), 1.0, 1e-14);
  EXPECT_LT(max_abs(p - r), 1e-5);
}

TEST(LieGroup, RotationAngle) {
  const GroupElement g = exp_g(GroupDescriptor::so3(), Eigen::Vector3d(0.3, 0.4, 0.0));
  EXPECT_NEAR(rotation_angle(g), 0.5, 1e-14);
}
