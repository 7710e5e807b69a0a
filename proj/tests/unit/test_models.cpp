#include <cmath>

#include <gtest/gtest.h>

#include "invfilter/config.hpp"
#include "invfilter/errors.hpp"
#include "invfilter/models.hpp"
#include "invfilter/random.hpp"
#include "invfilter/so3.hpp"
#include "oracles.hpp"

using namespace invfilter;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

GroupElement random_so3(RandomStream& rng) { return GroupElement(GroupDescriptor::so3(), random_rotation(rng)); }

GroupElement random_se3(RandomStream& rng) {
  Eigen::VectorXd v = rng.gaussian_vector(6);
  v.head<3>() *= 0.8;
  return exp_g(GroupDescriptor::se3(), v);
}

}  // namespace

TEST(GaussianSampler, MomentsMatchCovariance) {
  Eigen::Matrix3d cov;
  cov << 2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.5;
  const GaussianSampler s(cov);
  RandomStream rng(11);
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d x = s.sample(rng);
    mean += x;
    acc += x * x.transpose();
  }
  EXPECT_LT(max_abs(mean / n), 0.01);
  EXPECT_LT(max_abs(acc / n - cov), 0.02);
  EXPECT_LT(max_abs(s.factor() * s.factor().transpose() - cov), 1e-12);
}

TEST(GaussianSampler, RejectsBadCovariance) {
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(GaussianSampler{asym}, NumericalError);
  EXPECT_THROW(GaussianSampler{Eigen::Matrix2d(Eigen::Vector2d(1, -1).asDiagonal())}, NumericalError);
  EXPECT_THROW(GaussianSampler{Eigen::MatrixXd::Zero(2, 3)}, DimensionError);
}

TEST(OutputMap, TwoVectorEquivariance) {
  const OutputMap h = OutputMap::two_vector(Eigen::Vector3d::UnitX(), Eigen::Vector3d(0, 1, 1).normalized());
  RandomStream rng(12);
  for (int i = 0; i < 100; ++i) {
    const GroupElement chi = random_so3(rng), g = random_so3(rng);
    const Eigen::VectorXd v = 0.1 * rng.gaussian_vector(6);
    // h(chi g, V) = g^{-1} h(chi, V)
    EXPECT_LT(max_abs(h.act(g, h.evaluate(chi * g, v)) - h.evaluate(chi, v)), 1e-14);
    EXPECT_LT(max_abs(h.act(g * chi, v) - h.act(g, h.act(chi, v))), 1e-14);
  }
  EXPECT_LT(max_abs(h.evaluate(identity(GroupDescriptor::so3())) - h.h0()), 1e-15);
}

TEST(OutputMap, VelocitySe3Equivariance) {
  const OutputMap h = OutputMap::velocity_se3();
  RandomStream rng(13);
  for (int i = 0; i < 100; ++i) {
    const GroupElement chi = random_se3(rng), g = random_se3(rng);
    const Eigen::VectorXd v = rng.gaussian_vector(3);
    EXPECT_LT(max_abs(h.act(g, h.evaluate(chi * g, v)) - h.evaluate(chi, v)), 1e-12);
    EXPECT_LT(max_abs(h.act(g * chi, v) - h.act(g, h.act(chi, v))), 1e-12);
  }
}

TEST(OutputMap, LinearEquivariance) {
  Eigen::MatrixXd H(2, 3);
  H << 1, 2, 0, 0, -1, 0.5;
  const OutputMap h = OutputMap::linear(H);
  const Eigen::Vector3d x(0.4, -1.0, 2.0), a(1.0, 0.5, -0.5);
  const Eigen::Vector2d v(0.1, -0.2);
  EXPECT_LT(max_abs(h.evaluate(embed_translation(x), v) - (H * x + v)), 1e-15);
  const GroupElement g = embed_translation(a);
  EXPECT_LT(max_abs(h.act(g, h.evaluate(embed_translation(x + a), v)) - h.evaluate(embed_translation(x), v)), 1e-14);
}

TEST(OutputMap, DimensionChecks) {
  const OutputMap h = OutputMap::single_vector(Eigen::Vector3d::UnitZ());
  EXPECT_THROW(h.evaluate(identity(GroupDescriptor::so3()), Eigen::VectorXd::Zero(6)), DimensionError);
  EXPECT_THROW(h.evaluate(identity(GroupDescriptor::se3())), DimensionError);
  EXPECT_THROW(OutputMap::two_vector(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitX()), ConfigError);
  EXPECT_EQ(parse_output_kind("velocity_se3"), OutputKind::VelocitySE3);
  EXPECT_THROW(parse_output_kind("nope"), ConfigError);
}

TEST(Discretize, MatchesRk4OfMatrixOde) {
  // dX/dt = u X with X(0) = I gives exp(dt u); same for right inputs.
  RandomStream rng(14);
  for (const auto& d : {GroupDescriptor::so3(), GroupDescriptor::se3(), GroupDescriptor::tn(3)}) {
    const AlgebraVector u(d, rng.gaussian_vector(d.algebra_dim()));
    const AlgebraVector w(d, rng.gaussian_vector(d.algebra_dim()));
    const double dt = 0.37;
    const auto [left, right] = discretize(u, w, dt);
    const Eigen::MatrixXd A = hat(u);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    const Eigen::MatrixXd X =
        oracle::rk4([&](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return A * x; }, I, 0, dt, 2000);
    EXPECT_LT(max_abs(left.matrix() - X), 1e-11) << d.name();
    const Eigen::MatrixXd B = hat(w);
    const Eigen::MatrixXd Y =
        oracle::rk4([&](double, const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return x * B; }, I, 0, dt, 2000);
    EXPECT_LT(max_abs(right.matrix() - Y), 1e-11) << d.name();
  }
}

TEST(Simulation, ReplayWithNoiseLogIsExact) {
  const Scenario s = scenario_from_config(preset("exp-table3"));
  const DiscreteModel model = s.model();
  RandomStream rng(15);
  const Trajectory tr = simulate_trajectory(model, s.truth_init, 50, rng);
  const Trajectory again = simulate_with_noise(model, s.truth_init, tr.process_noise, tr.observation_noise);
  for (std::size_t n = 0; n < tr.truth.size(); ++n) {
    EXPECT_EQ(tr.truth[n].matrix(), again.truth[n].matrix());
    if (n > 0) {
      EXPECT_EQ(tr.observations[n], again.observations[n]);
      // Y = h(chi, V) by construction.
      EXPECT_LT(max_abs(tr.observations[n] - s.output.evaluate(tr.truth[n], tr.observation_noise[n])), 1e-15);
    }
  }
  // chi_{n+1} = Upsilon W_n chi_n Omega
  for (int n = 0; n < 50; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const Eigen::Matrix3d expect =
        model.left(n).matrix() * tr.process_noise[i].matrix() * tr.truth[i].matrix() * model.right(n).matrix();
    EXPECT_LT(max_abs(tr.truth[i + 1].matrix() - expect), 1e-14);
  }
}

TEST(Simulation, SameStreamSameTrajectory) {
  const Scenario s = scenario_from_config(preset("exp-horizon"));
  RandomStream a(7, 3), b(7, 3), c(7, 4);
  const Trajectory ta = simulate_trajectory(s, a), tb = simulate_trajectory(s, b), tc = simulate_trajectory(s, c);
  EXPECT_EQ(ta.truth.back().matrix(), tb.truth.back().matrix());
  EXPECT_NE(ta.truth.back().matrix(), tc.truth.back().matrix());
}

TEST(Simulation, OutlierRate) {
  NoiseSpec spec;
  spec.process_cov = Eigen::Matrix3d::Zero();
  spec.obs_cov = Eigen::Matrix3d::Identity() * 1e-8;
  spec.outlier.probability = 0.05;
  spec.outlier.std_dev = 1.0;
  const NoiseSampler sampler(spec, GroupDescriptor::so3(), 3, 0.02);
  RandomStream rng(16);
  const int n = 100000;
  int outliers = 0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = sampler.observation(rng);
    if (v.norm() > 1e-2) {
      ++outliers;
      sq += v.squaredNorm();
    }
  }
  const double rate = static_cast<double>(outliers) / n;
  EXPECT_NEAR(rate, 0.05, 4 * std::sqrt(0.05 * 0.95 / n));
  EXPECT_NEAR(sq / outliers, 3.0, 0.15);
}

TEST(Simulation, ProcessNoiseCovariancePerStep) {
  NoiseSpec spec;
  spec.process_cov = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  spec.obs_cov = Eigen::Matrix3d::Identity();
  const double dt = 0.1;
  const NoiseSampler sampler(spec, GroupDescriptor::so3(), 3, dt);
  RandomStream rng(17);
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d w = log_g(sampler.process(rng)).coords;
    acc += w * w.transpose();
  }
  EXPECT_LT(max_abs(acc / n - spec.process_cov * dt), 0.01);
}

TEST(Scenario, FingerprintTracksEveryField) {
  const Scenario base = scenario_from_config(preset("exp-table3"));
  Scenario s = base;
  EXPECT_EQ(s.fingerprint(), base.fingerprint());
  s.dt = 0.021;
  EXPECT_NE(s.fingerprint(), base.fingerprint());
  s = base;
  s.noise.obs_cov *= 1.0000001;
  EXPECT_NE(s.fingerprint(), base.fingerprint());
  s = base;
  s.horizon = 51;
  EXPECT_NE(s.fingerprint(), base.fingerprint());
  s = base;
  s.omega(0) += 1e-9;
  EXPECT_NE(s.fingerprint(), base.fingerprint());
}

TEST(Scenario, ValidateRejectsMismatches) {
  Scenario s = scenario_from_config(preset("exp-table3"));
  s.prior_cov = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(s.validate(), DimensionError);
  s = scenario_from_config(preset("exp-table3"));
  s.dt = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}
