#include "invfilter/iekf.hpp"

#include "invfilter/errors.hpp"
#include "invfilter/so3.hpp"

namespace invfilter {

Linearization linearize_two_vector(const Eigen::Vector3d& b1, const Eigen::Vector3d& b2) {
  Linearization lin;
  lin.H_xi.resize(6, 3);
  lin.H_xi << so3::hat(b1), so3::hat(b2);
  lin.H_V = Eigen::MatrixXd::Identity(6, 6);
  lin.h0.resize(6);
  lin.h0 << b1, b2;
  return lin;
}

Linearization linearize(const OutputMap& output) {
  switch (output.kind()) {
    case OutputKind::TwoVector:
      return linearize_two_vector(output.b1(), output.b2());
    case OutputKind::SingleVector:
      return Linearization{so3::hat(output.g_ref()), Eigen::MatrixXd::Identity(3, 3), output.h0()};
    case OutputKind::VelocitySE3: {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 6);
      h.rightCols<3>() = -Eigen::Matrix3d::Identity();
      return Linearization{h, Eigen::MatrixXd::Identity(3, 3), output.h0()};
    }
    case OutputKind::LinearH:
      return Linearization{output.H(), Eigen::MatrixXd::Identity(output.obs_dim(), output.obs_dim()),
                           output.h0()};
  }
  throw ConfigError("unsupported output kind");
}

Eigen::MatrixXd numerical_output_jacobian(const OutputMap& output, double eps) {
  const GroupDescriptor& d = output.descriptor();
  const int n = d.algebra_dim();
  Eigen::MatrixXd jac(output.obs_dim(), n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = eps;
    jac.col(i) = (output.evaluate(exp_g(d, e)) - output.evaluate(exp_g(d, -e))) / (2.0 * eps);
  }
  return jac;
}

Eigen::MatrixXd compute_Qw(const Eigen::MatrixXd& Q, const AlgebraVector& upsilon, double dt, QwMode mode,
                           int substeps) {
  const GroupDescriptor& d = upsilon.descriptor;
  const int n = d.algebra_dim();
  if (Q.rows() != n || Q.cols() != n) throw DimensionError("compute_Qw: Q has the wrong size");
  if (substeps < 1) throw ConfigError("compute_Qw needs substeps >= 1");
  if (upsilon.coords.isZero(0.0)) return Q * dt;
  const bool isotropic = (Q - Q(0, 0) * Eigen::MatrixXd::Identity(n, n)).isZero(0.0);
  if (mode == QwMode::Lyapunov && d.id() == GroupId::SO3 && isotropic) return Q * dt;

  const Eigen::MatrixXd a = adjoint_ad(upsilon);
  auto rhs = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    if (mode == QwMode::Lyapunov) return Q + a * m + m * a.transpose();
    return Q + a * m * a.transpose();
  };
  const double h = dt / substeps;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < substeps; ++s) {
    const Eigen::MatrixXd k1 = rhs(m);
    const Eigen::MatrixXd k2 = rhs(m + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = rhs(m + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = rhs(m + h * k3);
    m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P_pred, const Linearization& lin, const Eigen::MatrixXd& Qv) {
  const Eigen::MatrixXd& H = lin.H_xi;
  if (H.cols() != P_pred.rows() || Qv.rows() != lin.H_V.cols()) {
    throw DimensionError("kalman_gain: inconsistent dimensions");
  }
  Eigen::MatrixXd S = lin.H_V * Qv * lin.H_V.transpose() + H * P_pred * H.transpose();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-12)) {
    throw NumericalError("innovation covariance S is singular");
  }
  // S L^T = H P (S and P symmetric).
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  return llt.solve(H * P_pred).transpose();
}

IekfState iekf_predict(const IekfState& state, const GroupElement& upsilon, const GroupElement& omega,
                       const Eigen::MatrixXd& Qw) {
  const Eigen::MatrixXd ad = adjoint_Ad(upsilon);
  Eigen::MatrixXd P = ad * state.P * ad.transpose() + Qw;
  P = 0.5 * (P + P.transpose());
  return IekfState{upsilon * state.estimate * omega, P, state.step + 1};
}

IekfState iekf_update(const IekfState& state, const Eigen::VectorXd& y, const Linearization& lin,
                      const Eigen::MatrixXd& Qv, const OutputMap& output, Eigen::MatrixXd* gain) {
  const Eigen::MatrixXd L = kalman_gain(state.P, lin, Qv);
  const Eigen::Index d = state.P.rows();
  Eigen::MatrixXd P = (Eigen::MatrixXd::Identity(d, d) - L * lin.H_xi) * state.P;
  P = 0.5 * (P + P.transpose());
  const Eigen::VectorXd innovation = output.act(state.estimate, y) - lin.h0;
  const GroupElement correction = exp_g(state.estimate.descriptor(), L * innovation);
  if (gain) *gain = L;
  return IekfState{correction * state.estimate, P, state.step};
}

IekfRun run_iekf(const DiscreteModel& model, const Trajectory& trajectory, const IekfState& initial,
                 const Eigen::MatrixXd& Qw, const Eigen::MatrixXd& Qv) {
  const Linearization lin = linearize(model.output);
  IekfRun run;
  run.estimates.push_back(initial.estimate);
  run.covariances.push_back(initial.P);
  IekfState state = initial;
  for (int n = 0; n < trajectory.steps(); ++n) {
    state = iekf_predict(state, model.left(n), model.right(n), Qw);
    Eigen::MatrixXd L;
    state = iekf_update(state, trajectory.observations[static_cast<std::size_t>(n) + 1], lin, Qv, model.output, &L);
    run.estimates.push_back(state.estimate);
    run.covariances.push_back(state.P);
    run.gains.push_back(std::move(L));
  }
  return run;
}

IekfRun iekf_riccati(const GroupElement& upsilon, const Eigen::MatrixXd& P0, const Eigen::MatrixXd& Qw,
                     const Linearization& lin, const Eigen::MatrixXd& Qv, int steps) {
  const Eigen::MatrixXd ad = adjoint_Ad(upsilon);
  const Eigen::Index d = P0.rows();
  IekfRun run;
  run.covariances.push_back(P0);
  Eigen::MatrixXd P = P0;
  for (int n = 0; n < steps; ++n) {
    Eigen::MatrixXd pred = ad * P * ad.transpose() + Qw;
    pred = 0.5 * (pred + pred.transpose());
    Eigen::MatrixXd L = kalman_gain(pred, lin, Qv);
    P = (Eigen::MatrixXd::Identity(d, d) - L * lin.H_xi) * pred;
    P = 0.5 * (P + P.transpose());
    run.covariances.push_back(P);
    run.gains.push_back(std::move(L));
  }
  return run;
}

std::optional<Eigen::MatrixXd> asymptotic_gain(const std::vector<Eigen::MatrixXd>& gains, double tol, int window) {
  if (window < 1) throw ConfigError("asymptotic_gain needs window >= 1");
  if (gains.size() < static_cast<std::size_t>(window) + 1) return std::nullopt;
  for (std::size_t i = gains.size() - static_cast<std::size_t>(window); i < gains.size(); ++i) {
    if (!((gains[i] - gains[i - 1]).cwiseAbs().maxCoeff() < tol)) return std::nullopt;
  }
  return gains.back();
}

}  // namespace invfilter
