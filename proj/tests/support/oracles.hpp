// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the closed forms under test.
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Truncated power series in long double, terms added until they vanish.
inline Eigen::MatrixXd series_expm(const Eigen::MatrixXd& a) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatL al = a.cast<long double>();
  MatL term = MatL::Identity(a.rows(), a.cols());
  MatL sum = term;
  for (int k = 1; k < 200; ++k) {
    term = term * al / static_cast<long double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-30L) break;
  }
  return sum.cast<double>();
}

// Classical RK4 for dX/dt = f(t, X).
inline Eigen::MatrixXd rk4(const std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)>& f,
                           Eigen::MatrixXd x, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    const Eigen::MatrixXd k1 = f(t, x);
    const Eigen::MatrixXd k2 = f(t + h / 2, x + h / 2 * k1);
    const Eigen::MatrixXd k3 = f(t + h / 2, x + h / 2 * k2);
    const Eigen::MatrixXd k4 = f(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return x;
}

// Van Loan: integral_0^dt e^{A s} Q e^{A^T s} ds from one block exponential.
inline Eigen::MatrixXd van_loan(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, double dt) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  c.topLeftCorner(n, n) = -a;
  c.topRightCorner(n, n) = q;
  c.bottomRightCorner(n, n) = a.transpose();
  const Eigen::MatrixXd e = series_expm(c * dt);
  const Eigen::MatrixXd f22 = e.bottomRightCorner(n, n);
  const Eigen::MatrixXd g12 = e.topRightCorner(n, n);
  return f22.transpose() * g12;
}

// Textbook Kalman filter for x' = x + u + w, y = H x + v.
struct KalmanTrace {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::MatrixXd> K;
};

inline KalmanTrace kalman(const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0, const Eigen::VectorXd& u,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                          const std::vector<Eigen::VectorXd>& ys) {
  KalmanTrace tr;
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd P = P0;
  tr.x.push_back(x);
  tr.P.push_back(P);
  for (std::size_t n = 1; n < ys.size(); ++n) {
    x += u;
    P += Q;
    const Eigen::MatrixXd S = H * P * H.transpose() + R;
    const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
    x += K * (ys[n] - H * x);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P.rows(), P.cols());
    // Joseph form, a different algebraic route from the code under test.
    P = (I - K * H) * P * (I - K * H).transpose() + K * R * K.transpose();
    tr.x.push_back(x);
    tr.P.push_back(P);
    tr.K.push_back(K);
  }
  return tr;
}

}  // namespace oracle
