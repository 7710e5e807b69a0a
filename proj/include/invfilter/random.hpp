#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace invfilter {

/// One reproducible random stream. Each Monte-Carlo trajectory, chain or
/// particle owns its own; streams are derived from (master seed, index).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t master_seed, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  Eigen::VectorXd gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gaussian();
    return v;
  }

  template <int N>
  Eigen::Matrix<double, N, 1> gaussian_fixed() {
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = gaussian();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Haar-uniform rotation (normalized Gaussian quaternion, converted to a matrix).
inline Eigen::Matrix3d random_rotation(RandomStream& rng) {
  Eigen::Vector4d q = rng.gaussian_fixed<4>();
  q.normalize();
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace invfilter
