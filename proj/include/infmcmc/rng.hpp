#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace infmcmc {

/// Random source owned by exactly one chain.
///
/// Every step draws in a fixed order: the n standard normals for the
/// proposal noise (or velocity), then the leapfrog count when the
/// trajectory length is random, then the Metropolis uniform. The uniform is
/// drawn even when the proposal failed, so two samplers fed the same seed
/// stay aligned draw-for-draw.
class ChainRng {
public:
  explicit ChainRng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }

  Eigen::VectorXd normals(Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
      z[i] = normal_(engine_);
    return z;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double x = 0.0;
    while (x <= 0.0)
      x = uniform_(engine_);
    return x;
  }

  /// Uniform integer on {1, ..., upper}. Draws nothing when upper == 1.
  int uniform_count(int upper) {
    if (upper <= 1)
      return 1;
    std::uniform_int_distribution<int> dist(1, upper);
    return dist(engine_);
  }

  std::mt19937_64 &engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace infmcmc
