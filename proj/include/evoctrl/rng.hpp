#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace evoctrl {

/// Seedable generator used by every sampling routine in the library.
///
/// Draws are derived from the raw mt19937_64 stream instead of the standard
/// distributions, whose output is implementation-defined; runs with the same
/// seed produce identical samples on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd v = normal_vector(n);
    const double norm = v.norm();
    if (norm < 1e-300) {
      v.setZero();
      v[0] = 1.0;
      return v;
    }
    return v / norm;
  }

  /// Uniform sample from the closed ball of the given radius.
  Eigen::VectorXd in_ball(int n, double radius) {
    Eigen::VectorXd dir = unit_vector(n);
    const double r = radius * std::pow(uniform01(), 1.0 / static_cast<double>(n));
    return r * dir;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace evoctrl
