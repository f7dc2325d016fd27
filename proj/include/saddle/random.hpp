#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "saddle/core.hpp"

namespace saddle {

/// Seeded generator with a portable sequence. std::mt19937_64 output is fixed
/// by the standard; the distributions below are written out so that draws do
/// not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    }
    return m;
  }

  /// Uniform point in the Euclidean ball of the given radius.
  Vector in_ball(Index n, double radius) {
    Vector d = normal_vector(n);
    const double norm = d.norm();
    if (norm == 0.0) return Vector::Zero(n);
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return d * (r / norm);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace saddle
