#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "saddle/core.hpp"

namespace saddle {

struct PowerIterationOptions {
  int max_iterations = 10000;
  double relative_tolerance = 1e-12;
};

struct SpectralEstimate {
  double value = 0.0;  // uninflated estimate of the largest singular value
  int iterations = 0;
};

/// Largest singular value of `a` by power iteration on the Gram matrix a^T a.
/// Throws ConvergenceError (carrying the last estimate) if the relative change
/// of the Rayleigh quotient does not drop below the tolerance in time.
SpectralEstimate spectral_norm(const Matrix& a, const PowerIterationOptions& options = {});

/// Factor applied to power-iteration estimates so they serve as upper bounds.
inline constexpr double kLipschitzInflation = 1.0 + 1e-9;

enum class ProblemKind { bilinear, quadratic };

std::string to_string(ProblemKind kind);

/// f(x, y) = 1/2 x'Px + x'Ay - 1/2 y'Qy + b'x + c'y with P, Q symmetric PSD.
class QuadraticSaddleProblem final : public SaddleProblem {
 public:
  /// Validates symmetry and semidefiniteness, solves for the saddle point and
  /// estimates the Lipschitz profile. Throws ConfigError on invalid input and
  /// Error("no finite saddle point") when the stationarity system has no
  /// solution.
  QuadraticSaddleProblem(Matrix p, Matrix q, Matrix a, Vector b, Vector c,
                         std::optional<std::uint64_t> seed = std::nullopt);

  static QuadraticSaddleProblem bilinear(Matrix a);

  Index dim_x() const override { return a_.rows(); }
  Index dim_y() const override { return a_.cols(); }

  double value(const VectorRef& x, const VectorRef& y) const override;
  Vector grad_x(const VectorRef& x, const VectorRef& y) const override;
  Vector grad_y(const VectorRef& x, const VectorRef& y) const override;

  std::optional<JointPoint> saddle_point() const override { return saddle_; }
  std::optional<LipschitzProfile> lipschitz() const override { return profile_; }
  const AffineOperator* affine_operator() const override { return &affine_; }

  using SaddleProblem::value;

  const Matrix& p() const { return p_; }
  const Matrix& q() const { return q_; }
  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  const Vector& c() const { return c_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  ProblemKind kind() const;

  double saddle_value() const { return value(saddle_); }

 private:
  Matrix p_, q_, a_;
  Vector b_, c_;
  std::optional<std::uint64_t> seed_;
  AffineOperator affine_;
  JointPoint saddle_;
  LipschitzProfile profile_;
};

/// Solves P x + A y + b = 0, A'x - Q y + c = 0 by a rank-revealing dense
/// factorization (minimum-norm solution when the saddle set is not a point).
JointPoint solve_saddle_point(const Matrix& p, const Matrix& q, const Matrix& a,
                              const Vector& b, const Vector& c);

LipschitzProfile lipschitz_profile(const Matrix& p, const Matrix& q, const Matrix& a);

struct SpectrumBounds {
  double lo = 1.0;
  double hi = 1.0;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  Index dim_x = 1;
  Index dim_y = 1;
  std::uint64_t seed = 0;
  SpectrumBounds p_spectrum{0.5, 1.0};
  SpectrumBounds q_spectrum{0.5, 1.0};
  SpectrumBounds a_spectrum{0.5, 1.0};  // singular values of the coupling
  double linear_scale = 1.0;            // std-dev of b and c entries
};

/// Deterministic problem from a spec. Same spec gives bit-identical matrices.
QuadraticSaddleProblem generate(const ProblemSpec& spec);

std::string problem_to_json(const QuadraticSaddleProblem& problem);
QuadraticSaddleProblem problem_from_json(const std::string& text);

}  // namespace saddle
