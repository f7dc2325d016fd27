#pragma once

// Core types shared by the solvers and the verification layer: the stacked
// joint point z = [x; y], the monotone operator F(z) = [grad_x f; -grad_y f],
// the problem interface and incremental ergodic averaging.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace saddle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using VectorRef = Eigen::Ref<const Vector>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when a NaN or Inf shows up anywhere in a run.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters: stepsizes outside a theorem's range, bad spectra, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterative subroutine (power iteration, fixed-point inner solve) did not
/// reach its tolerance. Carries the last estimate / residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_value)
      : Error(what), last_value_(last_value) {}
  double last_value() const { return last_value_; }

 private:
  double last_value_;
};

bool all_finite(const VectorRef& v);

/// Stacked decision vector z = [x; y]. Entries are always finite.
class JointPoint {
 public:
  JointPoint() = default;
  JointPoint(const VectorRef& x, const VectorRef& y);

  static JointPoint from_stacked(Vector z, Index dim_x);
  static JointPoint zeros(Index dim_x, Index dim_y);

  Index dim_x() const { return dim_x_; }
  Index dim_y() const { return stacked_.size() - dim_x_; }
  Index size() const { return stacked_.size(); }

  auto x() const { return stacked_.head(dim_x_); }
  auto y() const { return stacked_.tail(dim_y()); }
  const Vector& stacked() const { return stacked_; }

  bool same_shape(const JointPoint& other) const {
    return dim_x_ == other.dim_x_ && size() == other.size();
  }

  friend bool operator==(const JointPoint& a, const JointPoint& b) {
    return a.same_shape(b) && a.stacked_ == b.stacked_;
  }

 private:
  Vector stacked_;
  Index dim_x_ = 0;
};

/// F(z) = [grad_x f(x, y); -grad_y f(x, y)].
class OperatorValue {
 public:
  OperatorValue() = default;
  OperatorValue(const VectorRef& gx, const VectorRef& neg_gy);
  static OperatorValue from_stacked(Vector v, Index dim_x);

  auto gx() const { return stacked_.head(dim_x_); }
  auto neg_gy() const { return stacked_.tail(stacked_.size() - dim_x_); }
  const Vector& stacked() const { return stacked_; }
  Index dim_x() const { return dim_x_; }
  Index size() const { return stacked_.size(); }

 private:
  Vector stacked_;
  Index dim_x_ = 0;
};

/// Block Lipschitz constants of the gradients plus the Lipschitz constant of
/// the joint operator F. l_max bounds all of them (see README, "Lipschitz
/// constant"): the max of the four block constants alone does not bound F.
struct LipschitzProfile {
  double l_xx = 0.0;
  double l_xy = 0.0;
  double l_yx = 0.0;
  double l_yy = 0.0;
  double l_operator = 0.0;
  double l_max = 0.0;
  // Operator norm of F before inflation.
  double l_operator_estimate = 0.0;

  static LipschitzProfile from_blocks(double l_xx, double l_xy, double l_yx,
                                      double l_yy, double l_operator,
                                      double l_operator_estimate);
};

/// Affine form F(z) = M z + q, exposed by problems whose operator is linear.
struct AffineOperator {
  Matrix matrix;
  Vector offset;
};

/// A smooth convex-concave function f(x, y). Implementations are immutable
/// once constructed and may be shared across concurrent runs.
class SaddleProblem {
 public:
  virtual ~SaddleProblem() = default;

  virtual Index dim_x() const = 0;
  virtual Index dim_y() const = 0;

  virtual double value(const VectorRef& x, const VectorRef& y) const = 0;
  virtual Vector grad_x(const VectorRef& x, const VectorRef& y) const = 0;
  virtual Vector grad_y(const VectorRef& x, const VectorRef& y) const = 0;

  virtual std::optional<JointPoint> saddle_point() const { return std::nullopt; }
  virtual std::optional<LipschitzProfile> lipschitz() const { return std::nullopt; }
  virtual const AffineOperator* affine_operator() const { return nullptr; }

  double value(const JointPoint& z) const { return value(z.x(), z.y()); }
  void check_dims(const JointPoint& z) const;
};

OperatorValue operator_f(const SaddleProblem& problem, const JointPoint& z);

double squared_distance(const JointPoint& a, const JointPoint& b);

/// Incremental (Welford-style) running mean of joint points.
class RunningAverage {
 public:
  RunningAverage() = default;
  RunningAverage(Index dim_x, Index dim_y);

  std::int64_t count() const { return count_; }
  const JointPoint& mean() const { return mean_; }
  bool empty() const { return count_ == 0; }

 private:
  friend RunningAverage update_average(RunningAverage avg, const JointPoint& z);

  std::int64_t count_ = 0;
  JointPoint mean_;
};

/// mean <- mean + (z - mean) / count, after incrementing count.
RunningAverage update_average(RunningAverage avg, const JointPoint& z);

enum class SolverKind { gda, ogda, eg, pp };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

}  // namespace saddle
