#include "saddle/core.hpp"

#include <algorithm>
#include <cmath>

namespace saddle {

bool all_finite(const VectorRef& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

JointPoint::JointPoint(const VectorRef& x, const VectorRef& y)
    : stacked_(x.size() + y.size()), dim_x_(x.size()) {
  stacked_.head(x.size()) = x;
  stacked_.tail(y.size()) = y;
  if (!all_finite(stacked_)) throw NumericalError("joint point has non-finite entries");
}

JointPoint JointPoint::from_stacked(Vector z, Index dim_x) {
  if (dim_x < 0 || dim_x > z.size()) throw DimensionError("x block larger than stacked vector");
  if (!all_finite(z)) throw NumericalError("joint point has non-finite entries");
  JointPoint p;
  p.stacked_ = std::move(z);
  p.dim_x_ = dim_x;
  return p;
}

JointPoint JointPoint::zeros(Index dim_x, Index dim_y) {
  return from_stacked(Vector::Zero(dim_x + dim_y), dim_x);
}

OperatorValue::OperatorValue(const VectorRef& gx, const VectorRef& neg_gy)
    : stacked_(gx.size() + neg_gy.size()), dim_x_(gx.size()) {
  stacked_.head(gx.size()) = gx;
  stacked_.tail(neg_gy.size()) = neg_gy;
  if (!all_finite(stacked_)) throw NumericalError("operator value has non-finite entries");
}

OperatorValue OperatorValue::from_stacked(Vector v, Index dim_x) {
  if (!all_finite(v)) throw NumericalError("operator value has non-finite entries");
  OperatorValue out;
  out.stacked_ = std::move(v);
  out.dim_x_ = dim_x;
  return out;
}

LipschitzProfile LipschitzProfile::from_blocks(double l_xx, double l_xy, double l_yx,
                                               double l_yy, double l_operator,
                                               double l_operator_estimate) {
  LipschitzProfile p;
  p.l_xx = l_xx;
  p.l_xy = l_xy;
  p.l_yx = l_yx;
  p.l_yy = l_yy;
  p.l_operator = l_operator;
  p.l_operator_estimate = l_operator_estimate;
  p.l_max = std::max({l_xx, l_xy, l_yx, l_yy, l_operator});
  return p;
}

void SaddleProblem::check_dims(const JointPoint& z) const {
  if (z.dim_x() != dim_x() || z.dim_y() != dim_y()) {
    throw DimensionError("point has dims (" + std::to_string(z.dim_x()) + ", " +
                         std::to_string(z.dim_y()) + "), problem expects (" +
                         std::to_string(dim_x()) + ", " + std::to_string(dim_y()) + ")");
  }
}

OperatorValue operator_f(const SaddleProblem& problem, const JointPoint& z) {
  problem.check_dims(z);
  Vector gx = problem.grad_x(z.x(), z.y());
  Vector gy = problem.grad_y(z.x(), z.y());
  if (!all_finite(gx) || !all_finite(gy)) throw NumericalError("non-finite gradient");
  Vector stacked(gx.size() + gy.size());
  stacked.head(gx.size()) = gx;
  stacked.tail(gy.size()) = -gy;
  return OperatorValue::from_stacked(std::move(stacked), gx.size());
}

double squared_distance(const JointPoint& a, const JointPoint& b) {
  if (!a.same_shape(b)) throw DimensionError("squared_distance: dimension mismatch");
  return (a.stacked() - b.stacked()).squaredNorm();
}

RunningAverage::RunningAverage(Index dim_x, Index dim_y)
    : mean_(JointPoint::zeros(dim_x, dim_y)) {}

RunningAverage update_average(RunningAverage avg, const JointPoint& z) {
  if (avg.count_ == 0 && avg.mean_.size() == 0) {
    avg.mean_ = JointPoint::zeros(z.dim_x(), z.dim_y());
  }
  if (!avg.mean_.same_shape(z)) throw DimensionError("update_average: dimension mismatch");
  ++avg.count_;
  Vector mean = avg.mean_.stacked();
  mean += (z.stacked() - mean) / static_cast<double>(avg.count_);
  avg.mean_ = JointPoint::from_stacked(std::move(mean), z.dim_x());
  return avg;
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::gda: return "gda";
    case SolverKind::ogda: return "ogda";
    case SolverKind::eg: return "eg";
    case SolverKind::pp: return "pp";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "gda") return SolverKind::gda;
  if (name == "ogda") return SolverKind::ogda;
  if (name == "eg") return SolverKind::eg;
  if (name == "pp") return SolverKind::pp;
  throw ConfigError("unknown solver '" + name + "' (expected gda, ogda, eg or pp)");
}

}  // namespace saddle
