#include "saddle/solvers.hpp"

#include <cmath>
#include <string>

#include "saddle/problems.hpp"

namespace saddle {

namespace {

// Relative slack when comparing a stepsize against 1/(2L). L carries the
// power-iteration inflation, so eta = 1/(2 L_exact) must still pass.
constexpr double kRangeSlack = 2.0 * (kLipschitzInflation - 1.0);

void check_eta_positive(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("stepsize eta must be positive and finite");
  }
}

std::optional<double> lipschitz_of(const SaddleProblem& problem) {
  if (auto profile = problem.lipschitz()) return profile->l_max;
  return std::nullopt;
}

void check_ogda_range(double eta, double l) {
  if (eta > (1.0 / (2.0 * l)) * (1.0 + kRangeSlack)) {
    throw ConfigError("OGDA stepsize eta=" + std::to_string(eta) + " exceeds 1/(2L)=" +
                      std::to_string(1.0 / (2.0 * l)));
  }
}

void check_eg_range(double eta, double l) {
  if (eta * l >= 1.0) {
    throw ConfigError("EG stepsize eta=" + std::to_string(eta) + " must be below 1/L=" +
                      std::to_string(1.0 / l));
  }
}

/// (I + eta M)^{-1} applied to z - eta q, for affine F(z) = M z + q.
class AffineResolvent {
 public:
  AffineResolvent(const AffineOperator& op, double eta)
      : eta_(eta), offset_(op.offset) {
    const Index n = op.matrix.rows();
    Matrix system = Matrix::Identity(n, n) + eta * op.matrix;
    lu_.compute(system);
    if (!(lu_.rcond() > 1e-14)) throw Error("proximal system I + eta M is singular");
  }

  Vector apply(const Vector& z) const { return lu_.solve(z - eta_ * offset_); }

 private:
  double eta_;
  Vector offset_;
  Eigen::PartialPivLU<Matrix> lu_;
};

SolverState finish_pp_step(const SaddleProblem& problem, const SolverState& state,
                           Vector next, double eta, double tol) {
  JointPoint z_next = JointPoint::from_stacked(std::move(next), state.z.dim_x());
  OperatorValue f_next = operator_f(problem, z_next);
  const double residual =
      (z_next.stacked() - state.z.stacked() + eta * f_next.stacked()).norm();
  if (residual > 10.0 * tol * (1.0 + state.z.stacked().norm())) {
    throw ConvergenceError("proximal step residual " + std::to_string(residual) +
                               " exceeds tolerance",
                           residual);
  }
  SolverState out;
  out.z = std::move(z_next);
  out.f_current = std::move(f_next);
  out.inner_residual = residual;
  out.k = state.k + 1;
  return out;
}

SolverState pp_step_with(const SaddleProblem& problem, const SolverState& state, double eta,
                         const InnerSolver& inner, const AffineResolvent* resolvent) {
  check_eta_positive(eta);
  problem.check_dims(state.z);
  if (inner.mode == InnerSolver::Mode::affine_exact) {
    if (resolvent != nullptr) {
      return finish_pp_step(problem, state, resolvent->apply(state.z.stacked()), eta, inner.tol);
    }
    const AffineOperator* op = problem.affine_operator();
    if (op == nullptr) throw ConfigError("affine_exact inner solver requires an affine operator");
    AffineResolvent local(*op, eta);
    return finish_pp_step(problem, state, local.apply(state.z.stacked()), eta, inner.tol);
  }

  if (auto l = lipschitz_of(problem); l && eta * *l >= 1.0) {
    throw ConfigError("fixed_point inner solver requires eta * L < 1");
  }
  Vector w = state.z.stacked();
  double change = 0.0;
  for (int it = 0; it < inner.max_iter; ++it) {
    const JointPoint wp = JointPoint::from_stacked(w, state.z.dim_x());
    Vector next = state.z.stacked() - eta * operator_f(problem, wp).stacked();
    change = (next - w).norm();
    w = std::move(next);
    if (change <= inner.tol) {
      return finish_pp_step(problem, state, std::move(w), eta, inner.tol);
    }
  }
  throw ConvergenceError("fixed-point inner solve did not converge in " +
                             std::to_string(inner.max_iter) + " iterations (last change " +
                             std::to_string(change) + ")",
                         change);
}

}  // namespace

ResolvedStepsize resolve_stepsize(const StepsizeRule& rule, SolverKind solver,
                                  const LipschitzProfile& profile, bool enforce) {
  using Scheme = StepsizeRule::Scheme;
  const double l = profile.l_max;
  ResolvedStepsize out;
  out.lipschitz = l;

  if (rule.scheme == Scheme::eg_sigma && !(rule.sigma > 0.0 && rule.sigma < 1.0) && enforce) {
    throw ConfigError("sigma must lie in (0,1)");
  }
  const bool needs_l = rule.scheme == Scheme::ogda_default || rule.scheme == Scheme::eg_sigma ||
                       (enforce && (solver == SolverKind::ogda || solver == SolverKind::eg));
  if (needs_l && !(l > 0.0)) throw ConfigError("stepsize rule needs a positive Lipschitz constant");

  switch (solver) {
    case SolverKind::gda:
      if (rule.scheme != Scheme::explicit_eta) throw ConfigError("GDA takes an explicit stepsize");
      out.eta = rule.eta;
      break;
    case SolverKind::ogda:
      if (rule.scheme == Scheme::ogda_default) {
        out.eta = 1.0 / (2.0 * l);
      } else if (rule.scheme == Scheme::explicit_eta) {
        out.eta = rule.eta;
        check_eta_positive(out.eta);
        if (enforce) check_ogda_range(out.eta, l);
      } else {
        throw ConfigError("OGDA takes the ogda_default or explicit stepsize rule");
      }
      break;
    case SolverKind::eg:
      if (rule.scheme == Scheme::eg_sigma) {
        out.eta = rule.sigma / l;
        out.sigma = rule.sigma;
      } else if (rule.scheme == Scheme::explicit_eta) {
        out.eta = rule.eta;
        check_eta_positive(out.eta);
        if (enforce) check_eg_range(out.eta, l);
        out.sigma = out.eta * l;
      } else {
        throw ConfigError("EG takes the eg_sigma or explicit stepsize rule");
      }
      break;
    case SolverKind::pp:
      if (rule.scheme != Scheme::pp_fixed && rule.scheme != Scheme::explicit_eta) {
        throw ConfigError("PP takes the pp_fixed or explicit stepsize rule");
      }
      out.eta = rule.eta;
      break;
  }
  check_eta_positive(out.eta);
  return out;
}

SolverState SolverState::initial(JointPoint z0) {
  SolverState s;
  s.z = std::move(z0);
  return s;
}

SolverState gda_step(const SaddleProblem& problem, const SolverState& state, double eta) {
  check_eta_positive(eta);
  OperatorValue f = operator_f(problem, state.z);
  SolverState out;
  out.z = JointPoint::from_stacked(state.z.stacked() - eta * f.stacked(), state.z.dim_x());
  out.z_prev = state.z;
  out.f_current = std::move(f);
  out.k = state.k + 1;
  return out;
}

SolverState ogda_step(const SaddleProblem& problem, const SolverState& state, double eta,
                      bool enforce_range) {
  check_eta_positive(eta);
  if (enforce_range) {
    if (auto l = lipschitz_of(problem)) check_ogda_range(eta, *l);
  }
  OperatorValue f = operator_f(problem, state.z);
  const OperatorValue& f_prev = state.f_prev ? *state.f_prev : f;  // z_{-1} = z_0
  Vector next = state.z.stacked() - (2.0 * eta) * f.stacked() + eta * f_prev.stacked();

  SolverState out;
  out.z = JointPoint::from_stacked(std::move(next), state.z.dim_x());
  out.z_prev = state.z;
  out.f_prev = f;
  out.f_current = std::move(f);
  out.k = state.k + 1;
  return out;
}

SolverState eg_step(const SaddleProblem& problem, const SolverState& state, double eta,
                    bool enforce_range) {
  check_eta_positive(eta);
  if (enforce_range) {
    if (auto l = lipschitz_of(problem)) check_eg_range(eta, *l);
  }
  OperatorValue f = operator_f(problem, state.z);
  JointPoint mid =
      JointPoint::from_stacked(state.z.stacked() - eta * f.stacked(), state.z.dim_x());
  OperatorValue f_mid = operator_f(problem, mid);

  SolverState out;
  out.z = JointPoint::from_stacked(state.z.stacked() - eta * f_mid.stacked(), state.z.dim_x());
  out.z_prev = state.z;
  out.f_current = std::move(f);
  out.midpoint = std::move(mid);
  out.f_mid = std::move(f_mid);
  out.k = state.k + 1;
  return out;
}

SolverState pp_step(const SaddleProblem& problem, const SolverState& state, double eta,
                    const InnerSolver& inner) {
  return pp_step_with(problem, state, eta, inner, nullptr);
}

Trajectory run(const SaddleProblem& problem, SolverKind solver, const JointPoint& z0,
               std::int64_t iterations, const StepsizeRule& rule, const RunOptions& options) {
  if (iterations < 1) throw ConfigError("iteration count N must be at least 1");
  problem.check_dims(z0);

  LipschitzProfile profile;
  if (auto p = problem.lipschitz()) profile = *p;
  const ResolvedStepsize step =
      resolve_stepsize(rule, solver, profile, options.enforce_preconditions);

  std::optional<AffineResolvent> resolvent;
  if (solver == SolverKind::pp && options.inner.mode == InnerSolver::Mode::affine_exact) {
    const AffineOperator* op = problem.affine_operator();
    if (op == nullptr) throw ConfigError("affine_exact inner solver requires an affine operator");
    resolvent.emplace(*op, step.eta);
  }

  Trajectory traj;
  traj.solver = solver;
  traj.initial = z0;
  traj.eta = step.eta;
  traj.sigma = step.sigma;
  traj.lipschitz = step.lipschitz;
  traj.ergodic = RunningAverage(z0.dim_x(), z0.dim_y());
  traj.records.reserve(static_cast<std::size_t>(iterations));

  const bool enforce = options.enforce_preconditions;
  SolverState state = SolverState::initial(z0);
  for (std::int64_t k = 0; k < iterations; ++k) {
    try {
      switch (solver) {
        case SolverKind::gda: state = gda_step(problem, state, step.eta); break;
        case SolverKind::ogda: state = ogda_step(problem, state, step.eta, enforce); break;
        case SolverKind::eg: state = eg_step(problem, state, step.eta, enforce); break;
        case SolverKind::pp:
          state = pp_step_with(problem, state, step.eta, options.inner,
                               resolvent ? &*resolvent : nullptr);
          break;
      }
      StepRecord rec;
      rec.k = k;
      rec.iterate = state.z;
      rec.midpoint = state.midpoint;
      rec.operator_value = *state.f_current;
      rec.midpoint_operator = state.f_mid;
      rec.inner_residual = state.inner_residual;
      traj.ergodic = update_average(std::move(traj.ergodic),
                                    solver == SolverKind::eg ? *state.midpoint : state.z);
      rec.ergodic = traj.ergodic.mean();
      rec.f_at_ergodic = problem.value(rec.ergodic);
      if (!std::isfinite(rec.f_at_ergodic)) throw NumericalError("non-finite f at ergodic point");
      traj.records.push_back(std::move(rec));
    } catch (const Error& e) {
      throw RunError(to_string(solver) + " step " + std::to_string(k) + ": " + e.what(),
                     std::move(traj));
    }
  }
  return traj;
}

Vector ogda_error_vector(const OperatorValue& f_prev, const OperatorValue& f_curr,
                         const OperatorValue& f_next, double eta) {
  if (f_prev.size() != f_curr.size() || f_curr.size() != f_next.size()) {
    throw DimensionError("ogda_error_vector: dimension mismatch");
  }
  return eta * ((f_next.stacked() - f_curr.stacked()) - (f_curr.stacked() - f_prev.stacked()));
}

Vector eg_error_vector(const OperatorValue& f_mid_prev, const OperatorValue& f_mid_curr,
                       const OperatorValue& f_prev, const OperatorValue& f_curr, double eta) {
  const Index n = f_curr.size();
  if (f_mid_prev.size() != n || f_mid_curr.size() != n || f_prev.size() != n) {
    throw DimensionError("eg_error_vector: dimension mismatch");
  }
  return eta * ((f_mid_curr.stacked() - f_mid_prev.stacked()) -
                (f_curr.stacked() - f_prev.stacked()));
}

}  // namespace saddle
