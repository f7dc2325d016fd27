#pragma once

// Iteration schemes for min_x max_y f(x, y), all written in operator form
// z <- z - eta * (...) with F from core.hpp:
//
//   GDA   z_{k+1}   = z_k - eta F(z_k)                       (negative control)
//   OGDA  z_{k+1}   = z_k - 2 eta F(z_k) + eta F(z_{k-1}),   z_{-1} = z_0
//   EG    z_{k+1/2} = z_k - eta F(z_k),  z_{k+1} = z_k - eta F(z_{k+1/2})
//   PP    z_{k+1}   = z_k - eta F(z_{k+1})                   (implicit)

#include <cstdint>
#include <optional>
#include <vector>

#include "saddle/core.hpp"

namespace saddle {

struct StepsizeRule {
  enum class Scheme { ogda_default, eg_sigma, pp_fixed, explicit_eta };

  Scheme scheme = Scheme::ogda_default;
  double sigma = 0.5;
  double eta = 0.0;

  static StepsizeRule ogda_default() { return {Scheme::ogda_default, 0.5, 0.0}; }
  static StepsizeRule eg_sigma(double sigma = 0.5) { return {Scheme::eg_sigma, sigma, 0.0}; }
  static StepsizeRule pp_fixed(double eta) { return {Scheme::pp_fixed, 0.5, eta}; }
  static StepsizeRule explicit_eta(double eta) { return {Scheme::explicit_eta, 0.5, eta}; }
};

struct ResolvedStepsize {
  double eta = 0.0;
  std::optional<double> sigma;  // eta * L for EG
  double lipschitz = 0.0;       // L the rule was resolved against
};

/// Applies a rule to a solver. With `enforce` the theorem preconditions are
/// checked: OGDA eta <= 1/(2L), EG eta = sigma/L with sigma in (0,1).
ResolvedStepsize resolve_stepsize(const StepsizeRule& rule, SolverKind solver,
                                  const LipschitzProfile& profile, bool enforce = true);

struct InnerSolver {
  enum class Mode { affine_exact, fixed_point };

  Mode mode = Mode::affine_exact;
  double tol = 1e-12;
  int max_iter = 200;
};

struct SolverState {
  JointPoint z;
  std::optional<JointPoint> z_prev;        // z_{k-1} (OGDA)
  std::optional<OperatorValue> f_prev;     // F(z_{k-1}) (OGDA)
  std::optional<OperatorValue> f_current;  // F evaluated at z_k during the last step
  std::optional<JointPoint> midpoint;      // z_{k+1/2} (EG)
  std::optional<OperatorValue> f_mid;      // F(z_{k+1/2}) (EG)
  std::optional<double> inner_residual;    // ||z_{k+1} - z_k + eta F(z_{k+1})|| (PP)
  std::int64_t k = 0;

  static SolverState initial(JointPoint z0);
};

SolverState gda_step(const SaddleProblem& problem, const SolverState& state, double eta);

/// One operator evaluation per step: F(z_k) is cached in the returned state.
SolverState ogda_step(const SaddleProblem& problem, const SolverState& state, double eta,
                      bool enforce_range = true);

SolverState eg_step(const SaddleProblem& problem, const SolverState& state, double eta,
                    bool enforce_range = true);

SolverState pp_step(const SaddleProblem& problem, const SolverState& state, double eta,
                    const InnerSolver& inner = {});

/// Record of step k, i.e. the move z_k -> z_{k+1}.
struct StepRecord {
  std::int64_t k = 0;
  JointPoint iterate;                       // z_{k+1}
  std::optional<JointPoint> midpoint;       // z_{k+1/2} (EG)
  OperatorValue operator_value;             // F(z_k); F(z_{k+1}) for PP
  std::optional<OperatorValue> midpoint_operator;
  std::optional<double> inner_residual;
  JointPoint ergodic;                       // running average after this step
  double f_at_ergodic = 0.0;
};

struct Trajectory {
  SolverKind solver = SolverKind::ogda;
  JointPoint initial;
  double eta = 0.0;
  std::optional<double> sigma;
  double lipschitz = 0.0;
  std::vector<StepRecord> records;
  RunningAverage ergodic;

  std::int64_t size() const { return static_cast<std::int64_t>(records.size()); }
  /// z_k for k in [0, size()].
  const JointPoint& iterate(std::int64_t k) const {
    return k == 0 ? initial : records[static_cast<std::size_t>(k - 1)].iterate;
  }
};

/// A step failed mid-run; the trajectory up to the failure is attached.
class RunError : public Error {
 public:
  RunError(const std::string& what, Trajectory partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

struct RunOptions {
  InnerSolver inner;
  bool enforce_preconditions = true;
};

/// Runs `iterations` steps. The ergodic average is over z_1..z_N for GDA,
/// OGDA and PP, and over the midpoints z_{1/2}..z_{N-1/2} for EG.
Trajectory run(const SaddleProblem& problem, SolverKind solver, const JointPoint& z0,
               std::int64_t iterations, const StepsizeRule& rule, const RunOptions& options = {});

/// eps_k = eta[(F(z_{k+1}) - F(z_k)) - (F(z_k) - F(z_{k-1}))], so that
/// z_{k+1} = z_k - eta F(z_{k+1}) + eps_k.
Vector ogda_error_vector(const OperatorValue& f_prev, const OperatorValue& f_curr,
                         const OperatorValue& f_next, double eta);

/// eps_k = eta[(F(z_{k+1/2}) - F(z_{k-1/2})) - (F(z_k) - F(z_{k-1}))], so that
/// z_{k+1/2} = z_{k-1/2} - eta F(z_{k+1/2}) + eps_k.
Vector eg_error_vector(const OperatorValue& f_mid_prev, const OperatorValue& f_mid_curr,
                       const OperatorValue& f_prev, const OperatorValue& f_curr, double eta);

}  // namespace saddle
