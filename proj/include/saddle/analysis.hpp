#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saddle/core.hpp"
#include "saddle/solvers.hpp"

namespace saddle {

enum class Theorem { pp, ogda, eg };

std::string to_string(Theorem theorem);
Theorem theorem_from_string(const std::string& name);
std::optional<Theorem> theorem_for(SolverKind solver);

/// Relative slack used by every bound and inequality check.
inline constexpr double kBoundSlack = 1e-9;

struct BoundConstants {
  double d = 0.0;      // ||x_0 - x*||^2 + ||y_0 - y*||^2
  double l = 0.0;      // Lipschitz constant
  double eta = 0.0;
  double sigma = 0.0;  // EG only
  std::int64_t n = 1;
};

/// PP: D / (eta N).  OGDA: D (8L + 1/(2 eta)) / N.
/// EG: D L (9 + 17 / (2 (1 - sigma^2))) / N.
double bound_value(Theorem theorem, const BoundConstants& c);

/// Euclidean ball around z*. The joint set is used for membership checks; its
/// x and y projections are balls of the same radius.
struct CompactBall {
  JointPoint center;
  double squared_radius = 0.0;

  bool contains(const JointPoint& z, double slack = kBoundSlack) const;

  /// 2 ||z_0 - z*||^2, the set OGDA iterates stay in.
  static CompactBall ogda(const JointPoint& z0, const JointPoint& z_star);
  /// (2 + 2/(1 - eta^2 L^2)) ||z_0 - z*||^2, the set EG iterates and midpoints stay in.
  static CompactBall eg(const JointPoint& z0, const JointPoint& z_star, double eta, double l);
  /// ||z_0 - z*||^2: proximal point iterates are nonexpansive.
  static CompactBall pp(const JointPoint& z0, const JointPoint& z_star);
};

struct BoundCertificate {
  Theorem theorem = Theorem::ogda;
  double d = 0.0;
  double l = 0.0;
  double eta = 0.0;
  std::optional<double> sigma;
  std::int64_t n = 1;
  double bound = 0.0;
  double gap = 0.0;
  bool pass = false;
  double margin = 0.0;  // bound - gap
};

struct BallCertificate {
  std::int64_t k = 0;     // iterate index; for midpoints the step index of z_{k+1/2}
  bool midpoint = false;
  double squared_distance = 0.0;
  double squared_radius = 0.0;
  bool pass = false;
};

struct CertificateReport {
  std::vector<BoundCertificate> bounds;
  std::vector<BallCertificate> balls;

  bool all_pass() const;
  std::int64_t failures() const;
};

/// |f(x_hat, y_hat) - f(x*, y*)|.
double corollary_gap(const SaddleProblem& problem, const JointPoint& ergodic);

/// 1, 2, 4, ... up to and including `total`.
std::vector<std::int64_t> log2_schedule(std::int64_t total);

/// Bound certificates on the prefix schedule plus ball membership of every
/// iterate (and midpoint for EG). Throws ConfigError for GDA.
CertificateReport certify(const Trajectory& trajectory, const SaddleProblem& problem,
                          std::span<const std::int64_t> schedule = {});

struct GapMethod {
  enum class Kind { analytic_quadratic, grid };
  Kind kind = Kind::analytic_quadratic;
  int points_per_dim = 2001;
};

/// max over ||u|| <= radius of -(1/2) u'Hu + d'u for symmetric PSD H, solved
/// via eigen-decomposition and a 1-D search on the boundary multiplier.
/// Returns the maximizer u.
Vector maximize_concave_quadratic_on_ball(const Matrix& h, const Vector& d, double radius);

/// [max_{y in ball_y} f(x_hat, y) - f*] + [f* - min_{x in ball_x} f(x, y_hat)],
/// with ball_x and ball_y the coordinate projections of the joint ball.
double restricted_gap(const SaddleProblem& problem, const VectorRef& x_hat, const VectorRef& y_hat,
                      const CompactBall& ball, const GapMethod& method = {});

struct Lemma2Result {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// f(x_hat_N, y) - f(x, y_hat_N) <= (1/N) sum_k F(z_k)'(z_k - z) at probe z.
Lemma2Result lemma2_check(const SaddleProblem& problem, std::span<const JointPoint> iterates,
                          const JointPoint& probe);

struct RateFit {
  std::optional<double> slope;
  bool below_floor = false;
};

/// Least-squares slope of log(gap) against log(N). Needs at least five points;
/// any gap <= 1e-14 yields below_floor instead of a slope.
RateFit rate_fit(std::span<const double> ns, std::span<const double> gaps);

// Inequality checks along trajectories.

struct InequalityCheck {
  std::string name;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double worst_excess = 0.0;  // max(lhs - rhs) over all checks

  bool pass() const { return checked > 0 && violations == 0; }
  void record(double lhs, double rhs);
};

/// ||z_k - z*||^2 <= 2 ||z_0 - z*||^2 + 1e-9 for every iterate.
InequalityCheck check_ogda_boundedness(const Trajectory& traj, const SaddleProblem& problem);

struct EgEnergyReport {
  InequalityCheck per_step;     // ||z_{k+1}-z*||^2 + (1-s^2)||z_{k+1/2}-z_k||^2 <= ||z_k-z*||^2
  InequalityCheck monotone;     // ||z_{k+1}-z*|| <= ||z_k-z*||
  InequalityCheck summability;  // sum ||z_{k+1/2}-z_k||^2 <= ||z_0-z*||^2 / (1-s^2)
  InequalityCheck midpoint_ball;
  double midstep_sum = 0.0;
};

/// s = eta * traj.lipschitz.
EgEnergyReport check_eg_energy(const Trajectory& traj, const SaddleProblem& problem);

/// max_k | ||z_{k+1}-z*||^2 + (1-eta^2 l^2)||z_{k+1/2}-z_k||^2 - ||z_k-z*||^2 |,
/// zero for bilinear problems whose coupling has equal singular values when l is
/// the exact operator norm.
double eg_energy_equality_residual(const Trajectory& traj, const SaddleProblem& problem, double l);

/// ||z_{k+1}-z*||^2 <= ||z_k-z*||^2 - ||z_{k+1}-z_k||^2 + 1e-10.
InequalityCheck check_pp_nonexpansive(const Trajectory& traj, const SaddleProblem& problem);

/// Max over steps of ||z_{k+1} - (z_k - eta F(z_{k+1}) + eps_k)||.
double ogda_error_residual(const Trajectory& traj, const SaddleProblem& problem);

/// Max over steps of ||z_{k+1/2} - (z_{k-1/2} - eta F(z_{k+1/2}) + eps_k)||, with
/// z_{-1/2} = z_{-1} = z_0 at k = 0.
double eg_error_residual(const Trajectory& traj);

struct OperatorSampleReport {
  int pairs = 0;
  double worst_monotone_excess = 0.0;  // max of -<dF, dz> / (1 + ||dz||^2)
  double worst_lipschitz_ratio = 0.0;  // max of ||dF|| / (l_max ||dz||)
  double saddle_residual = 0.0;        // ||F(z*)|| / (1 + ||z*||)

  bool monotone_pass() const { return worst_monotone_excess <= 1e-10; }
  bool lipschitz_pass() const { return worst_lipschitz_ratio <= 1.0 + 1e-8; }
  bool saddle_pass() const { return saddle_residual <= 1e-10; }
};

/// Monotonicity, Lipschitz continuity and F(z*) = 0, sampled on random pairs
/// drawn from the ball of the given radius around z*.
OperatorSampleReport sample_operator_properties(const SaddleProblem& problem, int pairs,
                                                std::uint64_t seed, double radius = 5.0);

/// Worst-case change of f over one grid cell: with cell diagonal h sqrt(dim),
/// G h sqrt(dim) + (1/2) L_block (h sqrt(dim))^2 where G bounds the block
/// gradient norm on the ball.
double grid_cell_tolerance(double gradient_at_center, double block_lipschitz, double radius,
                           Index dim, int points_per_dim);

}  // namespace saddle
