#include "saddle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saddle/oracles.hpp"
#include "saddle/problems.hpp"
#include "saddle/random.hpp"

namespace saddle {

namespace {

constexpr double kEnergySlack = 1e-10;

JointPoint require_saddle(const SaddleProblem& problem) {
  auto z_star = problem.saddle_point();
  if (!z_star) throw ConfigError("problem has no analytic saddle point");
  return *z_star;
}

bool within(double lhs, double rhs) { return lhs <= rhs + kBoundSlack * (1.0 + std::abs(rhs)); }

}  // namespace

std::string to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::pp: return "pp";
    case Theorem::ogda: return "ogda";
    case Theorem::eg: return "eg";
  }
  return "unknown";
}

Theorem theorem_from_string(const std::string& name) {
  if (name == "pp") return Theorem::pp;
  if (name == "ogda") return Theorem::ogda;
  if (name == "eg") return Theorem::eg;
  throw ConfigError("unknown theorem '" + name + "' (expected pp, ogda or eg)");
}

std::optional<Theorem> theorem_for(SolverKind solver) {
  switch (solver) {
    case SolverKind::pp: return Theorem::pp;
    case SolverKind::ogda: return Theorem::ogda;
    case SolverKind::eg: return Theorem::eg;
    case SolverKind::gda: return std::nullopt;
  }
  return std::nullopt;
}

double bound_value(Theorem theorem, const BoundConstants& c) {
  if (!(c.d >= 0.0) || !std::isfinite(c.d)) throw ConfigError("D must be nonnegative and finite");
  if (c.n < 1) throw ConfigError("N must be at least 1");
  const auto n = static_cast<double>(c.n);
  switch (theorem) {
    case Theorem::pp:
      if (!(c.eta > 0.0)) throw ConfigError("eta must be positive");
      return c.d / (c.eta * n);
    case Theorem::ogda:
      if (!(c.eta > 0.0)) throw ConfigError("eta must be positive");
      if (!(c.l > 0.0)) throw ConfigError("L must be positive");
      return c.d * (8.0 * c.l + 1.0 / (2.0 * c.eta)) / n;
    case Theorem::eg:
      if (!(c.l > 0.0)) throw ConfigError("L must be positive");
      if (!(c.sigma > 0.0 && c.sigma < 1.0)) throw ConfigError("sigma must lie in (0,1)");
      return c.d * c.l * (9.0 + 17.0 / (2.0 * (1.0 - c.sigma * c.sigma))) / n;
  }
  throw ConfigError("unknown theorem");
}

bool CompactBall::contains(const JointPoint& z, double slack) const {
  return squared_distance(z, center) <= squared_radius + slack;
}

CompactBall CompactBall::ogda(const JointPoint& z0, const JointPoint& z_star) {
  return {z_star, 2.0 * squared_distance(z0, z_star)};
}

CompactBall CompactBall::eg(const JointPoint& z0, const JointPoint& z_star, double eta, double l) {
  const double s2 = eta * eta * l * l;
  if (!(s2 < 1.0)) throw ConfigError("EG ball needs eta * L < 1");
  return {z_star, (2.0 + 2.0 / (1.0 - s2)) * squared_distance(z0, z_star)};
}

CompactBall CompactBall::pp(const JointPoint& z0, const JointPoint& z_star) {
  return {z_star, squared_distance(z0, z_star)};
}

bool CertificateReport::all_pass() const { return failures() == 0; }

std::int64_t CertificateReport::failures() const {
  std::int64_t count = 0;
  for (const auto& b : bounds) count += b.pass ? 0 : 1;
  for (const auto& b : balls) count += b.pass ? 0 : 1;
  return count;
}

double corollary_gap(const SaddleProblem& problem, const JointPoint& ergodic) {
  const JointPoint z_star = require_saddle(problem);
  problem.check_dims(ergodic);
  return std::abs(problem.value(ergodic) - problem.value(z_star));
}

std::vector<std::int64_t> log2_schedule(std::int64_t total) {
  std::vector<std::int64_t> out;
  for (std::int64_t n = 1; n < total; n *= 2) out.push_back(n);
  if (total >= 1) out.push_back(total);
  return out;
}

CertificateReport certify(const Trajectory& trajectory, const SaddleProblem& problem,
                          std::span<const std::int64_t> schedule) {
  const auto theorem = theorem_for(trajectory.solver);
  if (!theorem) throw ConfigError("no bound defined for solver " + to_string(trajectory.solver));
  const JointPoint z_star = require_saddle(problem);

  BoundConstants constants;
  constants.d = squared_distance(trajectory.initial, z_star);
  constants.l = trajectory.lipschitz;
  constants.eta = trajectory.eta;
  constants.sigma = trajectory.sigma.value_or(0.0);

  std::vector<std::int64_t> owned;
  if (schedule.empty()) {
    owned = log2_schedule(trajectory.size());
    schedule = owned;
  }

  CertificateReport report;
  for (std::int64_t n : schedule) {
    if (n < 1 || n > trajectory.size()) continue;
    constants.n = n;
    BoundCertificate cert;
    cert.theorem = *theorem;
    cert.d = constants.d;
    cert.l = constants.l;
    cert.eta = constants.eta;
    cert.sigma = trajectory.sigma;
    cert.n = n;
    cert.bound = bound_value(*theorem, constants);
    cert.gap = corollary_gap(problem, trajectory.records[static_cast<std::size_t>(n - 1)].ergodic);
    cert.pass = within(cert.gap, cert.bound);
    cert.margin = cert.bound - cert.gap;
    report.bounds.push_back(cert);
  }

  CompactBall ball;
  switch (*theorem) {
    case Theorem::ogda: ball = CompactBall::ogda(trajectory.initial, z_star); break;
    case Theorem::eg:
      ball = CompactBall::eg(trajectory.initial, z_star, trajectory.eta, trajectory.lipschitz);
      break;
    case Theorem::pp: ball = CompactBall::pp(trajectory.initial, z_star); break;
  }
  for (const auto& rec : trajectory.records) {
    const double d2 = squared_distance(rec.iterate, z_star);
    report.balls.push_back({rec.k + 1, false, d2, ball.squared_radius, d2 <= ball.squared_radius + kBoundSlack});
    if (rec.midpoint) {
      const double m2 = squared_distance(*rec.midpoint, z_star);
      report.balls.push_back({rec.k, true, m2, ball.squared_radius, m2 <= ball.squared_radius + kBoundSlack});
    }
  }
  return report;
}

Vector maximize_concave_quadratic_on_ball(const Matrix& h, const Vector& d, double radius) {
  const Index n = d.size();
  if (h.rows() != n || h.cols() != n) throw DimensionError("ball quadratic: dimension mismatch");
  if (!(radius >= 0.0)) throw ConfigError("ball radius must be nonnegative");
  if (radius == 0.0 || d.norm() == 0.0) return Vector::Zero(n);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& basis = eig.eigenvectors();
  const Vector dt = basis.transpose() * d;
  const double scale = std::max(1.0, lambda.maxCoeff());
  const double zero_eig = 1e-13 * scale;

  // Interior stationary point exists when d has no component along the
  // (numerical) null space and the pseudo-inverse solution fits in the ball.
  bool interior = true;
  double norm2 = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (lambda[i] <= zero_eig) {
      if (std::abs(dt[i]) > 1e-13 * d.norm()) interior = false;
    } else {
      norm2 += (dt[i] / lambda[i]) * (dt[i] / lambda[i]);
    }
  }
  if (interior && norm2 <= radius * radius) {
    Vector ut(n);
    for (Index i = 0; i < n; ++i) ut[i] = lambda[i] <= zero_eig ? 0.0 : dt[i] / lambda[i];
    return basis * ut;
  }

  // Boundary: find mu >= 0 with ||(H + mu I)^{-1} d|| = radius.
  auto norm_at = [&](double mu) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double t = dt[i] / (lambda[i] + mu);
      s += t * t;
    }
    return std::sqrt(s);
  };
  double lo = 0.0;
  double hi = dt.norm() / radius;
  // Bisect until the bracket collapses to adjacent doubles.
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (norm_at(mid) > radius ? lo : hi) = mid;
  }
  const double mu = hi;
  Vector ut(n);
  for (Index i = 0; i < n; ++i) ut[i] = dt[i] / (lambda[i] + mu);
  Vector u = basis * ut;
  const double un = u.norm();
  if (un > 0.0) u *= radius / un;
  return u;
}

double restricted_gap(const SaddleProblem& problem, const VectorRef& x_hat, const VectorRef& y_hat,
                      const CompactBall& ball, const GapMethod& method) {
  const JointPoint z_star = require_saddle(problem);
  if (x_hat.size() != problem.dim_x() || y_hat.size() != problem.dim_y()) {
    throw DimensionError("restricted_gap: dimension mismatch");
  }
  const double f_star = problem.value(z_star);
  const double radius = std::sqrt(ball.squared_radius);
  const Vector x_center = ball.center.x();
  const Vector y_center = ball.center.y();

  double max_y = 0.0;
  double min_x = 0.0;
  if (method.kind == GapMethod::Kind::grid) {
    max_y = oracles::grid_inner_opt(problem, oracles::Block::y, x_hat, y_center, radius,
                                    method.points_per_dim);
    min_x = oracles::grid_inner_opt(problem, oracles::Block::x, y_hat, x_center, radius,
                                    method.points_per_dim);
  } else {
    const auto* quad = dynamic_cast<const QuadraticSaddleProblem*>(&problem);
    if (quad == nullptr) throw ConfigError("analytic restricted gap needs a quadratic problem");
    // y-block: maximize -(1/2)u'Qu + grad_y f(x_hat, y_c)'u.
    const Vector dy = quad->grad_y(x_hat, y_center);
    const Vector uy = maximize_concave_quadratic_on_ball(quad->q(), dy, radius);
    max_y = quad->value(x_hat, y_center + uy);
    // x-block: minimize (1/2)u'Pu + grad_x f(x_c, y_hat)'u.
    const Vector dx = -quad->grad_x(x_center, y_hat);
    const Vector ux = maximize_concave_quadratic_on_ball(quad->p(), dx, radius);
    min_x = quad->value(x_center + ux, y_hat);
  }
  return (max_y - f_star) + (f_star - min_x);
}

Lemma2Result lemma2_check(const SaddleProblem& problem, std::span<const JointPoint> iterates,
                          const JointPoint& probe) {
  if (iterates.empty()) throw ConfigError("lemma2_check needs at least one iterate");
  problem.check_dims(probe);
  RunningAverage avg(probe.dim_x(), probe.dim_y());
  double sum = 0.0;
  for (const auto& z : iterates) {
    problem.check_dims(z);
    avg = update_average(std::move(avg), z);
    sum += operator_f(problem, z).stacked().dot(z.stacked() - probe.stacked());
  }
  Lemma2Result out;
  const JointPoint& mean = avg.mean();
  out.lhs = problem.value(mean.x(), probe.y()) - problem.value(probe.x(), mean.y());
  out.rhs = sum / static_cast<double>(iterates.size());
  out.pass = within(out.lhs, out.rhs);
  return out;
}

RateFit rate_fit(std::span<const double> ns, std::span<const double> gaps) {
  if (ns.size() != gaps.size()) throw DimensionError("rate_fit: series length mismatch");
  if (ns.size() < 5) throw ConfigError("rate_fit needs at least 5 points");
  RateFit out;
  for (double g : gaps) {
    if (!(g > 1e-14)) {
      out.below_floor = true;
      return out;
    }
  }
  const auto count = static_cast<double>(ns.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sx += std::log(ns[i]);
    sy += std::log(gaps[i]);
  }
  const double mx = sx / count;
  const double my = sy / count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double dx = std::log(ns[i]) - mx;
    sxy += dx * (std::log(gaps[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ConfigError("rate_fit needs at least two distinct N");
  out.slope = sxy / sxx;
  return out;
}

void InequalityCheck::record(double lhs, double rhs) {
  ++checked;
  const double excess = lhs - rhs;
  if (checked == 1 || excess > worst_excess) worst_excess = excess;
  if (excess > 0.0) ++violations;
}

InequalityCheck check_ogda_boundedness(const Trajectory& traj, const SaddleProblem& problem) {
  const JointPoint z_star = require_saddle(problem);
  const double bound = 2.0 * squared_distance(traj.initial, z_star) + kBoundSlack;
  InequalityCheck check{"ogda_boundedness"};
  for (const auto& rec : traj.records) check.record(squared_distance(rec.iterate, z_star), bound);
  return check;
}

EgEnergyReport check_eg_energy(const Trajectory& traj, const SaddleProblem& problem) {
  const JointPoint z_star = require_saddle(problem);
  const double s = traj.eta * traj.lipschitz;
  const double contraction = 1.0 - s * s;
  const double d0 = squared_distance(traj.initial, z_star);

  EgEnergyReport r;
  r.per_step.name = "eg_energy_decrease";
  r.monotone.name = "eg_distance_nonincreasing";
  r.summability.name = "eg_midstep_summability";
  r.midpoint_ball.name = "eg_midpoint_ball";
  const double ball = (2.0 + 2.0 / contraction) * d0 + kBoundSlack;
  for (const auto& rec : traj.records) {
    const JointPoint& z_k = traj.iterate(rec.k);
    const double before = squared_distance(z_k, z_star);
    const double after = squared_distance(rec.iterate, z_star);
    const double midstep = squared_distance(*rec.midpoint, z_k);
    r.per_step.record(after + contraction * midstep, before + kEnergySlack);
    r.monotone.record(after, before + kEnergySlack);
    r.midpoint_ball.record(squared_distance(*rec.midpoint, z_star), ball);
    r.midstep_sum += midstep;
  }
  r.summability.record(r.midstep_sum, d0 / contraction + kBoundSlack);
  return r;
}

double eg_energy_equality_residual(const Trajectory& traj, const SaddleProblem& problem, double l) {
  const JointPoint z_star = require_saddle(problem);
  const double contraction = 1.0 - traj.eta * traj.eta * l * l;
  double worst = 0.0;
  for (const auto& rec : traj.records) {
    const JointPoint& z_k = traj.iterate(rec.k);
    const double lhs = squared_distance(rec.iterate, z_star) +
                       contraction * squared_distance(*rec.midpoint, z_k);
    worst = std::max(worst, std::abs(lhs - squared_distance(z_k, z_star)));
  }
  return worst;
}

InequalityCheck check_pp_nonexpansive(const Trajectory& traj, const SaddleProblem& problem) {
  const JointPoint z_star = require_saddle(problem);
  InequalityCheck check{"pp_nonexpansive"};
  for (const auto& rec : traj.records) {
    const JointPoint& z_k = traj.iterate(rec.k);
    check.record(squared_distance(rec.iterate, z_star),
                 squared_distance(z_k, z_star) - squared_distance(rec.iterate, z_k) + kEnergySlack);
  }
  return check;
}

double ogda_error_residual(const Trajectory& traj, const SaddleProblem& problem) {
  if (traj.solver != SolverKind::ogda) throw ConfigError("ogda_error_residual needs an OGDA run");
  double worst = 0.0;
  const auto n = traj.records.size();
  for (std::size_t k = 0; k < n; ++k) {
    const OperatorValue& f_curr = traj.records[k].operator_value;  // F(z_k)
    const OperatorValue& f_prev = k == 0 ? f_curr : traj.records[k - 1].operator_value;
    const OperatorValue f_next = k + 1 < n ? traj.records[k + 1].operator_value
                                           : operator_f(problem, traj.records[k].iterate);
    const Vector eps = ogda_error_vector(f_prev, f_curr, f_next, traj.eta);
    const JointPoint& z_k = traj.iterate(static_cast<std::int64_t>(k));
    const Vector rebuilt = z_k.stacked() - traj.eta * f_next.stacked() + eps;
    worst = std::max(worst, (traj.records[k].iterate.stacked() - rebuilt).norm());
  }
  return worst;
}

double eg_error_residual(const Trajectory& traj) {
  if (traj.solver != SolverKind::eg) throw ConfigError("eg_error_residual needs an EG run");
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.records.size(); ++k) {
    const StepRecord& rec = traj.records[k];
    const OperatorValue& f_curr = rec.operator_value;  // F(z_k)
    const OperatorValue& f_mid_curr = *rec.midpoint_operator;
    const OperatorValue& f_prev = k == 0 ? f_curr : traj.records[k - 1].operator_value;
    const OperatorValue& f_mid_prev = k == 0 ? f_curr : *traj.records[k - 1].midpoint_operator;
    const Vector& mid_prev = k == 0 ? traj.initial.stacked() : traj.records[k - 1].midpoint->stacked();
    const Vector eps = eg_error_vector(f_mid_prev, f_mid_curr, f_prev, f_curr, traj.eta);
    const Vector rebuilt = mid_prev - traj.eta * f_mid_curr.stacked() + eps;
    worst = std::max(worst, (rec.midpoint->stacked() - rebuilt).norm());
  }
  return worst;
}

OperatorSampleReport sample_operator_properties(const SaddleProblem& problem, int pairs,
                                                std::uint64_t seed, double radius) {
  const JointPoint z_star = require_saddle(problem);
  const auto profile = problem.lipschitz();
  if (!profile) throw ConfigError("operator sampling needs a Lipschitz profile");
  OperatorSampleReport r;
  r.pairs = pairs;
  r.saddle_residual = operator_f(problem, z_star).stacked().norm() / (1.0 + z_star.stacked().norm());
  Rng rng(seed);
  r.worst_monotone_excess = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < pairs; ++i) {
    const JointPoint z1 = JointPoint::from_stacked(z_star.stacked() + rng.in_ball(z_star.size(), radius), z_star.dim_x());
    const JointPoint z2 = JointPoint::from_stacked(z_star.stacked() + rng.in_ball(z_star.size(), radius), z_star.dim_x());
    const Vector dz = z1.stacked() - z2.stacked();
    const Vector df = operator_f(problem, z1).stacked() - operator_f(problem, z2).stacked();
    r.worst_monotone_excess = std::max(r.worst_monotone_excess, -df.dot(dz) / (1.0 + dz.squaredNorm()));
    const double dn = dz.norm();
    if (dn > 0.0) r.worst_lipschitz_ratio = std::max(r.worst_lipschitz_ratio, df.norm() / (profile->l_max * dn));
  }
  return r;
}

double grid_cell_tolerance(double gradient_at_center, double block_lipschitz, double radius,
                           Index dim, int points_per_dim) {
  const double cell = 2.0 * radius / static_cast<double>(points_per_dim - 1) *
                      std::sqrt(static_cast<double>(dim));
  const double grad_bound = gradient_at_center + block_lipschitz * radius;
  return grad_bound * cell + 0.5 * block_lipschitz * cell * cell;
}

}  // namespace saddle
