#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "saddle/experiment.hpp"
#include "saddle/oracles.hpp"
#include "saddle/random.hpp"

namespace saddle::experiment {

namespace {

// Row order of the printed matrix.
const std::vector<std::string> kChecks = {
    "operator.monotone",    "operator.lipschitz",  "operator.zero_at_saddle", "oracle.gradient",
    "ergodic.inequality",   "ogda.bounded",        "ogda.rate",               "ogda.error_vector",
    "eg.energy",            "eg.summable",         "eg.midpoint_ball",        "eg.rate",
    "eg.error_vector",      "pp.nonexpansive",     "pp.rate",                 "oracle.replay",
    "oracle.restricted_gap"};

struct Case {
  std::uint64_t seed = 0;
  std::string label;
  QuadraticSaddleProblem problem;
  JointPoint z0;
};

// Even slots are bilinear with an isotropic square coupling (so the EG energy
// relation is an equality), odd slots are general quadratics with rectangular
// blocks. All dimensions stay small enough for the grid oracle.
Case make_case(int index, std::uint64_t seed) {
  ProblemSpec spec;
  spec.seed = seed;
  if (index % 2 == 0) {
    spec.kind = ProblemKind::bilinear;
    spec.dim_x = spec.dim_y = 1 + (index / 2) % 2;
    const double scale = 0.5 + 0.25 * static_cast<double>(index % 5);
    spec.a_spectrum = {scale, scale};
  } else {
    spec.kind = ProblemKind::quadratic;
    spec.dim_x = 1 + (index / 2) % 2;
    spec.dim_y = 1 + (index / 2 + 1) % 2;
  }
  QuadraticSaddleProblem problem = generate(spec);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const JointPoint z_star = *problem.saddle_point();
  const JointPoint z0 =
      JointPoint::from_stacked(z_star.stacked() + rng.in_ball(z_star.size(), 2.0), z_star.dim_x());
  std::string label = fmt::format("{}{}x{}", spec.kind == ProblemKind::bilinear ? "bil" : "quad",
                                  spec.dim_x, spec.dim_y);
  return Case{seed, std::move(label), std::move(problem), z0};
}

class Matrix2D {
 public:
  void set(const std::string& check, std::size_t column, bool pass, std::string detail = {}) {
    auto& row = cells_[check];
    row.resize(std::max(row.size(), column + 1), Cell{});
    row[column] = Cell{true, pass, std::move(detail)};
  }

  bool all_pass() const {
    for (const auto& [name, row] : cells_) {
      for (const auto& c : row) {
        if (c.set && !c.pass) return false;
      }
    }
    return true;
  }

  void print(std::ostream& out, const std::vector<Case>& cases) const {
    out << fmt::format("{:<24}", "check");
    for (const auto& c : cases) out << fmt::format(" {:>9}", c.label);
    out << '\n';
    for (const auto& name : kChecks) {
      const auto it = cells_.find(name);
      out << fmt::format("{:<24}", name);
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const char* mark = "-";
        if (it != cells_.end() && i < it->second.size() && it->second[i].set) {
          mark = it->second[i].pass ? "PASS" : "FAIL";
        }
        out << fmt::format(" {:>9}", mark);
      }
      out << '\n';
    }
    for (const auto& name : kChecks) {
      const auto it = cells_.find(name);
      if (it == cells_.end()) continue;
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        const Cell& c = it->second[i];
        if (c.set && !c.pass) {
          out << fmt::format("FAIL {} seed={} {}\n", name, cases[i].seed, c.detail);
        }
      }
    }
  }

 private:
  struct Cell {
    bool set = false;
    bool pass = false;
    std::string detail;
  };
  std::map<std::string, std::vector<Cell>> cells_;
};

std::string describe(const InequalityCheck& c) {
  return fmt::format("{}: {} of {} violated, worst excess {:.3e}", c.name, c.violations, c.checked,
                     c.worst_excess);
}

bool bounds_pass(const CertificateReport& r, std::string& detail) {
  for (const auto& b : r.bounds) {
    if (!b.pass) {
      detail = fmt::format("N={} gap={:.6e} bound={:.6e}", b.n, b.gap, b.bound);
      return false;
    }
  }
  return true;
}

double replay_gap(const Case& c, SolverKind solver, const StepsizeRule& rule, std::int64_t n) {
  Scenario s;
  s.id = c.label;
  s.problem = std::make_shared<const QuadraticSaddleProblem>(c.problem);
  s.solver = solver;
  s.rule = rule;
  s.z0 = c.z0;
  s.iterations = n;
  return replay_deviation(s);
}

void check_case(const Case& c, std::size_t col, const VerifyOptions& opt, Matrix2D& m) {
  const QuadraticSaddleProblem& problem = c.problem;
  const JointPoint z_star = *problem.saddle_point();
  const LipschitzProfile profile = *problem.lipschitz();
  const std::uint64_t seed = c.seed;

  const OperatorSampleReport ops = sample_operator_properties(problem, opt.operator_pairs, seed);
  m.set("operator.monotone", col, ops.monotone_pass(),
        fmt::format("worst excess {:.3e}", ops.worst_monotone_excess));
  m.set("operator.lipschitz", col, ops.lipschitz_pass(),
        fmt::format("worst ratio {:.12g}", ops.worst_lipschitz_ratio));
  m.set("operator.zero_at_saddle", col, ops.saddle_pass(),
        fmt::format("residual {:.3e}", ops.saddle_residual));

  const double fd = oracles::max_gradient_relative_error(problem, 100, seed + 1);
  m.set("oracle.gradient", col, fd <= 1e-6, fmt::format("relative error {:.3e}", fd));

  const std::int64_t n = opt.iterations;
  const std::vector<std::int64_t> schedule = log2_schedule(n);

  // OGDA, optionally at a stepsize outside the guarantee.
  {
    RunOptions run_opt;
    StepsizeRule rule = StepsizeRule::ogda_default();
    if (opt.inject_ogda_stepsize_fault) {
      rule = StepsizeRule::explicit_eta(2.0 / profile.l_max);
      run_opt.enforce_preconditions = false;
    }
    Trajectory traj;
    std::string run_error;
    try {
      traj = run(problem, SolverKind::ogda, c.z0, n, rule, run_opt);
    } catch (const RunError& e) {
      traj = e.partial();
      run_error = e.what();
    }
    InequalityCheck bounded = check_ogda_boundedness(traj, problem);
    std::string detail = describe(bounded);
    if (!run_error.empty()) {
      bounded.violations += 1;
      detail += "; run aborted: " + run_error;
    }
    m.set("ogda.bounded", col, bounded.pass(), detail);

    if (run_error.empty()) {
      std::string rate_detail;
      const bool rate_ok = bounds_pass(certify(traj, problem, schedule), rate_detail);
      m.set("ogda.rate", col, rate_ok, rate_detail);

      const double err = ogda_error_residual(traj, problem);
      m.set("ogda.error_vector", col, err <= 1e-10, fmt::format("residual {:.3e}", err));

      // Ergodic inequality on the first 200 iterates at random probes in the ball.
      const std::int64_t prefix = std::min<std::int64_t>(200, traj.size());
      std::vector<JointPoint> iterates;
      for (std::int64_t k = 1; k <= prefix; ++k) iterates.push_back(traj.iterate(k));
      Rng rng(seed + 2);
      bool ok = true;
      std::string ineq_detail;
      for (int probe = 0; probe < 10; ++probe) {
        const JointPoint z = JointPoint::from_stacked(
            z_star.stacked() + rng.in_ball(z_star.size(), 3.0), z_star.dim_x());
        const Lemma2Result r = lemma2_check(problem, iterates, z);
        if (!r.pass) {
          ok = false;
          ineq_detail = fmt::format("lhs {:.12g} > rhs {:.12g}", r.lhs, r.rhs);
        }
      }
      m.set("ergodic.inequality", col, ok, ineq_detail);

      // Analytic restricted gap against the grid oracle at the ergodic point.
      const CompactBall ball = CompactBall::ogda(c.z0, z_star);
      const JointPoint& avg = traj.records.back().ergodic;
      const int ppd = std::max(problem.dim_x(), problem.dim_y()) == 1 ? 20001 : 1001;
      const double analytic = restricted_gap(problem, avg.x(), avg.y(), ball);
      const double grid =
          restricted_gap(problem, avg.x(), avg.y(), ball, {GapMethod::Kind::grid, ppd});
      const double radius = std::sqrt(ball.squared_radius);
      const double tol =
          grid_cell_tolerance(problem.grad_y(avg.x(), z_star.y()).norm(), profile.l_yy, radius,
                              problem.dim_y(), ppd) +
          grid_cell_tolerance(problem.grad_x(z_star.x(), avg.y()).norm(), profile.l_xx, radius,
                              problem.dim_x(), ppd);
      const bool gap_ok = analytic >= grid - 1e-9 * (1.0 + std::abs(grid)) && analytic - grid <= tol;
      m.set("oracle.restricted_gap", col, gap_ok,
            fmt::format("analytic {:.12g} grid {:.12g} tolerance {:.3e}", analytic, grid, tol));
    }
  }

  // EG at sigma = 1/2.
  {
    const Trajectory traj = run(problem, SolverKind::eg, c.z0, n, StepsizeRule::eg_sigma(0.5));
    const EgEnergyReport energy = check_eg_energy(traj, problem);
    bool energy_ok = energy.per_step.pass() && energy.monotone.pass();
    std::string detail = describe(energy.per_step) + "; " + describe(energy.monotone);
    if (problem.kind() == ProblemKind::bilinear) {
      const double eq = eg_energy_equality_residual(traj, problem, profile.l_operator_estimate);
      energy_ok = energy_ok && eq <= 1e-10;
      detail += fmt::format("; equality residual {:.3e}", eq);
    }
    m.set("eg.energy", col, energy_ok, detail);
    m.set("eg.summable", col, energy.summability.pass(), describe(energy.summability));
    m.set("eg.midpoint_ball", col, energy.midpoint_ball.pass(), describe(energy.midpoint_ball));
    std::string rate_detail;
    const bool rate_ok = bounds_pass(certify(traj, problem, schedule), rate_detail);
    m.set("eg.rate", col, rate_ok, rate_detail);
    const double err = eg_error_residual(traj);
    m.set("eg.error_vector", col, err <= 1e-10, fmt::format("residual {:.3e}", err));
  }

  // PP at three stepsizes.
  {
    bool nonexp_ok = true;
    bool rate_ok = true;
    std::string nonexp_detail, rate_detail;
    for (double eta : {0.5, 1.0, 2.0}) {
      const Trajectory traj = run(problem, SolverKind::pp, c.z0, n, StepsizeRule::pp_fixed(eta));
      const InequalityCheck ne = check_pp_nonexpansive(traj, problem);
      if (!ne.pass()) {
        nonexp_ok = false;
        nonexp_detail = fmt::format("eta={} {}", eta, describe(ne));
      }
      std::string d;
      if (!bounds_pass(certify(traj, problem, schedule), d)) {
        rate_ok = false;
        rate_detail = fmt::format("eta={} {}", eta, d);
      }
    }
    m.set("pp.nonexpansive", col, nonexp_ok, nonexp_detail);
    m.set("pp.rate", col, rate_ok, rate_detail);
  }

  // Naive replay of all four recurrences over a short horizon.
  {
    const std::int64_t horizon = std::min<std::int64_t>(n, 200);
    double worst = 0.0;
    worst = std::max(worst, replay_gap(c, SolverKind::ogda, StepsizeRule::ogda_default(), horizon));
    worst = std::max(worst, replay_gap(c, SolverKind::eg, StepsizeRule::eg_sigma(0.5), horizon));
    worst = std::max(worst, replay_gap(c, SolverKind::pp, StepsizeRule::pp_fixed(1.0), horizon));
    worst = std::max(worst, replay_gap(c, SolverKind::gda,
                                       StepsizeRule::explicit_eta(0.1 / profile.l_max), horizon));
    m.set("oracle.replay", col, worst <= 1e-12, fmt::format("max deviation {:.3e}", worst));
  }
}

}  // namespace

int verify_suite(const VerifyOptions& options, std::ostream& out) {
  if (options.problems <= 0) {
    out << "nothing to verify\n";
    return kExitUsage;
  }
  if (options.iterations < 1) throw ConfigError("verify: iterations must be at least 1");

  std::vector<Case> cases;
  for (int i = 0; i < options.problems; ++i) {
    cases.push_back(make_case(i, options.base_seed + static_cast<std::uint64_t>(i)));
  }
  Matrix2D matrix;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    try {
      check_case(cases[i], i, options, matrix);
    } catch (const std::exception& e) {
      matrix.set("oracle.replay", i, false, std::string("aborted: ") + e.what());
    }
  }
  matrix.print(out, cases);
  const bool ok = matrix.all_pass();
  out << (ok ? "verify: all checks pass\n" : "verify: FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace saddle::experiment
