#include <cmath>

#include "doctest.h"
#include "saddle/solvers.hpp"
#include "support.hpp"

using namespace saddle;
using namespace saddle::testing;

namespace {

const JointPoint kStart = point({1}, {1});

void check_point(const JointPoint& z, double x, double y, double tol = 1e-15) {
  CHECK(z.x()[0] == doctest::Approx(x).epsilon(tol).scale(1.0));
  CHECK(z.y()[0] == doctest::Approx(y).epsilon(tol).scale(1.0));
}

QuadraticSaddleProblem random_quadratic(std::uint64_t seed) {
  ProblemSpec spec;
  spec.seed = seed;
  spec.dim_x = 3;
  spec.dim_y = 2;
  return generate(spec);
}

}  // namespace

TEST_CASE("stepsize rules") {
  const auto bil = bilinear_1d();
  const auto l = *bil.lipschitz();
  CHECK(resolve_stepsize(StepsizeRule::ogda_default(), SolverKind::ogda, l).eta ==
        doctest::Approx(0.5).epsilon(2e-9));
  const auto eg = resolve_stepsize(StepsizeRule::eg_sigma(0.5), SolverKind::eg, l);
  CHECK(eg.eta * l.l_max == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eg.sigma.value() == 0.5);
  CHECK_THROWS_WITH_AS(resolve_stepsize(StepsizeRule::eg_sigma(1.5), SolverKind::eg, l),
                       doctest::Contains("sigma must lie in (0,1)"), ConfigError);
  CHECK_THROWS_AS(resolve_stepsize(StepsizeRule::explicit_eta(0.6), SolverKind::ogda, l), ConfigError);
  CHECK_THROWS_AS(resolve_stepsize(StepsizeRule::explicit_eta(1.0), SolverKind::eg, l), ConfigError);
  CHECK_THROWS_AS(resolve_stepsize(StepsizeRule::ogda_default(), SolverKind::gda, l), ConfigError);
  CHECK_THROWS_AS(resolve_stepsize(StepsizeRule::explicit_eta(-1.0), SolverKind::gda, l), ConfigError);
  CHECK(resolve_stepsize(StepsizeRule::explicit_eta(0.6), SolverKind::ogda, l, false).eta == 0.6);
}

TEST_CASE("GDA step") {
  const auto bil = bilinear_1d();
  const SolverState s1 = gda_step(bil, SolverState::initial(kStart), 0.5);
  check_point(s1.z, 0.5, 1.5);
  // Each step multiplies the squared distance by 1 + eta^2 on a unit bilinear game.
  CHECK(squared_distance(s1.z, *bil.saddle_point()) == doctest::Approx(2.5).epsilon(1e-15));
  const JointPoint origin = point({0}, {0});
  CHECK(gda_step(bil, SolverState::initial(origin), 0.7).z == origin);
}

TEST_CASE("OGDA steps") {
  const auto bil = bilinear_1d();
  const SolverState s1 = ogda_step(bil, SolverState::initial(kStart), 0.5);
  check_point(s1.z, 0.5, 1.5);
  const SolverState s2 = ogda_step(bil, s1, 0.5);
  check_point(s2.z, -0.5, 1.5);
  CHECK(s2.f_prev->stacked() == vec({1.5, -0.5}));

  SolverState at_star = SolverState::initial(point({0}, {0}));
  for (int k = 0; k < 10; ++k) at_star = ogda_step(bil, at_star, 0.5);
  CHECK(at_star.z == point({0}, {0}));

  CHECK_THROWS_AS(ogda_step(bil, SolverState::initial(kStart), 0.6), ConfigError);
}

TEST_CASE("EG step and its energy identity on a bilinear game") {
  const auto bil = bilinear_1d();
  const SolverState s1 = eg_step(bil, SolverState::initial(kStart), 0.5);
  check_point(*s1.midpoint, 0.5, 1.5);
  CHECK(s1.f_mid->stacked() == vec({1.5, -0.5}));
  check_point(s1.z, 0.25, 1.25);

  const JointPoint z_star = *bil.saddle_point();
  const double lhs = squared_distance(s1.z, z_star) +
                     (1.0 - 0.25) * squared_distance(*s1.midpoint, kStart);
  CHECK(lhs == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(squared_distance(kStart, z_star) == 2.0);

  const SolverState fixed = eg_step(bil, SolverState::initial(z_star), 0.5);
  CHECK(*fixed.midpoint == z_star);
  CHECK(fixed.z == z_star);

  CHECK_THROWS_AS(eg_step(bil, SolverState::initial(kStart), 1.0), ConfigError);
}

TEST_CASE("proximal point step, closed form") {
  const auto bil = bilinear_1d();
  check_point(pp_step(bil, SolverState::initial(kStart), 1.0).z, 0.0, 1.0, 1e-14);
  const SolverState half = pp_step(bil, SolverState::initial(kStart), 0.5);
  check_point(half.z, 0.4, 1.2, 1e-14);
  CHECK(squared_distance(half.z, *bil.saddle_point()) == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(half.inner_residual.value() <= 1e-14);
  const JointPoint origin = point({0}, {0});
  CHECK(pp_step(bil, SolverState::initial(origin), 2.0).z == origin);
}

TEST_CASE("proximal point fixed-point inner solver") {
  const auto p = random_quadratic(8);
  const JointPoint z0 = JointPoint::from_stacked(vec({1, -2, 0.5, 3, 1}), 3);
  const double eta = 0.5 / p.lipschitz()->l_max;
  InnerSolver fp;
  fp.mode = InnerSolver::Mode::fixed_point;
  const SolverState exact = pp_step(p, SolverState::initial(z0), eta);
  const SolverState iter = pp_step(p, SolverState::initial(z0), eta, fp);
  CHECK((exact.z.stacked() - iter.z.stacked()).norm() <= 1e-11);

  CHECK_THROWS_AS(pp_step(p, SolverState::initial(z0), 2.0 / p.lipschitz()->l_max, fp), ConfigError);

  fp.max_iter = 2;
  try {
    pp_step(p, SolverState::initial(z0), eta, fp);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_value() > fp.tol);
  }
}

TEST_CASE("ergodic averages") {
  const auto bil = bilinear_1d();
  const Trajectory ogda = run(bil, SolverKind::ogda, kStart, 2, StepsizeRule::explicit_eta(0.5));
  check_point(ogda.records[1].ergodic, 0.0, 1.5);

  const Trajectory eg = run(bil, SolverKind::eg, kStart, 1, StepsizeRule::explicit_eta(0.5));
  check_point(eg.records[0].ergodic, 0.5, 1.5);
  check_point(eg.records[0].iterate, 0.25, 1.25);
}

TEST_CASE("every solver rests at the saddle point") {
  const auto p = random_quadratic(3);
  const JointPoint z_star = *p.saddle_point();
  const double l = p.lipschitz()->l_max;
  const std::pair<SolverKind, StepsizeRule> cases[] = {
      {SolverKind::gda, StepsizeRule::explicit_eta(0.1 / l)},
      {SolverKind::ogda, StepsizeRule::ogda_default()},
      {SolverKind::eg, StepsizeRule::eg_sigma(0.5)},
      {SolverKind::pp, StepsizeRule::pp_fixed(1.0)}};
  for (const auto& [solver, rule] : cases) {
    const Trajectory t = run(p, solver, z_star, 100, rule);
    for (const auto& rec : t.records) {
      REQUIRE((rec.iterate.stacked() - z_star.stacked()).norm() <= 1e-12);
    }
  }
}

TEST_CASE("runs are bit-for-bit deterministic") {
  const auto p = random_quadratic(11);
  const JointPoint z0 = JointPoint::from_stacked(vec({1, 2, 3, 4, 5}), 3);
  for (auto solver : {SolverKind::ogda, SolverKind::eg, SolverKind::pp}) {
    const StepsizeRule rule = solver == SolverKind::ogda ? StepsizeRule::ogda_default()
                              : solver == SolverKind::eg ? StepsizeRule::eg_sigma(0.7)
                                                         : StepsizeRule::pp_fixed(0.8);
    const Trajectory a = run(p, solver, z0, 500, rule);
    const Trajectory b = run(p, solver, z0, 500, rule);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      REQUIRE(a.records[k].iterate == b.records[k].iterate);
      REQUIRE(a.records[k].ergodic == b.records[k].ergodic);
    }
  }
}

TEST_CASE("divergence aborts with the partial trajectory") {
  const auto bil = bilinear_1d();
  try {
    run(bil, SolverKind::gda, kStart, 1000, StepsizeRule::explicit_eta(1e100));
    FAIL("expected RunError");
  } catch (const RunError& e) {
    CHECK(e.partial().size() >= 1);
    CHECK(e.partial().size() < 1000);
  }
}

TEST_CASE("OGDA error vector worked example") {
  const auto bil = bilinear_1d();
  const Trajectory t = run(bil, SolverKind::ogda, kStart, 2, StepsizeRule::explicit_eta(0.5));
  const OperatorValue& f0 = t.records[0].operator_value;  // F(z_0)
  const OperatorValue& f1 = t.records[1].operator_value;  // F(z_1)
  // k = 0 uses F(z_{-1}) = F(z_0).
  const Vector eps0 = ogda_error_vector(f0, f0, f1, 0.5);
  CHECK(eps0 == vec({0.25, 0.25}));
  const Vector rebuilt = t.iterate(1).stacked() + 0.5 * f1.stacked() - eps0;
  CHECK((rebuilt - kStart.stacked()).norm() <= 1e-12);

  const OperatorValue constant(vec({2}), vec({-1}));
  CHECK(ogda_error_vector(constant, constant, constant, 0.3).isZero(0.0));
}

TEST_CASE("EG error vector worked example") {
  const auto bil = bilinear_1d();
  const Trajectory t = run(bil, SolverKind::eg, kStart, 2, StepsizeRule::explicit_eta(0.5));
  // Hand values: F(z_0) = (1,-1), F(z_1/2) = (1.5,-0.5), F(z_1) = (1.25,-0.25),
  // z_3/2 = (-0.375, 1.375), F(z_3/2) = (1.375, 0.375).
  const auto& r0 = t.records[0];
  const auto& r1 = t.records[1];
  CHECK(r1.midpoint->stacked() == vec({-0.375, 1.375}));
  const Vector eps1 = eg_error_vector(*r0.midpoint_operator, *r1.midpoint_operator,
                                      r0.operator_value, r1.operator_value, 0.5);
  CHECK(eps1 == vec({-0.1875, 0.0625}));
  const Vector rebuilt = r0.midpoint->stacked() - 0.5 * r1.midpoint_operator->stacked() + eps1;
  CHECK((rebuilt - r1.midpoint->stacked()).norm() <= 1e-12);

  const JointPoint z_star = point({0}, {0});
  const Trajectory rest = run(bil, SolverKind::eg, z_star, 3, StepsizeRule::explicit_eta(0.5));
  CHECK(eg_error_vector(*rest.records[0].midpoint_operator, *rest.records[1].midpoint_operator,
                        rest.records[0].operator_value, rest.records[1].operator_value, 0.5)
            .isZero(0.0));
}
