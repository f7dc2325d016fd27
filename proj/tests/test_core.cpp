#include <cmath>
#include <vector>

#include "doctest.h"
#include "saddle/core.hpp"
#include "saddle/random.hpp"
#include "support.hpp"

using namespace saddle;
using namespace saddle::testing;

TEST_CASE("operator F stacks grad_x over -grad_y") {
  const auto bil = bilinear_1d();
  CHECK(operator_f(bil, point({1}, {1})).stacked() == vec({1, -1}));
  CHECK(operator_f(bil, point({0}, {0})).stacked() == vec({0, 0}));

  const QuadraticSaddleProblem quad(mat({{1}}), mat({{1}}), mat({{0}}), vec({0}), vec({0}));
  CHECK(operator_f(quad, point({2}, {3})).stacked() == vec({2, 3}));
}

TEST_CASE("operator F rejects mismatched points") {
  const auto bil = bilinear_1d();
  CHECK_THROWS_AS(operator_f(bil, point({1, 2}, {1})), DimensionError);
}

TEST_CASE("joint points refuse non-finite coordinates") {
  CHECK_THROWS_AS(point({NAN}, {0}), NumericalError);
  CHECK_THROWS_AS(point({0}, {INFINITY}), NumericalError);
}

TEST_CASE("running average worked examples") {
  RunningAverage avg;
  avg = update_average(std::move(avg), point({1}, {1}));
  CHECK(avg.count() == 1);
  CHECK(avg.mean() == point({1}, {1}));
  avg = update_average(std::move(avg), point({0}, {0}));
  CHECK(avg.count() == 2);
  CHECK(avg.mean() == point({0.5}, {0.5}));
  avg = update_average(std::move(avg), point({2}, {2}));
  CHECK(avg.count() == 3);
  CHECK(avg.mean() == point({1}, {1}));
}

TEST_CASE("running average rejects a shape change") {
  RunningAverage avg(1, 1);
  CHECK_THROWS_AS(update_average(std::move(avg), point({1, 2}, {1})), DimensionError);
}

TEST_CASE("running average tracks sum-then-divide to 1e-12 relative") {
  Rng rng(7);
  RunningAverage avg(3, 2);
  Vector sum = Vector::Zero(5);
  for (int k = 1; k <= 20000; ++k) {
    const Vector z = rng.normal_vector(5) * 10.0 + Vector::Constant(5, 3.0);
    sum += z;
    avg = update_average(std::move(avg), JointPoint::from_stacked(z, 3));
    if (k % 997 == 0 || k == 20000) {
      const Vector direct = sum / static_cast<double>(k);
      const double rel = (avg.mean().stacked() - direct).norm() / direct.norm();
      REQUIRE(rel <= 1e-12);
    }
  }
}

TEST_CASE("squared distance") {
  CHECK(squared_distance(point({1}, {1}), point({0}, {0})) == 2.0);
  const JointPoint z = point({0.3, -1}, {2});
  CHECK(squared_distance(z, z) == 0.0);
  CHECK(squared_distance(point({0.25}, {1.25}), point({0}, {0})) == doctest::Approx(1.625).epsilon(1e-15));
  CHECK_THROWS_AS(squared_distance(point({1}, {1}), point({1, 1}, {1})), DimensionError);
}

TEST_CASE("solver names round trip") {
  for (auto kind : {SolverKind::gda, SolverKind::ogda, SolverKind::eg, SolverKind::pp}) {
    CHECK(solver_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(solver_kind_from_string("adam"), ConfigError);
}
