#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "saddle/problems.hpp"
#include "saddle/random.hpp"
#include "support.hpp"

using namespace saddle;
using namespace saddle::testing;

namespace {

constexpr double kInflate = kLipschitzInflation;

// Largest singular value from the full symmetric eigendecomposition of a'a.
double exhaustive_spectral_norm(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a.transpose() * a);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

QuadraticSaddleProblem random_quadratic(std::uint64_t seed, Index m, Index n) {
  ProblemSpec spec;
  spec.seed = seed;
  spec.dim_x = m;
  spec.dim_y = n;
  return generate(spec);
}

}  // namespace

TEST_CASE("objective values") {
  const auto bil = bilinear_1d();
  CHECK(bil.value(point({1}, {1})) == 1.0);
  CHECK(bil.value(point({0}, {5})) == 0.0);
  const QuadraticSaddleProblem quad(mat({{1}}), mat({{1}}), mat({{1}}), vec({0}), vec({0}));
  CHECK(quad.value(point({1}, {1})) == 1.0);
  CHECK_THROWS_AS(quad.value(vec({1, 2}), vec({1})), DimensionError);
}

TEST_CASE("gradients") {
  const auto bil = bilinear_1d();
  CHECK(bil.grad_x(vec({2}), vec({3})) == vec({3}));
  CHECK(bil.grad_y(vec({2}), vec({3})) == vec({2}));
  const QuadraticSaddleProblem quad(mat({{2}}), mat({{1}}), mat({{0}}), vec({0}), vec({0}));
  CHECK(quad.grad_x(vec({1}), vec({1})) == vec({2}));
  CHECK(quad.grad_y(vec({1}), vec({1})) == vec({-1}));
  CHECK_THROWS_AS(quad.grad_y(vec({1}), vec({1, 1})), DimensionError);
}

TEST_CASE("gradients vanish at the saddle point") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = random_quadratic(seed, 1 + seed % 5, 1 + (seed * 3) % 5);
    const JointPoint z = *p.saddle_point();
    CHECK(p.grad_x(z.x(), z.y()).norm() <= 1e-10);
    CHECK(p.grad_y(z.x(), z.y()).norm() <= 1e-10);
  }
}

TEST_CASE("Lipschitz profile worked examples") {
  const auto bil = bilinear_1d();
  const auto lb = *bil.lipschitz();
  CHECK(lb.l_max >= 1.0);
  CHECK(lb.l_max <= 1.0 * kInflate);

  const QuadraticSaddleProblem quad(mat({{2}}), mat({{1}}), mat({{0}}), vec({0}), vec({0}));
  const auto lq = *quad.lipschitz();
  CHECK(lq.l_xx == doctest::Approx(2.0).epsilon(2e-9));
  CHECK(lq.l_yy == doctest::Approx(1.0).epsilon(2e-9));
  CHECK(lq.l_max == doctest::Approx(2.0).epsilon(2e-9));
}

TEST_CASE("coupling norm agrees with the exhaustive eigenvalue computation") {
  const Matrix a = mat({{3, 0}, {0, 4}});
  const double reference = exhaustive_spectral_norm(a);
  CHECK(reference == doctest::Approx(4.0).epsilon(1e-14));
  const auto l = *QuadraticSaddleProblem::bilinear(a).lipschitz();
  CHECK(l.l_xy >= reference);
  CHECK(l.l_xy <= reference * kInflate * (1 + 1e-12));
  CHECK(l.l_yx == l.l_xy);
}

TEST_CASE("power iteration matches the eigen solver on random matrices") {
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = rng.normal_matrix(1 + t % 7, 1 + (t * 5) % 9);
    const double reference = exhaustive_spectral_norm(a);
    const SpectralEstimate est = spectral_norm(a);
    CHECK(std::abs(est.value - reference) <= 1e-10 * reference);
  }
  CHECK(spectral_norm(Matrix::Zero(3, 2)).value == 0.0);
}

TEST_CASE("power iteration reports non-convergence with its last estimate") {
  // Two singular values 1 and 1 - 1e-7: the Rayleigh quotient creeps too slowly.
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0 - 1e-7;
  PowerIterationOptions opt;
  opt.max_iterations = 50;
  opt.relative_tolerance = 1e-16;
  try {
    spectral_norm(a, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_value() > 0.99);
    CHECK(e.last_value() <= 1.0);
  }
}

// With P = Q = A = [1] the joint operator is [[1, 1], [-1, 1]], of norm sqrt(2),
// while every block constant is 1. l_max must cover F itself.
TEST_CASE("l_max bounds the joint operator, not only the blocks") {
  const QuadraticSaddleProblem quad(mat({{1}}), mat({{1}}), mat({{1}}), vec({0}), vec({0}));
  const auto l = *quad.lipschitz();
  CHECK(l.l_xx == doctest::Approx(1.0).epsilon(2e-9));
  CHECK(l.l_xy == doctest::Approx(1.0).epsilon(2e-9));
  CHECK(l.l_max == doctest::Approx(std::sqrt(2.0)).epsilon(2e-9));
  CHECK(l.l_max >= std::sqrt(2.0));
}

TEST_CASE("saddle point solve") {
  CHECK(*bilinear_1d().saddle_point() == point({0}, {0}));

  const QuadraticSaddleProblem quad(mat({{1}}), mat({{1}}), mat({{1}}), vec({-1}), vec({0}));
  const JointPoint z = *quad.saddle_point();
  CHECK(z.x()[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(z.y()[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(operator_f(quad, z).stacked().norm() <= 1e-14);

  const auto p5 = random_quadratic(5, 5, 5);
  const JointPoint z5 = *p5.saddle_point();
  CHECK(operator_f(p5, z5).stacked().norm() <= 1e-10);
}

TEST_CASE("no finite saddle point") {
  // f = x - y^2/2: grad_x is the constant 1.
  CHECK_THROWS_WITH_AS(QuadraticSaddleProblem(mat({{0}}), mat({{1}}), mat({{0}}), vec({1}), vec({0})),
                       doctest::Contains("no finite saddle point"), Error);
  // x'Ay + b'x with A rank one and b outside its range.
  CHECK_THROWS_WITH_AS(QuadraticSaddleProblem(mat({{0, 0}, {0, 0}}), mat({{0}}), mat({{1}, {0}}),
                                              vec({0, 1}), vec({0})),
                       doctest::Contains("no finite saddle point"), Error);
}

TEST_CASE("rejects invalid blocks") {
  CHECK_THROWS_AS(QuadraticSaddleProblem(mat({{1, 2}, {0, 1}}), mat({{1}}), mat({{1}, {1}}),
                                         vec({0, 0}), vec({0})),
                  ConfigError);  // not symmetric
  CHECK_THROWS_AS(QuadraticSaddleProblem(mat({{-1}}), mat({{1}}), mat({{1}}), vec({0}), vec({0})),
                  ConfigError);  // not PSD
  CHECK_THROWS_AS(QuadraticSaddleProblem(mat({{1}}), mat({{1}}), mat({{1, 1}}), vec({0}), vec({0})),
                  Error);  // dimension mismatch
  CHECK_THROWS_AS(QuadraticSaddleProblem(mat({{0}}), mat({{0}}), mat({{0}}), vec({0}), vec({0})),
                  ConfigError);  // constant gradient
}

TEST_CASE("generator is deterministic and honours its spectra") {
  ProblemSpec spec;
  spec.seed = 42;
  spec.dim_x = 4;
  spec.dim_y = 3;
  spec.p_spectrum = {1.0, 2.0};
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(a.p() == b.p());
  CHECK(a.q() == b.q());
  CHECK(a.a() == b.a());
  CHECK(a.b() == b.b());
  CHECK(a.c() == b.c());
  const double l_xx = a.lipschitz()->l_xx;
  CHECK(l_xx >= 1.0);
  CHECK(l_xx <= 2.0 * kInflate);

  spec.kind = ProblemKind::bilinear;
  const auto bil = generate(spec);
  CHECK(bil.p().isZero(0.0));
  CHECK(bil.q().isZero(0.0));
  CHECK(bil.kind() == ProblemKind::bilinear);

  spec.p_spectrum = {-1.0, 1.0};
  spec.kind = ProblemKind::quadratic;
  CHECK_THROWS_AS(generate(spec), ConfigError);
}

TEST_CASE("saddle inequality at random points") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = random_quadratic(100 + seed, 3, 2);
    const JointPoint z = *p.saddle_point();
    const double f_star = p.value(z);
    Rng rng(seed);
    for (int i = 0; i < 100; ++i) {
      const Vector x = z.x() + rng.normal_vector(3) * 3.0;
      const Vector y = z.y() + rng.normal_vector(2) * 3.0;
      CHECK(p.value(z.x(), y) <= f_star + 1e-10);
      CHECK(f_star <= p.value(x, z.y()) + 1e-10);
    }
  }
}

TEST_CASE("bilinear problems are flat in y at the saddle") {
  const auto bil = QuadraticSaddleProblem::bilinear(mat({{1, 2}, {3, -1}, {0, 1}}));
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    CHECK(bil.value(bil.saddle_point()->x(), rng.normal_vector(2) * 10.0) == 0.0);
  }
}

TEST_CASE("JSON round trip is exact") {
  const auto p = random_quadratic(77, 3, 4);
  const auto q = problem_from_json(problem_to_json(p));
  CHECK(q.p() == p.p());
  CHECK(q.q() == p.q());
  CHECK(q.a() == p.a());
  CHECK(q.b() == p.b());
  CHECK(q.c() == p.c());
  CHECK(q.seed() == p.seed());
  CHECK(problem_to_json(q) == problem_to_json(p));
  CHECK_THROWS_AS(problem_from_json("{\"schema_version\": 2}"), ConfigError);
  CHECK_THROWS_AS(problem_from_json("{not json"), ConfigError);
}
