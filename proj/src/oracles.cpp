#include "saddle/oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "saddle/random.hpp"

namespace saddle::oracles {

namespace {

using Raw = std::vector<double>;

Raw operator_raw(const SaddleProblem& problem, const Raw& z) {
  const Index m = problem.dim_x();
  const Index n = problem.dim_y();
  Vector x(m), y(n);
  for (Index i = 0; i < m; ++i) x[i] = z[static_cast<std::size_t>(i)];
  for (Index j = 0; j < n; ++j) y[j] = z[static_cast<std::size_t>(m + j)];
  const Vector gx = problem.grad_x(x, y);
  const Vector gy = problem.grad_y(x, y);
  Raw f(static_cast<std::size_t>(m + n));
  for (Index i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = gx[i];
  for (Index j = 0; j < n; ++j) f[static_cast<std::size_t>(m + j)] = -gy[j];
  for (double v : f) {
    if (!std::isfinite(v)) throw NumericalError("replay: non-finite operator value");
  }
  return f;
}

// Solves a x = rhs in place by Gaussian elimination with partial pivoting.
// `a` is row-major n x n and is overwritten with its LU factors; `perm` too.
void lu_factor(std::vector<double>& a, std::vector<std::size_t>& perm, std::size_t n) {
  perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (a[pivot * n + col] == 0.0) throw Error("replay: singular proximal system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(perm[col], perm[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / a[col * n + col];
      a[r * n + col] = factor;
      for (std::size_t c = col + 1; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
    }
  }
}

Raw lu_solve(const std::vector<double>& lu, const std::vector<std::size_t>& perm, const Raw& rhs) {
  const std::size_t n = perm.size();
  Raw x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm[i]];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < i; ++c) x[i] -= lu[i * n + c] * x[c];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t c = i + 1; c < n; ++c) x[i] -= lu[i * n + c] * x[c];
    x[i] /= lu[i * n + i];
  }
  return x;
}

}  // namespace

OperatorValue finite_diff_gradient(const SaddleProblem& problem, const JointPoint& z, double h) {
  problem.check_dims(z);
  const Index m = problem.dim_x();
  const Index n = problem.dim_y();
  Vector x = z.x();
  Vector y = z.y();
  Vector gx(m), neg_gy(n);
  for (Index i = 0; i < m; ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = problem.value(x, y);
    x[i] = keep - h;
    const double down = problem.value(x, y);
    x[i] = keep;
    gx[i] = (up - down) / (2.0 * h);
  }
  for (Index j = 0; j < n; ++j) {
    const double keep = y[j];
    y[j] = keep + h;
    const double up = problem.value(x, y);
    y[j] = keep - h;
    const double down = problem.value(x, y);
    y[j] = keep;
    neg_gy[j] = -(up - down) / (2.0 * h);
  }
  return OperatorValue(gx, neg_gy);
}

double max_gradient_relative_error(const SaddleProblem& problem, int points, std::uint64_t seed,
                                   double radius, double h) {
  const auto z_star = problem.saddle_point();
  const Index m = problem.dim_x();
  const Vector center = z_star ? z_star->stacked() : Vector::Zero(m + problem.dim_y());
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const JointPoint z = JointPoint::from_stacked(center + rng.in_ball(center.size(), radius), m);
    const Vector analytic = operator_f(problem, z).stacked();
    const Vector numeric = finite_diff_gradient(problem, z, h).stacked();
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    worst = std::max(worst, (numeric - analytic).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

double grid_inner_opt(const SaddleProblem& problem, Block free_block, const VectorRef& fixed,
                      const VectorRef& center, double radius, int points_per_dim) {
  const Index dim = free_block == Block::x ? problem.dim_x() : problem.dim_y();
  const Index fixed_dim = free_block == Block::x ? problem.dim_y() : problem.dim_x();
  if (dim > 4) throw ConfigError("grid oracle supports at most 4 free coordinates");
  if (center.size() != dim || fixed.size() != fixed_dim) {
    throw DimensionError("grid oracle: dimension mismatch");
  }
  if (points_per_dim < 2 || !(radius >= 0.0)) throw ConfigError("grid oracle: bad grid");

  const double step = 2.0 * radius / static_cast<double>(points_per_dim - 1);
  const double r2 = radius * radius * (1.0 + 1e-12);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Vector point(dim);
  const Vector fixed_copy = fixed;
  const bool maximize = free_block == Block::y;
  double best = maximize ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  while (true) {
    double dist2 = 0.0;
    for (Index d = 0; d < dim; ++d) {
      const double offset = -radius + step * idx[static_cast<std::size_t>(d)];
      point[d] = center[d] + offset;
      dist2 += offset * offset;
    }
    if (dist2 <= r2) {
      const double v = free_block == Block::x ? problem.value(point, fixed_copy)
                                              : problem.value(fixed_copy, point);
      best = maximize ? std::max(best, v) : std::min(best, v);
    }
    Index d = 0;
    for (; d < dim; ++d) {
      if (++idx[static_cast<std::size_t>(d)] < points_per_dim) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
    if (d == dim) break;
  }
  return best;
}

ReplayTrajectory recurrence_replay(ReplaySolver solver, const SaddleProblem& problem,
                                   const JointPoint& z0, std::int64_t iterations, double eta) {
  problem.check_dims(z0);
  if (iterations < 1) throw ConfigError("replay: N must be at least 1");
  if (!(eta > 0.0)) throw ConfigError("replay: eta must be positive");
  const std::size_t size = static_cast<std::size_t>(z0.size());

  std::vector<Raw> history;  // z_0, z_1, ...
  std::vector<Raw> operators;  // F(z_0), F(z_1), ... (evaluated lazily for explicit schemes)
  history.emplace_back(z0.stacked().data(), z0.stacked().data() + size);

  ReplayTrajectory out;

  std::vector<double> lu;
  std::vector<std::size_t> perm;
  Raw q;
  if (solver == ReplaySolver::pp) {
    const AffineOperator* op = problem.affine_operator();
    if (op == nullptr) throw ConfigError("replay: proximal point needs an affine operator");
    lu.assign(size * size, 0.0);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        lu[r * size + c] = (r == c ? 1.0 : 0.0) + eta * op->matrix(static_cast<Index>(r), static_cast<Index>(c));
      }
    }
    lu_factor(lu, perm, size);
    q.assign(op->offset.data(), op->offset.data() + size);
  }

  for (std::int64_t k = 0; k < iterations; ++k) {
    const Raw& z = history.back();
    Raw next(size);
    switch (solver) {
      case ReplaySolver::gda: {
        const Raw f = operator_raw(problem, z);
        for (std::size_t i = 0; i < size; ++i) next[i] = z[i] - eta * f[i];
        break;
      }
      case ReplaySolver::ogda: {
        operators.push_back(operator_raw(problem, z));
        const Raw& f = operators.back();
        const Raw& f_prev = operators.size() >= 2 ? operators[operators.size() - 2] : f;
        for (std::size_t i = 0; i < size; ++i) next[i] = z[i] - (2.0 * eta) * f[i] + eta * f_prev[i];
        break;
      }
      case ReplaySolver::eg: {
        const Raw f = operator_raw(problem, z);
        Raw mid(size);
        for (std::size_t i = 0; i < size; ++i) mid[i] = z[i] - eta * f[i];
        const Raw f_mid = operator_raw(problem, mid);
        for (std::size_t i = 0; i < size; ++i) next[i] = z[i] - eta * f_mid[i];
        out.midpoints.push_back(std::move(mid));
        break;
      }
      case ReplaySolver::pp: {
        Raw rhs(size);
        for (std::size_t i = 0; i < size; ++i) rhs[i] = z[i] - eta * q[i];
        next = lu_solve(lu, perm, rhs);
        break;
      }
    }
    for (double v : next) {
      if (!std::isfinite(v)) throw NumericalError("replay: non-finite iterate at step " + std::to_string(k));
    }
    history.push_back(next);
    out.iterates.push_back(std::move(next));
  }
  return out;
}

}  // namespace saddle::oracles
