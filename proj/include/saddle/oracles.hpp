#pragma once

// Brute-force references for the solvers and the analysis layer. Nothing here
// calls into solvers.hpp; only the SaddleProblem interface is shared.

#include <cstdint>
#include <vector>

#include "saddle/core.hpp"

namespace saddle::oracles {

/// Central differences of f per coordinate, with the y block negated to match F.
OperatorValue finite_diff_gradient(const SaddleProblem& problem, const JointPoint& z,
                                   double h = 1e-5);

/// Max over `points` random points in the ball of `radius` around z* of
/// ||F_fd - F||_inf / max(1, ||F||_inf), comparing the analytic operator with
/// central differences.
double max_gradient_relative_error(const SaddleProblem& problem, int points, std::uint64_t seed,
                                   double radius = 5.0, double h = 1e-5);

enum class Block { x, y };

/// Exhaustive search over a regular grid on the bounding box of the ball
/// ||free - center|| <= radius, skipping points outside the ball. Returns
/// max_y f(fixed, y) when the free block is y, min_x f(x, fixed) when it is x.
/// The free block may have at most four coordinates.
double grid_inner_opt(const SaddleProblem& problem, Block free_block, const VectorRef& fixed,
                      const VectorRef& center, double radius, int points_per_dim);

struct ReplayTrajectory {
  std::vector<std::vector<double>> iterates;   // z_1 .. z_N
  std::vector<std::vector<double>> midpoints;  // z_{1/2} .. z_{N-1/2} (EG only)
};

enum class ReplaySolver { gda, ogda, eg, pp };

/// Naive re-implementation of the four recurrences with full history storage.
/// PP requires an affine operator and solves (I + eta M) z = z_k - eta q with
/// its own Gaussian elimination.
ReplayTrajectory recurrence_replay(ReplaySolver solver, const SaddleProblem& problem,
                                   const JointPoint& z0, std::int64_t iterations, double eta);

}  // namespace saddle::oracles
