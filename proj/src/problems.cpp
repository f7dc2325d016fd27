#include "saddle/problems.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "saddle/random.hpp"

namespace saddle {

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::uint64_t kPowerIterationSeed = 0x5eed'1234'abcdULL;

Vector gram_free_product(const Matrix& a, const Vector& v) { return a.transpose() * (a * v); }

void check_symmetric_psd(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw ConfigError(std::string(name) + " must be square");
  if (m.size() == 0) return;
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError(std::string(name) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw ConfigError(std::string(name) + " must be positive semidefinite (f convex-concave)");
  }
}

Matrix orthogonal(Rng& rng, Index n) {
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(n, n));
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

void check_bounds(const SpectrumBounds& s, const char* name) {
  if (!(s.lo >= 0.0)) throw ConfigError(std::string(name) + " spectrum lower bound must be nonnegative");
  if (!(s.hi >= s.lo) || !std::isfinite(s.hi)) {
    throw ConfigError(std::string(name) + " spectrum bounds must satisfy lo <= hi < inf");
  }
}

Matrix symmetric_with_spectrum(Rng& rng, Index n, const SpectrumBounds& s) {
  const Matrix r = orthogonal(rng, n);
  Vector lambda(n);
  for (Index i = 0; i < n; ++i) lambda[i] = rng.uniform(s.lo, s.hi);
  Matrix m = r.transpose() * lambda.asDiagonal() * r;
  return 0.5 * (m + m.transpose());
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& j, const char* name) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw ConfigError(std::string("matrix ") + name + ": data length does not match rows*cols");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[static_cast<std::size_t>(i * cols + j2)].get<double>();
  }
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

SpectralEstimate spectral_norm(const Matrix& a, const PowerIterationOptions& options) {
  SpectralEstimate out;
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) return out;

  Rng rng(kPowerIterationSeed);
  Vector v = rng.normal_vector(a.cols());
  v.normalize();

  double lambda = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Vector w = gram_free_product(a, v);
    const double next = v.dot(w);  // Rayleigh quotient of a'a
    const double norm = w.norm();
    out.iterations = it;
    if (norm == 0.0) return out;
    v = w / norm;
    if (it > 1 && std::abs(next - lambda) <= options.relative_tolerance * std::abs(next)) {
      out.value = std::sqrt(std::max(next, 0.0));
      return out;
    }
    lambda = next;
  }
  throw ConvergenceError("power iteration did not converge in " +
                             std::to_string(options.max_iterations) + " iterations",
                         std::sqrt(std::max(lambda, 0.0)));
}

namespace {

// Power iteration first; a tight cluster at the top of the spectrum can stall
// it inside the iteration budget, and then the dense SVD settles the value.
double block_norm(const Matrix& m) {
  try {
    return spectral_norm(m).value;
  } catch (const ConvergenceError&) {
    return m.jacobiSvd().singularValues()(0);
  }
}

}  // namespace

LipschitzProfile lipschitz_profile(const Matrix& p, const Matrix& q, const Matrix& a) {
  const Index m = a.rows();
  const Index n = a.cols();
  Matrix op(m + n, m + n);
  op.topLeftCorner(m, m) = p;
  op.topRightCorner(m, n) = a;
  op.bottomLeftCorner(n, m) = -a.transpose();
  op.bottomRightCorner(n, n) = q;

  const double l_pp = block_norm(p);
  const double l_qq = block_norm(q);
  const double l_a = block_norm(a);
  // The joint operator is not normal, and its top singular values cluster
  // often enough to stall power iteration; it is small and dense, so take the
  // SVD instead.
  const double l_op = op.jacobiSvd().singularValues()(0);
  const double k = kLipschitzInflation;
  return LipschitzProfile::from_blocks(k * l_pp, k * l_a, k * l_a, k * l_qq, k * l_op, l_op);
}

JointPoint solve_saddle_point(const Matrix& p, const Matrix& q, const Matrix& a,
                              const Vector& b, const Vector& c) {
  const Index m = a.rows();
  const Index n = a.cols();
  Matrix op(m + n, m + n);
  op.topLeftCorner(m, m) = p;
  op.topRightCorner(m, n) = a;
  op.bottomLeftCorner(n, m) = -a.transpose();
  op.bottomRightCorner(n, n) = q;
  Vector rhs(m + n);
  rhs.head(m) = -b;
  rhs.tail(n) = c;

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(op);
  Vector z = cod.solve(rhs);
  if (!all_finite(z)) throw Error("no finite saddle point (non-finite solve)");
  const double residual = (op * z - rhs).norm();
  if (residual > 1e-10 * (1.0 + z.norm())) {
    throw Error("no finite saddle point: stationarity system is inconsistent (residual " +
                std::to_string(residual) + ")");
  }
  return JointPoint::from_stacked(std::move(z), m);
}

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::bilinear ? "bilinear" : "quadratic";
}

QuadraticSaddleProblem::QuadraticSaddleProblem(Matrix p, Matrix q, Matrix a, Vector b, Vector c,
                                               std::optional<std::uint64_t> seed)
    : p_(std::move(p)), q_(std::move(q)), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)),
      seed_(seed) {
  const Index m = a_.rows();
  const Index n = a_.cols();
  if (m < 1 || n < 1) throw ConfigError("problem dimensions must be positive");
  if (p_.rows() != m || q_.rows() != n || b_.size() != m || c_.size() != n) {
    throw DimensionError("P, Q, b, c dimensions inconsistent with A");
  }
  for (const Matrix* mat : {&p_, &q_, &a_}) {
    if (!mat->allFinite()) throw NumericalError("problem matrices must be finite");
  }
  if (!b_.allFinite() || !c_.allFinite()) throw NumericalError("problem vectors must be finite");
  check_symmetric_psd(p_, "P");
  check_symmetric_psd(q_, "Q");

  affine_.matrix.resize(m + n, m + n);
  affine_.matrix.topLeftCorner(m, m) = p_;
  affine_.matrix.topRightCorner(m, n) = a_;
  affine_.matrix.bottomLeftCorner(n, m) = -a_.transpose();
  affine_.matrix.bottomRightCorner(n, n) = q_;
  affine_.offset.resize(m + n);
  affine_.offset.head(m) = b_;
  affine_.offset.tail(n) = -c_;

  profile_ = lipschitz_profile(p_, q_, a_);
  if (profile_.l_max == 0.0) {
    throw ConfigError("degenerate problem: Lipschitz constant is zero (constant gradient)");
  }
  saddle_ = solve_saddle_point(p_, q_, a_, b_, c_);
}

QuadraticSaddleProblem QuadraticSaddleProblem::bilinear(Matrix a) {
  const Index m = a.rows();
  const Index n = a.cols();
  return QuadraticSaddleProblem(Matrix::Zero(m, m), Matrix::Zero(n, n), std::move(a),
                                Vector::Zero(m), Vector::Zero(n));
}

ProblemKind QuadraticSaddleProblem::kind() const {
  const bool flat = (p_.array() == 0.0).all() && (q_.array() == 0.0).all() &&
                    (b_.array() == 0.0).all() && (c_.array() == 0.0).all();
  return flat ? ProblemKind::bilinear : ProblemKind::quadratic;
}

double QuadraticSaddleProblem::value(const VectorRef& x, const VectorRef& y) const {
  if (x.size() != dim_x() || y.size() != dim_y()) throw DimensionError("f: dimension mismatch");
  return 0.5 * x.dot(p_ * x) + x.dot(a_ * y) - 0.5 * y.dot(q_ * y) + b_.dot(x) + c_.dot(y);
}

Vector QuadraticSaddleProblem::grad_x(const VectorRef& x, const VectorRef& y) const {
  if (x.size() != dim_x() || y.size() != dim_y()) throw DimensionError("grad_x: dimension mismatch");
  return p_ * x + a_ * y + b_;
}

Vector QuadraticSaddleProblem::grad_y(const VectorRef& x, const VectorRef& y) const {
  if (x.size() != dim_x() || y.size() != dim_y()) throw DimensionError("grad_y: dimension mismatch");
  return a_.transpose() * x - q_ * y + c_;
}

QuadraticSaddleProblem generate(const ProblemSpec& spec) {
  if (spec.dim_x < 1 || spec.dim_y < 1) throw ConfigError("problem dimensions must be positive");
  check_bounds(spec.a_spectrum, "A");
  const Index m = spec.dim_x;
  const Index n = spec.dim_y;
  Rng rng(spec.seed);

  Matrix p = Matrix::Zero(m, m);
  Matrix q = Matrix::Zero(n, n);
  if (spec.kind == ProblemKind::quadratic) {
    check_bounds(spec.p_spectrum, "P");
    check_bounds(spec.q_spectrum, "Q");
    p = symmetric_with_spectrum(rng, m, spec.p_spectrum);
    q = symmetric_with_spectrum(rng, n, spec.q_spectrum);
  }

  const Matrix u = orthogonal(rng, m);
  const Matrix v = orthogonal(rng, n);
  const Index r = std::min(m, n);
  Matrix s = Matrix::Zero(m, n);
  for (Index i = 0; i < r; ++i) s(i, i) = rng.uniform(spec.a_spectrum.lo, spec.a_spectrum.hi);
  Matrix a = u * s * v.transpose();

  Vector b = Vector::Zero(m);
  Vector c = Vector::Zero(n);
  if (spec.kind == ProblemKind::quadratic) {
    b = spec.linear_scale * rng.normal_vector(m);
    c = spec.linear_scale * rng.normal_vector(n);
  }
  return QuadraticSaddleProblem(std::move(p), std::move(q), std::move(a), std::move(b),
                                std::move(c), spec.seed);
}

std::string problem_to_json(const QuadraticSaddleProblem& problem) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = to_string(problem.kind());
  j["dim_x"] = problem.dim_x();
  j["dim_y"] = problem.dim_y();
  j["seed"] = problem.seed() ? nlohmann::json(*problem.seed()) : nlohmann::json(nullptr);
  j["P"] = matrix_to_json(problem.p());
  j["Q"] = matrix_to_json(problem.q());
  j["A"] = matrix_to_json(problem.a());
  j["b"] = vector_to_json(problem.b());
  j["c"] = vector_to_json(problem.c());
  return j.dump(2);
}

QuadraticSaddleProblem problem_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("problem JSON: ") + e.what());
  }
  try {
    if (j.value("schema_version", 0) != kSchemaVersion) {
      throw ConfigError("problem JSON: unsupported schema_version");
    }
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && !j["seed"].is_null()) seed = j["seed"].get<std::uint64_t>();
    QuadraticSaddleProblem problem(matrix_from_json(j.at("P"), "P"), matrix_from_json(j.at("Q"), "Q"),
                                   matrix_from_json(j.at("A"), "A"), vector_from_json(j.at("b")),
                                   vector_from_json(j.at("c")), seed);
    if (j.contains("dim_x") && j["dim_x"].get<Index>() != problem.dim_x()) {
      throw ConfigError("problem JSON: dim_x disagrees with A");
    }
    if (j.contains("dim_y") && j["dim_y"].get<Index>() != problem.dim_y()) {
      throw ConfigError("problem JSON: dim_y disagrees with A");
    }
    return problem;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("problem JSON: ") + e.what());
  }
}

}  // namespace saddle
