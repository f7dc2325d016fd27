#pragma once

#include "saddle/problems.hpp"

namespace saddle::testing {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows.begin()->size());
  Matrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline JointPoint point(std::initializer_list<double> x, std::initializer_list<double> y) {
  return JointPoint(vec(x), vec(y));
}

// f(x, y) = x y
inline QuadraticSaddleProblem bilinear_1d() { return QuadraticSaddleProblem::bilinear(mat({{1}})); }

}  // namespace saddle::testing
