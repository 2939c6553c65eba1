#pragma once

#include <Eigen/Dense>
#include <utility>

#include "samo/error.hpp"

namespace samo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kZeroNormFloor = 1e-30;

/// v / ||v|| together with ||v||. Throws ZeroNorm when ||v|| < 1e-30.
template <typename Derived>
std::pair<Vec, double> l2_normalize(const Eigen::MatrixBase<Derived>& v) {
  const double norm = v.norm();
  if (norm < kZeroNormFloor) throw ZeroNorm("l2_normalize: zero-norm input");
  return {v / norm, norm};
}

/// Unit direction only.
template <typename Derived>
Vec l2_unit(const Eigen::MatrixBase<Derived>& v) {
  return l2_normalize(v).first;
}

/// Pullback of an upstream gradient g through v -> v/||v||:
///   (g - (x_hat . g) x_hat) / ||v||   with x_hat = v/||v||.
template <typename DerivedV, typename DerivedG>
Vec l2_normalize_backward(const Eigen::MatrixBase<DerivedV>& v,
                          const Eigen::MatrixBase<DerivedG>& upstream) {
  const double norm = v.norm();
  if (norm < kZeroNormFloor) throw ZeroNorm("l2_normalize_backward: zero-norm input");
  const Vec unit = v / norm;
  return (upstream - unit.dot(upstream) * unit) / norm;
}

/// Projects the rows of `points` onto their top-2 principal components after
/// mean centering. Component signs are fixed so that each component's
/// largest-magnitude loading is positive. Throws DegenerateData when all
/// points coincide (or fewer than 2 points / dimensions are given).
Mat pca_project_2d(const Mat& points);

}  // namespace samo
