#include "samo/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace samo {

Mat pca_project_2d(const Mat& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (n < 2 || dim < 2) throw DegenerateData("pca_project_2d: need >= 2 points of dimension >= 2");

  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Mat centered = points.rowwise() - mean;
  if (centered.lpNorm<Eigen::Infinity>() == 0.0)
    throw DegenerateData("pca_project_2d: all points identical");

  const Mat cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
  if (solver.info() != Eigen::Success)
    throw DegenerateData("pca_project_2d: eigendecomposition failed");

  // Eigenvalues come out ascending; the last two columns are the leading pair.
  Mat components(dim, 2);
  components.col(0) = solver.eigenvectors().col(dim - 1);
  components.col(1) = solver.eigenvectors().col(dim - 2);

  for (int c = 0; c < 2; ++c) {
    Eigen::Index argmax = 0;
    components.col(c).cwiseAbs().maxCoeff(&argmax);
    if (components(argmax, c) < 0.0) components.col(c) = -components.col(c);
  }

  return centered * components;
}

}  // namespace samo
