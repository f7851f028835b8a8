#include "qhw/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qhw {

double spectral_radius(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat lyapunov_solve(const Mat& a, const Mat& c) {
  const int k = static_cast<int>(a.rows());
  // vec(Q A) = (A' ⊗ I) vec(Q), vec(A' Q) = (I ⊗ A') vec(Q).
  Mat big = Mat::Zero(k * k, k * k);
  const Mat id = Mat::Identity(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int r = 0; r < k; ++r)
        for (int s = 0; s < k; ++s) {
          big(i + k * j, r + k * s) =
              a(s, j) * id(i, r) + id(s, j) * a(r, i);
        }
  Eigen::Map<const Vec> rhs(c.data(), k * k);
  Vec q = big.partialPivLu().solve(rhs);
  Mat out = Eigen::Map<const Mat>(q.data(), k, k);
  return sym_part(out);
}

double condition_number(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 0.0)
    return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

}  // namespace qhw
