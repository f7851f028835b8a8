/// @file linalg.hpp
/// @brief Small dense linear-algebra helpers shared across the library.
///
/// Eigen supplies storage and factorizations; the symmetric eigensolver used for
/// certificates is a self-contained cyclic Jacobi routine (see cqlf.hpp) so that
/// certified eigenvalues never depend on the same code path twice.
#pragma once

#include <Eigen/Dense>

namespace qhw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// All-ones vector of length k.
inline Vec ones(int k) { return Vec::Ones(k); }

/// Symmetric part (A + A')/2.
inline Mat sym_part(const Mat& a) { return 0.5 * (a + a.transpose()); }

/// Max absolute entry, 0 for empty.
inline double max_abs(const Mat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

/// Spectral radius of a general square matrix (Eigen complex eigensolver).
double spectral_radius(const Mat& a);

/// Unique symmetric solution of the continuous Lyapunov equation Q A + A' Q = C
/// (A must have eigenvalues with positive real part). Solved densely via the
/// Kronecker-vectorized linear system; intended for tiny matrices only.
Mat lyapunov_solve(const Mat& a, const Mat& c);

/// 2-norm condition number via SVD.
double condition_number(const Mat& a);

}  // namespace qhw
