/// @file psi.hpp
/// @brief The input-to-state map Ψ: given paths (u, v) with e'v ≡ 0, produce
/// the unique (x, z) solving
///   x(t) = u(t) − α∫₀ᵗ x(s)⁺ ds − e'R ∫₀ᵗ z(s) ds,
///   z(t) = v(t) − p·x(t)⁻ − (I−pe')R ∫₀ᵗ z(s) ds.
/// Discretization: explicit marching — each x(t_i) uses trapezoid integrals
/// over [0, t_{i−1}] plus the left-endpoint contribution of the last step,
/// then z(t_i) follows explicitly from x(t_i)⁻. The residual measures the
/// defect of the fully trapezoid-discretized equations.
#pragma once

#include <cstdint>

#include "qhw/linalg.hpp"

namespace qhw {

struct Grid {
  double t_end = 0.0;
  double dt = 0.0;
  /// Number of steps; grid points are t_i = i·dt for i = 0..steps().
  int steps() const;
};

/// Input paths sampled on a grid: u[i] scalar, v.row(i) the K-vector v(t_i).
struct InputPath {
  Vec u;
  Mat v;
};

/// State paths on the same grid layout.
struct StatePath {
  Vec x;
  Mat z;
};

/// Marching evaluation of Ψ. Throws std::invalid_argument when the input grid
/// is inconsistent or e'v exceeds 1e−9.
StatePath psi(const InputPath& in, double alpha, const Mat& R, const Vec& p,
              const Grid& grid);

/// Streaming one-step evaluator with O(K) memory; consumes (u_i, v_i) in grid
/// order and yields (x_i, z_i). psi() is this stepper run over a whole path.
class PsiStepper {
 public:
  PsiStepper(double alpha, const Mat& R, const Vec& p, double dt);

  /// Advances one grid point; the first call is t = 0 (integrals empty).
  void step(double u, const Vec& v, double& x_out, Vec& z_out);

  void reset();

 private:
  double alpha_;
  Mat R_;
  Vec p_;
  Vec etR_;       // R'e
  Mat proj_R_;    // (I−pe')R
  double dt_;
  bool first_ = true;
  double acc_xplus_ = 0.0;  // trapezoid accumulator for ∫x⁺
  Vec acc_z_;               // trapezoid accumulator for ∫z
  double prev_x_ = 0.0;
  Vec prev_z_;
};

/// Sup over grid points of the worst defect of the two trapezoid-discretized
/// equations for a candidate (x, z).
double residual(const StatePath& out, const InputPath& in, double alpha,
                const Mat& R, const Vec& p, const Grid& grid);

/// Sup-norm of Ψ(b·y) − b·Ψ(y) over the grid.
double check_homogeneity(const InputPath& in, double scale_b, double alpha,
                         const Mat& R, const Vec& p, const Grid& grid);

/// ‖Ψ(y¹) − Ψ(y²)‖_T / ‖y¹ − y²‖_T with ‖·‖_T the sup over the grid of the
/// max-abs coordinate; 0 when the inputs coincide.
double check_lipschitz(const InputPath& in1, const InputPath& in2, double alpha,
                       const Mat& R, const Vec& p, const Grid& grid);

/// Uniqueness surrogate: solves the same trapezoid-discretized equations by
/// damped fixed-point sweeps over the whole path instead of marching.
StatePath psi_fixed_point(const InputPath& in, double alpha, const Mat& R,
                          const Vec& p, const Grid& grid, int max_sweeps = 200,
                          double tol = 1e-12);

/// Sup over the grid of max(|x_i|, |z_i|∞) resp. max(|u_i|, |v_i|∞).
double path_magnitude(const StatePath& path);
double path_magnitude(const InputPath& path);

}  // namespace qhw
