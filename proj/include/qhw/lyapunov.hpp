/// @file lyapunov.hpp
/// @brief The quadratic-in-state Lyapunov function g on the manifold
/// S = {e'z + x⁻ = 0}: for slack β ≥ 0, g = (x+β)² + κ(z+βγ)'Q(z+βγ); for
/// β < 0, g = (αx+μβ)² + κ(z+βγ)'Q(z+βγ). Provides its derivative along the
/// fluid vector field and sampling-based Lipschitz diagnostics.
#pragma once

#include <cstdint>

#include "qhw/cqlf.hpp"
#include "qhw/linalg.hpp"

namespace qhw {

struct LyapunovFn {
  double beta = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
  Vec gamma;
  Mat Q;
  double kappa = 1.0;
  double b = 1.0;  ///< Qγ = b·e
};

/// Absolute tolerance for membership in {e'z + x⁻ = 0}.
inline constexpr double kManifoldTol = 1e-9;

bool on_manifold(double x, const Vec& z, double tol = kManifoldTol);

/// g(x, z). Throws std::domain_error off the manifold.
double g_value(const LyapunovFn& fn, double x, const Vec& z);

double sqrt_g(const LyapunovFn& fn, double x, const Vec& z);

/// Analytic d/dt of g along the fluid field: on x ≥ 0 the dynamics are
/// ẋ = −μβ − αx − e'Rz, ż = −(I−pe')Rz; on x < 0 they are ẋ = −μβ − e'Rz,
/// ż = −μβp − Rz. R and p must come from the same service law as fn.
double fluid_drift_g(const LyapunovFn& fn, const Mat& R, const Vec& p,
                     double x, const Vec& z);

/// Projects a free draw (x, w) onto the manifold:
/// z = w − ((e'w + x⁻)/K)·e. Returns z.
Vec project_to_manifold(double x, const Vec& w);

/// Max of |√g(a) − √g(b)| / |a − b| (Euclidean) over `pairs` random on-manifold
/// pairs drawn with the given seed.
double lipschitz_estimate(const LyapunovFn& fn, int pairs, std::uint64_t seed);

}  // namespace qhw
