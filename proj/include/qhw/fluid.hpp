/// @file fluid.hpp
/// @brief Fluid model: drift-only inputs u(t) = x₀ − μβt, v ≡ (I−pe')z₀ pushed
/// through Ψ, or equivalently the switched linear ODE
///   x ≥ 0:  ẋ = −μβ − αx − e'Rz,  ż = −(I−pe')Rz        (e'z = 0 conserved)
///   x < 0:  ẋ = −μβ − e'Rz,       ż = −μβp − Rz          (e'z = x conserved)
/// integrated by RK4 with bisection localization of the switching surface.
/// Includes the drift checks: g monotone along trajectories, the geometric
/// decay band of d(ln g)/dt far from the origin, and the one-step contraction
/// inequality √g(t₀) ≤ (1−ε)√g(0) + C.
#pragma once

#include <cstdint>
#include <vector>

#include "qhw/lyapunov.hpp"
#include "qhw/psi.hpp"
#include "qhw/rng.hpp"

namespace qhw {

struct FluidTrajectory {
  StatePath path;
  Vec g;  ///< g at each grid point
};

enum class FluidMethod { via_psi, direct_ode };

/// Inputs of the fluid model; throws std::domain_error off-manifold.
InputPath fluid_inputs(double x0, const Vec& z0, double beta, double mu,
                       const Vec& p, const Grid& grid);

/// Integrates the fluid model from (x0, z0) and records g along the way.
/// direct_ode throws std::runtime_error after 10⁴ switching events.
FluidTrajectory integrate_fluid(double x0, const Vec& z0, const Grid& grid,
                                FluidMethod method, const LyapunovFn& fn,
                                const Mat& R, const Vec& p);

/// Draws a random on-manifold state of the given Euclidean radius.
void random_manifold_state(int K, double radius, RngStream& rng, double& x_out,
                           Vec& z_out);

struct GMonotoneReport {
  int trajectories = 0;
  int violations = 0;       ///< steps with g(t_{i+1}) > g(t_i) + 1e−6·(1+g(t_i))
  double max_violation = 0; ///< worst g-increase beyond the tolerance
};

/// Runs `instances` random trajectories (log-uniform radius in [1e−2, 1e2])
/// and counts g-monotonicity violations.
GMonotoneReport check_g_monotone(const LyapunovFn& fn, const Mat& R, const Vec& p,
                                 int instances, double t_end, std::uint64_t seed);

struct GeometricBandReport {
  double c_hat = 0.0;   ///< inf of −d(ln g)/dt over far-field segments
  double C_hat = 0.0;   ///< sup of −d(ln g)/dt over far-field segments
  double M_used = 0.0;  ///< norm threshold defining "far field"
};

/// Empirical decay band of ln g over segments with |(x,z)| ≥ M_used,
/// M_used = 10·(1+|β|)·(1+λmax(Q)/λmin(Q)), across `instances` starts of the
/// given radius.
GeometricBandReport check_geometric_band(const LyapunovFn& fn, const Mat& R,
                                         const Vec& p, int instances,
                                         double radius, double t_end,
                                         std::uint64_t seed);

struct DriftInequalityReport {
  double C_hat = 0.0;    ///< offset fitted on small-radius starts (√g ≤ 100)
  double eps_hat = 0.0;  ///< largest grid ε validated on all starts
  bool feasible = false;
  double max_sqrt_g0 = 0.0;  ///< largest √g(0) exercised
};

/// Contraction inequality √g(t₀) − √g(0) ≤ C − ε√g(0): C(ε) is the worst
/// deficit over small-radius starts, then validated against every start with
/// √g(0) up to 10⁶; eps_hat is the largest ε in {0.01..0.99} that validates.
DriftInequalityReport check_fluid_drift_inequality(const LyapunovFn& fn,
                                                   const Mat& R, const Vec& p,
                                                   double t0, int instances,
                                                   std::uint64_t seed);

}  // namespace qhw
