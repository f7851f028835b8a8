/// @file diffusion.hpp
/// @brief The limiting piecewise Ornstein–Uhlenbeck process: Brownian inputs
/// with covariance assembled from the component decomposition of the n-th
/// system, pushed through Ψ. Includes the K=1 stationary-density quadrature
/// oracle and stationary estimation mirroring the simulator's.
#pragma once

#include <cstdint>

#include "qhw/des.hpp"
#include "qhw/phasetype.hpp"
#include "qhw/psi.hpp"
#include "qhw/stats.hpp"

namespace qhw {

struct DiffusionCoeffs {
  double var_u = 0.0;  ///< variance rate of the u-input
  Mat cov_v;           ///< variance rate of the v-input; e lies in its null space
  Vec cross;           ///< cross-covariance rate between u- and v-inputs
  /// Assembled (K+1)×(K+1) covariance [[var_u, cross'], [cross, cov_v]].
  Mat assembled() const;
};

/// Assembles the limit covariance from the component rates: centered arrivals
/// contribute c_u²μ to var_u; completions and routing contribute through
/// Σ_M = Σ_k ν_kγ_k(diag p^k − p^k p^k') + (I−P')diag(νγ)(I−P) with p^k the
/// k-th row of P; initial-phase draws contribute μ(diag p − pp') to cov_v; the
/// abandonment term vanishes at criticality. Throws std::runtime_error if the
/// assembled matrix is not PSD within 1e−10.
DiffusionCoeffs derive_covariance(const PhaseTypeParams& params, double cu2,
                                  double alpha);

/// Empirical counterpart: increment covariance per unit time of the extracted
/// (U, V) over disjoint windows of length `window` after `burn_in`, from one
/// simulated run.
Mat empirical_increment_covariance(const SystemConfig& config, double t_end,
                                   double window, double burn_in, double dt,
                                   std::uint64_t seed);

/// Trust rule for the cross term: when the derived and empirical (assembled)
/// cross-covariances disagree by more than 15% of their scale, the empirical
/// estimate replaces the derived one, a warning is logged, and `warned` is
/// set. The var_u and cov_v blocks are always kept from the derivation.
DiffusionCoeffs reconcile_cross(const DiffusionCoeffs& derived,
                                const Mat& empirical, bool& warned);

/// Simulates the piecewise-OU process on a uniform grid: u(t) = x₀ − μβt +
/// Brownian(var_u), v(t) = (I−pe')z₀ + Brownian(cov_v) with the given cross
/// term, then (x, z) = Ψ(u, v). The v-increment is re-projected onto {e'v = 0}
/// each step (the exact law lives there; Cholesky jitter would otherwise leak).
StatePath simulate_pou(double x0, const Vec& z0, const DiffusionCoeffs& coeffs,
                       double beta, double mu, double alpha, const Mat& R,
                       const Vec& p, const Grid& grid, std::uint64_t seed);

/// Stationary density of the K=1 piecewise-OU: ∝ exp(2∫₀ˣ drift/var_u) with
/// drift(s) = −μβ − αs⁺ + μs⁻, normalized by quadrature on a grid covering all
/// but 1e−10 of the mass.
DensityTable pou_1d_density_oracle(double beta, double alpha, double mu,
                                   double var_u, int grid_points = 20001);

/// Stationary estimation over a long streamed piecewise-OU run; spacing and
/// burn-in semantics and the lag-1 auto-extension mirror estimate_stationary.
EmpiricalDist estimate_stationary_pou(const DiffusionCoeffs& coeffs, double beta,
                                      double mu, double alpha, const Mat& R,
                                      const Vec& p, double dt,
                                      const StationaryOptions& opt,
                                      std::uint64_t seed);

}  // namespace qhw
