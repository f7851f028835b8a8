/// @file harris.hpp
/// @brief Interarrival distributions (hazard, mean residual life, survival
/// integrals) and the regeneration-structure machinery: the age-and-count
/// Lyapunov function f(a, q, z) = 2F(a)(1+m(a)) + q + Σz, the pathwise
/// generator upper bound, and the petite-set constants (C1, C2, H).
#pragma once

#include <cstdint>
#include <string>

#include "qhw/linalg.hpp"
#include "qhw/rng.hpp"

namespace qhw {

enum class Family { exponential, erlang, hyperexp, lognormal, deterministic };

/// One interarrival law with closed-form F, density, hazard and survival
/// integral per family. mean_residual_life() deliberately integrates the
/// survival function numerically (adaptive Simpson) so the closed-form
/// survival_integral() stays an independent oracle for it.
class InterarrivalDist {
 public:
  static InterarrivalDist exponential(double rate);
  static InterarrivalDist erlang(int m, double rate);          ///< sum of m Exp(rate)
  static InterarrivalDist hyperexp(double q, double r1, double r2);
  static InterarrivalDist lognormal_mean1(double sigma);       ///< mean forced to 1
  static InterarrivalDist deterministic(double value);

  Family family() const { return family_; }
  std::string name() const;

  double cdf(double x) const;
  double pdf(double x) const;
  double hazard(double x) const;               ///< pdf/(1−F)
  double survival_integral(double x) const;    ///< ∫ₓ^∞ (1−F), closed form
  double mean_residual_life(double x) const;   ///< quadrature of 1−F over [x, cap]
  double mean() const;
  double cu2() const;                          ///< squared coefficient of variation
  bool unbounded_support() const;
  /// Smallest x with 1−F(x) < eps (∞-capped search; well below overflow).
  double support_cap(double eps = 1e-12) const;

  double sample(RngStream& rng) const;

 private:
  Family family_ = Family::exponential;
  double a_ = 1.0, b_ = 0.0, c_ = 0.0;  ///< family-specific parameters
  int m_ = 1;                           ///< Erlang stage count
};

/// (h(x), m(x)) with m by quadrature. Throws std::domain_error when the
/// survival underflows (1−F < 1e−300).
std::pair<double, double> hazard_mrl(const InterarrivalDist& dist, double x);

/// f(a, q, z) = 2F(a)(1 + m(a)) + q + Σ_k z_k.
double f_lyap(const InterarrivalDist& dist, double a, double q, const Vec& z);

/// The generator upper bound
///   2(1+h(a))·[1 − 2F(a) + ∫ₐ^∞(1−F)] + h(a) − (αq + Σ ν_k)
/// where the rate sum runs over all k when q > 0 and over {k : z_k > 0} when
/// q = 0.
double generator_upper_bound(const InterarrivalDist& dist, double alpha,
                             const Vec& nu, double a, double q, const Vec& z);

/// The age-only part: bracket(a) = 1 − 2F(a) + ∫ₐ^∞(1−F). Tends to −1.
double harris_bracket(const InterarrivalDist& dist, double a);

struct PetiteSetConstants {
  double C1 = 0.0;  ///< age threshold: bracket ≤ −1/2 beyond C1
  double C2 = 0.0;  ///< queue threshold (H+1)/α
  double H = 0.0;   ///< sup over [0, C1] of 2(1+h)·bracket + h
  std::string set_description;
};

/// Finds (C1, C2, H) for the set B = [0,C1]×[0,C2]×{Σz ≤ n}: C1 by bisection
/// on the strictly decreasing bracket (verified on a tail grid to 10·C1), H by
/// coarse grid plus golden-section refinement, C2 = (H+1)/α.
/// Throws std::runtime_error when the family has bounded support or the
/// bracket never reaches −1/2 on the search range.
PetiteSetConstants petite_set_constants(const InterarrivalDist& dist,
                                        double alpha, const Vec& nu, int n);

struct PetiteGridCheck {
  int points = 0;           ///< grid points outside B that were evaluated
  double worst_bound = 0.0; ///< max of generator_upper_bound over those points
  bool ok = false;          ///< worst_bound ≤ −1
};

/// Re-verifies the drift bound ≤ −1 on an (a, q) grid outside B (the set
/// {Σz ≤ n} never binds: server phase counts cannot exceed n). q = 0 rows use
/// the empty-system rate sum, the worst case of the q = 0 variant.
PetiteGridCheck petite_grid_check(const InterarrivalDist& dist, double alpha,
                                  const Vec& nu, const PetiteSetConstants& c,
                                  int na = 100, int nq = 100);

}  // namespace qhw
