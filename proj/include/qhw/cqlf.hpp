/// @file cqlf.hpp
/// @brief Common quadratic Lyapunov matrix for the two service matrices R and
/// (I−pe')R: feasibility solver on the affine slice {Qγ = e}, the scale κ used
/// by the Lyapunov function, the restricted z-band constants, and a
/// self-contained symmetric eigensolver for certificates.
#pragma once

#include <cstdint>
#include <optional>

#include "qhw/linalg.hpp"

namespace qhw {

/// Eigenvalue certificates recomputed from scratch for a returned Q/κ.
struct CqlfCertificates {
  double lmin_q = 0.0;        ///< λmin(Q)
  double lmin_qr = 0.0;       ///< λmin(QR + R'Q)
  double lmin_m3 = 0.0;       ///< λmin(Q(I−pe')R + R'(I−ep')Q)
  double lmin_cond_i = 0.0;   ///< λmin(ee'R + R'ee' + κ(QR+R'Q))
  double lmin_cond_ii = 0.0;  ///< λmin(−2α(α∨μ)|e'R|·I + κ(QR+R'Q))
  double band_margin = 0.0;   ///< κ·c_B/2 − |e'R|²·max(1/(α∧μ), α)
};

struct Cqlf {
  Mat Q;
  double b = 1.0;      ///< Qγ = b·e; b = γ'Qγ = 1 on the slice {Qγ = e}
  double kappa = 0.0;  ///< 0 until select_kappa has run
  CqlfCertificates cert;
};

/// Ascending eigenvalues and orthonormal eigenvectors (columns) of a symmetric
/// matrix, by cyclic Jacobi rotations. Independent of Eigen's eigensolvers on
/// purpose: certificates produced here are cross-checked against a random
/// Rayleigh-quotient sweep, not against another run of the same algorithm.
/// Throws std::invalid_argument if M is not symmetric within 1e−10 (relative).
struct SymEig {
  Vec values;
  Mat vectors;
};
SymEig sym_eig(const Mat& m);

/// λmin via sym_eig.
double lambda_min_sym(const Mat& m);

/// Dual-route check: min/max Rayleigh quotient v'Mv over `count` random unit
/// vectors. Any certified λmin must lower-bound the sweep's minimum.
std::pair<double, double> rayleigh_sweep(const Mat& m, int count, std::uint64_t seed);

/// Feasibility solver for Q: positive definite, QR + R'Q positive definite,
/// Q(I−pe')R + R'(I−ep')Q positive semidefinite, Qγ = e. Polyak subgradient
/// steps on a hinge penalty over the slice {Qγ = e}, warm-started from the
/// continuous Lyapunov solution of QR + R'Q = I, with seeded random restarts.
/// Returns nullopt when no certificate is found within the restart budget.
std::optional<Cqlf> solve_q(const Mat& R, const Vec& p, const Vec& gamma,
                            double tol = 1e-8, std::uint64_t seed = 1);

/// Restricted-form extrema of h'[Q(I−pe')R + R'(I−ep')Q]h over {e'h=0, |h|=1},
/// via sym_eig of the form pulled back to an orthonormal basis of e⊥.
/// K=1: the hyperplane is empty; returns (+inf, +inf) and callers treat the
/// band as vacuous.
std::pair<double, double> check_z_band(const Mat& Q, const Mat& R, const Vec& p);

/// Smallest κ in {1, 2, 4, ...} such that
///   (i)  ee'R + R'ee' + κ(QR + R'Q) is positive definite,
///   (ii) −2α(α∨μ)|e'R|·I + κ(QR + R'Q) is positive definite,
///   (iii) κ·c_B/2 ≥ |e'R|²·max(1/(α∧μ), α), with c_B from check_z_band
///        (vacuous when K=1).
/// Throws std::runtime_error when κ would exceed 2^60.
double select_kappa(const Mat& Q, const Mat& R, const Vec& p, double alpha, double mu);

/// Recomputes all certificates for (Q, κ) from scratch.
CqlfCertificates certify(const Mat& Q, double kappa, const Mat& R, const Vec& p,
                         double alpha, double mu);

}  // namespace qhw
