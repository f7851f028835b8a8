/// @file phasetype.hpp
/// @brief Phase-type service distributions: parameters (p, nu, P), the derived
/// matrix R = (I−P')diag(nu), overall rate mu with 1/mu = e'R⁻¹p, and the busy
/// phase mix gamma = mu·R⁻¹p; plus absorption-time sampling.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qhw/linalg.hpp"
#include "qhw/rng.hpp"

namespace qhw {

struct PhaseTypeParams {
  int K = 0;  ///< number of transient phases
  Vec p;      ///< initial-phase probabilities, length K
  Vec nu;     ///< phase completion rates, length K
  Mat P;      ///< sub-stochastic routing matrix, zero diagonal
};

struct DerivedServiceData {
  Mat R;      ///< (I−P')diag(nu)
  double mu;  ///< service rate: 1/mu = e'R⁻¹p
  Vec gamma;  ///< mu·R⁻¹p, sums to 1
};

struct ValidationResult {
  bool ok = true;
  std::string message;  ///< first violated invariant, empty when ok
};

/// Checks every PhaseTypeParams invariant, reporting the first violation.
ValidationResult validate(const PhaseTypeParams& params);

/// Computes R, mu, gamma. Throws std::invalid_argument on invalid params.
/// Warns on std::cerr when cond(I−P) exceeds 1e12.
DerivedServiceData derive(const PhaseTypeParams& params);

struct ServiceSample {
  double total = 0.0;                              ///< absorption time
  std::vector<std::pair<int, double>> sojourns;    ///< (phase, duration) visits
};

/// Samples one absorption time of the transient chain: initial phase from p,
/// per-phase Exp(nu_k) sojourns, routing by inverse-CDF over the P row with the
/// leftover mass meaning absorption.
ServiceSample sample_service(const PhaseTypeParams& params, RngStream& rng);

/// Convenience factories used throughout tests and configs.
PhaseTypeParams make_exponential_service(double rate);
PhaseTypeParams make_erlang2_service(double rate_per_stage);
PhaseTypeParams make_hyperexp_service(double q, double rate1, double rate2);

}  // namespace qhw
