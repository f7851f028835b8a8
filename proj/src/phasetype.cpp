#include "qhw/phasetype.hpp"

#include <cmath>
#include <iostream>

namespace qhw {

ValidationResult validate(const PhaseTypeParams& params) {
  const int K = params.K;
  if (K <= 0) return {false, "K must be positive"};
  if (params.p.size() != K || params.nu.size() != K ||
      params.P.rows() != K || params.P.cols() != K)
    return {false, "dimension mismatch"};
  if ((params.p.array() < 0.0).any())
    return {false, "initial-phase probabilities must be nonnegative"};
  if (std::abs(params.p.sum() - 1.0) > 1e-12)
    return {false, "initial-phase probabilities must sum to 1"};
  if ((params.nu.array() <= 0.0).any())
    return {false, "phase rates must be positive"};
  for (int i = 0; i < K; ++i) {
    if (params.P(i, i) != 0.0) return {false, "routing diagonal must be zero"};
    if ((params.P.row(i).array() < 0.0).any())
      return {false, "routing entries must be nonnegative"};
    if (params.P.row(i).sum() > 1.0 + 1e-12)
      return {false, "sub-stochasticity violated"};
  }
  if (spectral_radius(params.P) >= 1.0 - 1e-10)
    return {false, "I-P singular"};
  return {};
}

DerivedServiceData derive(const PhaseTypeParams& params) {
  const ValidationResult v = validate(params);
  if (!v.ok) throw std::invalid_argument("invalid phase-type parameters: " + v.message);
  const int K = params.K;
  const Mat imp = Mat::Identity(K, K) - params.P;
  if (condition_number(imp) > 1e12)
    std::cerr << "warning: I-P is ill conditioned (cond > 1e12)\n";
  DerivedServiceData d;
  d.R = imp.transpose() * params.nu.asDiagonal();
  const Vec rinv_p = d.R.partialPivLu().solve(params.p);
  const double mean = rinv_p.sum();  // e'R⁻¹p
  d.mu = 1.0 / mean;
  d.gamma = d.mu * rinv_p;
  return d;
}

ServiceSample sample_service(const PhaseTypeParams& params, RngStream& rng) {
  ServiceSample s;
  int phase = rng.pick(params.p);
  if (phase >= params.K) phase = params.K - 1;  // guard: p sums to 1
  while (true) {
    const double stay = rng.expo(params.nu[phase]);
    s.total += stay;
    s.sojourns.emplace_back(phase, stay);
    const int next = rng.pick(params.P.row(phase));
    if (next >= params.K) break;  // leftover row mass: absorption
    phase = next;
  }
  return s;
}

PhaseTypeParams make_exponential_service(double rate) {
  PhaseTypeParams p;
  p.K = 1;
  p.p = Vec::Ones(1);
  p.nu = Vec::Constant(1, rate);
  p.P = Mat::Zero(1, 1);
  return p;
}

PhaseTypeParams make_erlang2_service(double rate_per_stage) {
  PhaseTypeParams p;
  p.K = 2;
  p.p = Vec::Zero(2);
  p.p[0] = 1.0;
  p.nu = Vec::Constant(2, rate_per_stage);
  p.P = Mat::Zero(2, 2);
  p.P(0, 1) = 1.0;
  return p;
}

PhaseTypeParams make_hyperexp_service(double q, double rate1, double rate2) {
  PhaseTypeParams p;
  p.K = 2;
  p.p = Vec::Zero(2);
  p.p[0] = q;
  p.p[1] = 1.0 - q;
  p.nu = Vec::Zero(2);
  p.nu[0] = rate1;
  p.nu[1] = rate2;
  p.P = Mat::Zero(2, 2);
  return p;
}

}  // namespace qhw
