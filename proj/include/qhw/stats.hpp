/// @file stats.hpp
/// @brief Empirical-distribution machinery: weighted sample clouds on the
/// manifold, KS and 1-D Wasserstein distances, tail-mass diagnostics through
/// the Lyapunov function, batch-means errors, and the limit-interchange report.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qhw/linalg.hpp"
#include "qhw/lyapunov.hpp"

namespace qhw {

/// Weighted samples (x, z) with per-run metadata.
struct EmpiricalDist {
  std::vector<double> x;
  std::vector<Vec> z;
  std::vector<double> w;  ///< positive, sums to 1
  std::vector<double> a;  ///< optional interarrival ages (empty if unused)

  int n = 0;  ///< system size the samples came from (0 for the diffusion)
  std::uint64_t seed = 0;
  double burn_in = 0.0;
  double spacing = 0.0;
  double se_xplus = 0.0;   ///< batch-means SE of E[x⁺]
  double se_xminus = 0.0;  ///< batch-means SE of E[x⁻]
  double lag1 = 0.0;       ///< lag-1 autocorrelation of the x series
  int extensions = 0;      ///< auto-extension rounds applied
  bool extension_warning = false;

  std::size_t size() const { return x.size(); }
};

/// 1-D stationary density table on a uniform grid with its CDF (trapezoid).
struct DensityTable {
  Vec xs;
  Vec pdf;
  Vec cdf;
  double cdf_at(double x) const;  ///< piecewise-linear interpolation
};

/// Scalar functional of a sample used to pick a marginal.
using MarginalFn = std::function<double(double x, const Vec& z)>;

MarginalFn marginal_x();
MarginalFn marginal_sqrt_g(const LyapunovFn& fn);

/// Two-sample weighted KS distance of a marginal.
double ks_1d(const EmpiricalDist& d1, const EmpiricalDist& d2, const MarginalFn& f);

/// KS distance of a marginal against a density table's CDF, accounting for
/// sample atoms (max of the defect on both sides of each atom).
double ks_1d(const EmpiricalDist& d, const DensityTable& table, const MarginalFn& f);

/// 1-D Wasserstein-1 distance of a marginal: ∫|F1 − F2| dx over the merged
/// supports (quantile coupling for step CDFs).
double wasserstein1_1d(const EmpiricalDist& d1, const EmpiricalDist& d2,
                       const MarginalFn& f);

/// Weighted fraction of samples with √g > s.
double tail_mass(const EmpiricalDist& d, const LyapunovFn& fn, double s);

/// Batch-means standard error of the mean of a series (fixed batch count).
double batch_means_se(const std::vector<double>& series, int batches = 32);

double lag1_autocorr(const std::vector<double>& series);

/// Effective sample size m(1−ρ₁)/(1+ρ₁) from the lag-1 autocorrelation.
double effective_sample_size(std::size_t m, double lag1);

struct InterchangeRow {
  int n = 0;
  double ks_x = 0.0;
  double w1_x = 0.0;
  double ks_g = 0.0;
  double w1_g = 0.0;
  double ks_noise = 0.0;          ///< 0.5/√m_eff, combined with the reference
  std::vector<double> tail;       ///< tail_mass at each s in s_grid
};

struct InterchangeReport {
  std::vector<InterchangeRow> rows;  ///< one per n, ascending
  std::vector<double> s_grid;
  std::vector<double> diffusion_tail;
  bool distances_monotone = false;   ///< non-increasing within 2·combined noise
  bool tails_bounded = false;        ///< every tail ≤ bound at the 1% diffusion s
  double tail_bound = 0.05;
  std::string detail;
};

/// Distances of each finite-n estimate to the diffusion estimate (x-marginal
/// and √g-pushforward), tail curves, and the monotone-within-noise and
/// bounded-tails verdicts. Throws std::invalid_argument with fewer than 3 n's.
InterchangeReport interchange_report(const std::vector<EmpiricalDist>& by_n,
                                     const EmpiricalDist& diffusion,
                                     const LyapunovFn& fn,
                                     const std::vector<double>& s_grid);

}  // namespace qhw
