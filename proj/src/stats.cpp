#include "qhw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qhw {

namespace {

/// (value, weight) pairs of a marginal, sorted by value, weights renormalized.
std::vector<std::pair<double, double>> marginal_points(const EmpiricalDist& d,
                                                       const MarginalFn& f) {
  if (d.size() == 0) throw std::invalid_argument("empty empirical dist");
  std::vector<std::pair<double, double>> pts(d.size());
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = d.w.empty() ? 1.0 : d.w[i];
    pts[i] = {f(d.x[i], d.z[i]), w};
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("nonpositive total weight");
  for (auto& p : pts) p.second /= total;
  std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace

double DensityTable::cdf_at(double x) const {
  if (xs.size() == 0 || cdf.size() != xs.size())
    throw std::invalid_argument("malformed density table");
  if (x <= xs[0]) return cdf[0];
  const int m = static_cast<int>(xs.size());
  if (x >= xs[m - 1]) return cdf[m - 1];
  // uniform grid: direct index
  const double h = (xs[m - 1] - xs[0]) / (m - 1);
  int i = static_cast<int>((x - xs[0]) / h);
  i = std::min(std::max(i, 0), m - 2);
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return cdf[i] + t * (cdf[i + 1] - cdf[i]);
}

MarginalFn marginal_x() {
  return [](double x, const Vec&) { return x; };
}

MarginalFn marginal_sqrt_g(const LyapunovFn& fn) {
  return [fn](double x, const Vec& z) { return sqrt_g(fn, x, z); };
}

double ks_1d(const EmpiricalDist& d1, const EmpiricalDist& d2,
             const MarginalFn& f) {
  const auto p1 = marginal_points(d1, f);
  const auto p2 = marginal_points(d2, f);
  // Both CDFs are right-continuous step functions; the sup of |F1 - F2| is
  // attained just after a jump, i.e. once all ties at a value are consumed.
  double f1 = 0.0, f2 = 0.0, best = 0.0;
  std::size_t i = 0, j = 0;
  while (i < p1.size() || j < p2.size()) {
    double v;
    if (j >= p2.size() || (i < p1.size() && p1[i].first <= p2[j].first))
      v = p1[i].first;
    else
      v = p2[j].first;
    while (i < p1.size() && p1[i].first == v) f1 += p1[i++].second;
    while (j < p2.size() && p2[j].first == v) f2 += p2[j++].second;
    best = std::max(best, std::abs(f1 - f2));
  }
  return std::min(best, 1.0);
}

double ks_1d(const EmpiricalDist& d, const DensityTable& table,
             const MarginalFn& f) {
  const auto pts = marginal_points(d, f);
  double cum = 0.0, best = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    const double v = pts[i].first;
    const double before = cum;
    while (i < pts.size() && pts[i].first == v) cum += pts[i++].second;
    const double F = table.cdf_at(v);
    best = std::max(best, std::max(std::abs(before - F), std::abs(cum - F)));
  }
  return std::min(best, 1.0);
}

double wasserstein1_1d(const EmpiricalDist& d1, const EmpiricalDist& d2,
                       const MarginalFn& f) {
  const auto p1 = marginal_points(d1, f);
  const auto p2 = marginal_points(d2, f);
  // W1 = ∫ |F1 - F2| dt: both CDFs are constant between merged breakpoints.
  double f1 = 0.0, f2 = 0.0, w1 = 0.0;
  std::size_t i = 0, j = 0;
  double prev = std::min(p1[0].first, p2[0].first);
  while (i < p1.size() || j < p2.size()) {
    double v;
    if (j >= p2.size() || (i < p1.size() && p1[i].first <= p2[j].first))
      v = p1[i].first;
    else
      v = p2[j].first;
    w1 += std::abs(f1 - f2) * (v - prev);
    while (i < p1.size() && p1[i].first == v) f1 += p1[i++].second;
    while (j < p2.size() && p2[j].first == v) f2 += p2[j++].second;
    prev = v;
  }
  return w1;
}

double tail_mass(const EmpiricalDist& d, const LyapunovFn& fn, double s) {
  if (s <= 0.0) throw std::invalid_argument("tail_mass: s must be positive");
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = d.w.empty() ? 1.0 : d.w[i];
    total += w;
    if (sqrt_g(fn, d.x[i], d.z[i]) > s) tail += w;
  }
  return total > 0.0 ? tail / total : 0.0;
}

double batch_means_se(const std::vector<double>& series, int batches) {
  if (batches < 2) throw std::invalid_argument("batch_means_se: batches < 2");
  const std::size_t m = series.size();
  const std::size_t b = m / batches;
  if (b == 0)
    throw std::invalid_argument("batch_means_se: series shorter than batches");
  double grand = 0.0;
  std::vector<double> means(batches);
  for (int j = 0; j < batches; ++j) {
    double s = 0.0;
    for (std::size_t i = j * b; i < (j + 1) * b; ++i) s += series[i];
    means[j] = s / b;
    grand += means[j];
  }
  grand /= batches;
  double var = 0.0;
  for (int j = 0; j < batches; ++j)
    var += (means[j] - grand) * (means[j] - grand);
  var /= (batches - 1);
  return std::sqrt(var / batches);
}

double lag1_autocorr(const std::vector<double>& series) {
  const std::size_t m = series.size();
  if (m < 3) return 0.0;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / m;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double c = series[i] - mean;
    den += c * c;
    if (i + 1 < m) num += c * (series[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

double effective_sample_size(std::size_t m, double lag1) {
  const double rho = std::min(std::max(lag1, -0.999), 0.999);
  return std::max(1.0, m * (1.0 - rho) / (1.0 + rho));
}

InterchangeReport interchange_report(const std::vector<EmpiricalDist>& by_n,
                                     const EmpiricalDist& diffusion,
                                     const LyapunovFn& fn,
                                     const std::vector<double>& s_grid) {
  if (by_n.size() < 3)
    throw std::invalid_argument("interchange_report: need at least 3 system sizes");
  if (diffusion.size() == 0)
    throw std::invalid_argument("interchange_report: empty diffusion sample");
  const Eigen::Index K = diffusion.z[0].size();
  for (const auto& d : by_n) {
    if (d.size() == 0)
      throw std::invalid_argument("interchange_report: empty sample");
    if (d.z[0].size() != K)
      throw std::invalid_argument("interchange_report: phase-count mismatch");
  }

  std::vector<std::size_t> order(by_n.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return by_n[a].n < by_n[b].n;
  });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (by_n[order[i - 1]].n == by_n[order[i]].n)
      throw std::invalid_argument("interchange_report: duplicate n");

  const MarginalFn mx = marginal_x();
  const MarginalFn mg = marginal_sqrt_g(fn);
  const double noise_ref =
      0.5 / std::sqrt(effective_sample_size(diffusion.size(), diffusion.lag1));

  InterchangeReport rep;
  rep.s_grid = s_grid;
  rep.diffusion_tail.reserve(s_grid.size());
  for (double s : s_grid) rep.diffusion_tail.push_back(tail_mass(diffusion, fn, s));

  for (std::size_t idx : order) {
    const auto& d = by_n[idx];
    InterchangeRow row;
    row.n = d.n;
    row.ks_x = ks_1d(d, diffusion, mx);
    row.w1_x = wasserstein1_1d(d, diffusion, mx);
    row.ks_g = ks_1d(d, diffusion, mg);
    row.w1_g = wasserstein1_1d(d, diffusion, mg);
    row.ks_noise =
        0.5 / std::sqrt(effective_sample_size(d.size(), d.lag1)) + noise_ref;
    row.tail.reserve(s_grid.size());
    for (double s : s_grid) row.tail.push_back(tail_mass(d, fn, s));
    rep.rows.push_back(std::move(row));
  }

  std::ostringstream detail;

  // Scale proxy for W1 noise: the spread of the reference marginal. A KS-type
  // deviation of size eps moves W1 by at most eps times the support spread,
  // and typically by about eps times the standard deviation.
  auto marginal_sd = [&](const MarginalFn& f) {
    double m1 = 0.0, m2 = 0.0, tw = 0.0;
    for (std::size_t i = 0; i < diffusion.size(); ++i) {
      const double w = diffusion.w.empty() ? 1.0 : diffusion.w[i];
      const double v = f(diffusion.x[i], diffusion.z[i]);
      m1 += w * v;
      m2 += w * v * v;
      tw += w;
    }
    m1 /= tw;
    m2 /= tw;
    return std::sqrt(std::max(m2 - m1 * m1, 0.0));
  };
  const double sd_x = marginal_sd(mx);
  const double sd_g = marginal_sd(mg);

  rep.distances_monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    const double slack = 2.0 * (a.ks_noise + b.ks_noise);
    struct Col { const char* name; double va, vb, sl; };
    const Col cols[] = {
        {"ks_x", a.ks_x, b.ks_x, slack},
        {"ks_g", a.ks_g, b.ks_g, slack},
        {"w1_x", a.w1_x, b.w1_x, slack * sd_x},
        {"w1_g", a.w1_g, b.w1_g, slack * sd_g},
    };
    for (const auto& c : cols) {
      if (c.vb > c.va + c.sl) {
        rep.distances_monotone = false;
        detail << c.name << " increased n=" << a.n << "->" << b.n << " by "
               << (c.vb - c.va) << " > slack " << c.sl << "; ";
      }
    }
  }

  // Tail bound at the smallest s where the diffusion tail is at most 1%.
  std::size_t js = s_grid.size();
  for (std::size_t j = 0; j < s_grid.size(); ++j)
    if (rep.diffusion_tail[j] <= 0.01) {
      js = j;
      break;
    }
  if (js == s_grid.size()) {
    rep.tails_bounded = false;
    detail << "no s in grid reaches diffusion tail <= 0.01; ";
  } else {
    rep.tails_bounded = true;
    for (const auto& row : rep.rows)
      if (!(row.tail[js] < rep.tail_bound)) {
        rep.tails_bounded = false;
        detail << "tail at n=" << row.n << ", s=" << s_grid[js] << " is "
               << row.tail[js] << " >= " << rep.tail_bound << "; ";
      }
  }

  rep.detail = detail.str();
  return rep;
}

}  // namespace qhw
