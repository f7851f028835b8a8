#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qhw/lyapunov.hpp"
#include "qhw/rng.hpp"
#include "qhw/stats.hpp"

using namespace qhw;

namespace {

/// One-dimensional sample dressed as an EmpiricalDist (z = -x^- keeps the
/// manifold exact so sqrt g marginals stay evaluable).
EmpiricalDist dist_1d(const std::vector<double>& xs, int n = 0) {
  EmpiricalDist d;
  d.n = n;
  const double w = 1.0 / xs.size();
  for (double x : xs) {
    d.x.push_back(x);
    d.z.push_back(Vec::Constant(1, -std::max(-x, 0.0)));
    d.w.push_back(w);
  }
  return d;
}

LyapunovFn scalar_fn() {
  LyapunovFn fn;
  fn.beta = 0.5;
  fn.alpha = 1.0;
  fn.mu = 1.0;
  fn.gamma = Vec::Ones(1);
  fn.Q = Mat::Ones(1, 1);
  fn.kappa = 2.0;
  fn.b = 1.0;
  return fn;
}

std::vector<double> normal_sample(int m, double mean, double sd,
                                  std::uint64_t seed) {
  RngStream rng(seed, 3);
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) out[i] = mean + sd * rng.normal();
  return out;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("ks distance: identical, disjoint, and shifted uniforms") {
  std::vector<double> a(1000), b(1000);
  for (int i = 0; i < 1000; ++i) {
    a[i] = (i + 0.5) / 1000.0;
    b[i] = a[i] + 0.5;
  }
  const auto da = dist_1d(a), db = dist_1d(b);
  CHECK(ks_1d(da, da, marginal_x()) == 0.0);
  CHECK(ks_1d(da, db, marginal_x()) == doctest::Approx(0.5).epsilon(2e-3));
  std::vector<double> c(1000);
  for (int i = 0; i < 1000; ++i) c[i] = a[i] + 10.0;
  CHECK(ks_1d(da, dist_1d(c), marginal_x()) == doctest::Approx(1.0));
}

TEST_CASE("ks distance against a density table obeys dkw at fixed seed") {
  const int m = 10000;
  const auto xs = normal_sample(m, 0.0, 1.0, 99);
  DensityTable table;
  const int grid = 4001;
  table.xs = Vec(grid);
  table.pdf = Vec(grid);
  for (int i = 0; i < grid; ++i) {
    const double x = -8.0 + 16.0 * i / (grid - 1.0);
    table.xs[i] = x;
    table.pdf[i] = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979);
  }
  table.cdf = Vec(grid);
  table.cdf[0] = 0.0;
  for (int i = 1; i < grid; ++i)
    table.cdf[i] = table.cdf[i - 1] + 0.5 * (table.pdf[i] + table.pdf[i - 1]) *
                                          (table.xs[i] - table.xs[i - 1]);
  table.cdf /= table.cdf[grid - 1];
  const double ks = ks_1d(dist_1d(xs), table, marginal_x());
  CHECK(ks < 0.03);
  CHECK(ks > 0.0);
}

TEST_CASE("wasserstein distance of a translation is the shift") {
  const auto xs = normal_sample(2000, 0.0, 1.0, 7);
  auto ys = xs;
  for (double& v : ys) v += 0.75;
  CHECK(wasserstein1_1d(dist_1d(xs), dist_1d(ys), marginal_x()) ==
        doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("triangle inequality holds for ks on the x marginal") {
  const auto a = dist_1d(normal_sample(500, 0.0, 1.0, 1));
  const auto b = dist_1d(normal_sample(500, 0.4, 1.3, 2));
  const auto c = dist_1d(normal_sample(500, -0.2, 0.8, 3));
  const double ab = ks_1d(a, b, marginal_x());
  const double bc = ks_1d(b, c, marginal_x());
  const double ac = ks_1d(a, c, marginal_x());
  CHECK(ac <= ab + bc + 1e-12);
}

TEST_CASE("tail masses decrease in s and live in the unit interval") {
  const auto fn = scalar_fn();
  const auto d = dist_1d(normal_sample(4000, -0.5, 1.0, 11));
  double prev = 1.0;
  for (double s : {0.2, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double t = tail_mass(d, fn, s);
    CHECK(t >= 0.0);
    CHECK(t <= prev + 1e-12);
    prev = t;
  }
}

TEST_CASE("batch-means errors shrink like the square root of the span") {
  RngStream rng(2222, 5);
  std::vector<double> series(40000);
  double prev = 0.0;
  for (auto& v : series) {
    prev = 0.3 * prev + rng.normal();
    v = prev;
  }
  const std::vector<double> quarter(series.begin(), series.begin() + 10000);
  const double se_full = batch_means_se(series);
  const double se_quarter = batch_means_se(quarter);
  const double ratio = se_full / se_quarter;
  CHECK(ratio > 0.3);
  CHECK(ratio < 0.7);
}

TEST_CASE("lag-one autocorrelation identifies ar(1) memory") {
  RngStream rng(31, 8);
  std::vector<double> iid(20000), ar(20000);
  double prev = 0.0;
  for (int i = 0; i < 20000; ++i) {
    iid[i] = rng.normal();
    prev = 0.9 * prev + rng.normal();
    ar[i] = prev;
  }
  CHECK(std::abs(lag1_autocorr(iid)) < 0.05);
  CHECK(lag1_autocorr(ar) == doctest::Approx(0.9).epsilon(0.05));
  CHECK(effective_sample_size(10000, 0.0) == doctest::Approx(10000.0));
  CHECK(effective_sample_size(10000, 0.9) <
        effective_sample_size(10000, 0.5));
  CHECK(effective_sample_size(10, 0.9999) >= 1.0);
}

TEST_CASE("interchange report flags a converging sweep as monotone") {
  const auto fn = scalar_fn();
  auto diffusion = dist_1d(normal_sample(8000, -0.5, 1.0, 21), 0);
  std::vector<EmpiricalDist> by_n;
  int idx = 0;
  for (int n : {10, 50, 200}) {
    auto d = dist_1d(normal_sample(4000, -0.5 + 3.0 / std::sqrt(1.0 * n), 1.0,
                                   50 + idx++),
                     n);
    by_n.push_back(d);
  }
  const std::vector<double> s_grid = {0.5, 1.0, 2.0, 6.0};
  const auto rep = interchange_report(by_n, diffusion, fn, s_grid);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].n == 10);
  CHECK(rep.rows[2].ks_x < rep.rows[0].ks_x);
  CHECK(rep.distances_monotone);
  CHECK(rep.tails_bounded);
  for (const auto& row : rep.rows) {
    CHECK(row.ks_noise > 0.0);
    CHECK(row.tail.size() == s_grid.size());
  }
}

TEST_CASE("interchange report rejects short sweeps and duplicate n") {
  const auto fn = scalar_fn();
  auto diffusion = dist_1d(normal_sample(1000, 0.0, 1.0, 31), 0);
  std::vector<EmpiricalDist> two = {dist_1d(normal_sample(100, 0, 1, 32), 10),
                                    dist_1d(normal_sample(100, 0, 1, 33), 50)};
  CHECK_THROWS_AS(interchange_report(two, diffusion, fn, {1.0}),
                  std::invalid_argument);
  std::vector<EmpiricalDist> dup = {dist_1d(normal_sample(100, 0, 1, 34), 50),
                                    dist_1d(normal_sample(100, 0, 1, 35), 10),
                                    dist_1d(normal_sample(100, 0, 1, 36), 50)};
  CHECK_THROWS_AS(interchange_report(dup, diffusion, fn, {1.0}),
                  std::invalid_argument);
  // Rows come back sorted by n even when the input is shuffled.
  std::vector<EmpiricalDist> shuffled = {
      dist_1d(normal_sample(200, 0, 1, 37), 50),
      dist_1d(normal_sample(200, 0, 1, 38), 10),
      dist_1d(normal_sample(200, 0, 1, 39), 200)};
  const auto rep = interchange_report(shuffled, diffusion, fn, {1.0, 8.0});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].n == 10);
  CHECK(rep.rows[1].n == 50);
  CHECK(rep.rows[2].n == 200);
}

TEST_CASE("weighted inputs are validated") {
  EmpiricalDist bad;
  bad.x = {1.0};
  bad.z = {Vec::Zero(1)};
  bad.w = {-1.0};
  const auto good = dist_1d({0.0, 1.0});
  CHECK_THROWS_AS(ks_1d(bad, good, marginal_x()), std::invalid_argument);
  EmpiricalDist empty;
  CHECK_THROWS_AS(ks_1d(empty, good, marginal_x()), std::invalid_argument);
}

}  // TEST_SUITE
