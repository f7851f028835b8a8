#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "qhw/harris.hpp"
#include "qhw/rng.hpp"

using namespace qhw;

TEST_SUITE("harris") {

TEST_CASE("exponential bracket in closed form: 3 e^{-a} - 1") {
  const auto d = InterarrivalDist::exponential(1.0);
  for (double a : {0.0, 0.3, 1.0, 2.5}) {
    CHECK(harris_bracket(d, a) ==
          doctest::Approx(3.0 * std::exp(-a) - 1.0).epsilon(1e-10));
  }
}

TEST_CASE("exponential petite constants: C1 = ln 6, H = 9, C2 = (H+1)/alpha") {
  const auto d = InterarrivalDist::exponential(1.0);
  const Vec nu = Vec::Ones(1);
  const auto c = petite_set_constants(d, 0.5, nu, 100);
  CHECK(std::abs(c.C1 - std::log(6.0)) < 1e-8);
  CHECK(c.H == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(c.C2 == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("survival integral agrees with the quadrature route") {
  const auto dists = {InterarrivalDist::exponential(1.0),
                      InterarrivalDist::erlang(2, 2.0),
                      InterarrivalDist::hyperexp(0.4, 0.8, 1.2),
                      InterarrivalDist::lognormal_mean1(1.0)};
  for (const auto& d : dists) {
    for (double x : {0.0, 0.2, 1.0, 3.0}) {
      const double surv = 1.0 - d.cdf(x);
      if (surv < 1e-12) continue;
      const auto [h, mrl] = hazard_mrl(d, x);
      // Erlang and lognormal have vanishing density (hence hazard) at 0.
      if (x > 0.0)
        CHECK(h > 0.0);
      else
        CHECK(h >= 0.0);
      // mrl * survival = closed-form integral of the survival function.
      CHECK(mrl * surv ==
            doctest::Approx(d.survival_integral(x)).epsilon(1e-7));
    }
  }
}

TEST_CASE("families have mean one and the declared variability") {
  CHECK(InterarrivalDist::exponential(1.0).mean() == doctest::Approx(1.0));
  CHECK(InterarrivalDist::erlang(2, 2.0).mean() == doctest::Approx(1.0));
  CHECK(InterarrivalDist::hyperexp(0.4, 0.8, 1.2).mean() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(InterarrivalDist::lognormal_mean1(1.0).mean() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(InterarrivalDist::exponential(1.0).cu2() == doctest::Approx(1.0));
  CHECK(InterarrivalDist::erlang(2, 2.0).cu2() == doctest::Approx(0.5));
  CHECK(InterarrivalDist::hyperexp(0.4, 0.8, 1.2).cu2() > 1.0);
  CHECK(InterarrivalDist::lognormal_mean1(1.0).cu2() ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));
  CHECK(InterarrivalDist::deterministic(1.0).cu2() == doctest::Approx(0.0));
}

TEST_CASE("cdf and pdf are consistent by central differences") {
  const auto dists = {InterarrivalDist::erlang(2, 2.0),
                      InterarrivalDist::hyperexp(0.4, 0.8, 1.2),
                      InterarrivalDist::lognormal_mean1(0.7)};
  const double h = 1e-6;
  for (const auto& d : dists) {
    for (double x : {0.3, 0.9, 1.8}) {
      const double fd = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h);
      CHECK(d.pdf(x) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("sampling matches the mean for every family") {
  const auto dists = {InterarrivalDist::exponential(1.0),
                      InterarrivalDist::erlang(2, 2.0),
                      InterarrivalDist::hyperexp(0.4, 0.8, 1.2),
                      InterarrivalDist::lognormal_mean1(1.0),
                      InterarrivalDist::deterministic(1.0)};
  RngStream rng(2023, 14);
  for (const auto& d : dists) {
    const int m = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < m; ++i) {
      const double s = d.sample(rng);
      CHECK(s >= 0.0);
      sum += s;
      sumsq += s * s;
    }
    const double mean = sum / m;
    const double var = std::max(sumsq / m - mean * mean, 0.0);
    const double se = std::sqrt(var / m) + 1e-12;
    CHECK(std::abs(mean - 1.0) < 5.0 * se);
  }
}

TEST_CASE("grid check passes for the unbounded families") {
  const Vec nu = Vec::Ones(1);
  const auto dists = {InterarrivalDist::exponential(1.0),
                      InterarrivalDist::erlang(2, 2.0),
                      InterarrivalDist::hyperexp(0.4, 0.8, 1.2),
                      InterarrivalDist::lognormal_mean1(1.0)};
  for (const auto& d : dists) {
    const auto c = petite_set_constants(d, 0.5, nu, 50);
    CHECK(std::isfinite(c.C1));
    CHECK(std::isfinite(c.C2));
    CHECK(std::isfinite(c.H));
    CHECK(c.C1 > 0.0);
    CHECK(c.C2 > 0.0);
    const auto grid = petite_grid_check(d, 0.5, nu, c, 40, 40);
    CHECK(grid.ok);
    CHECK(grid.points > 1000);
    CHECK(grid.worst_bound <= -1.0 + 1e-9);
  }
}

TEST_CASE("bounded support is rejected") {
  const auto d = InterarrivalDist::deterministic(1.0);
  const Vec nu = Vec::Ones(1);
  CHECK_FALSE(d.unbounded_support());
  CHECK_THROWS_AS(petite_set_constants(d, 0.5, nu, 50), std::runtime_error);
}

TEST_CASE("lyapunov-side helpers respect their domains") {
  const auto d = InterarrivalDist::exponential(1.0);
  Vec z(2);
  z << 1.0, -0.5;
  CHECK_THROWS_AS(f_lyap(d, 0.5, 2.0, z), std::domain_error);
  z << 1.0, 0.5;
  const double v = f_lyap(d, 0.5, 2.0, z);
  CHECK(v > 0.0);
  // Far out the drift bound goes below -1 for the empty and busy variants.
  const Vec nu = Vec::Ones(2);
  CHECK(generator_upper_bound(d, 0.5, nu, 10.0, 100.0, z) < -1.0);
  CHECK(generator_upper_bound(d, 0.5, nu, 10.0, 0.0, z) < -1.0);
}

}  // TEST_SUITE
