#include <cmath>

#include "doctest.h"
#include "qhw/cqlf.hpp"
#include "qhw/diffusion.hpp"
#include "qhw/fluid.hpp"
#include "qhw/lyapunov.hpp"
#include "qhw/phasetype.hpp"
#include "qhw/rng.hpp"
#include "qhw/stats.hpp"

using namespace qhw;

TEST_SUITE("diffusion") {

TEST_CASE("scalar coefficients: poisson input doubles the variance rate") {
  const auto c = derive_covariance(make_exponential_service(1.0), 1.0, 0.5);
  CHECK(c.var_u == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.cov_v(0, 0) == doctest::Approx(0.0));
  CHECK(c.cross[0] == doctest::Approx(0.0));
}

TEST_CASE("erlang-2 coefficients from the component rates") {
  const auto c = derive_covariance(make_erlang2_service(2.0), 1.0, 0.5);
  CHECK(c.var_u == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.cov_v(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.cov_v(0, 1) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(c.cov_v(1, 0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(c.cov_v(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.cross[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.cross[1] == doctest::Approx(1.0).epsilon(1e-12));
  // e spans the null space of cov_v and annihilates cross.
  CHECK((c.cov_v * Vec::Ones(2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(c.cross.sum()) < 1e-12);
  const Mat a = c.assembled();
  CHECK(a.rows() == 3);
  CHECK(lambda_min_sym(a) > -1e-10);
}

TEST_CASE("interarrival variability enters through the u-rate only") {
  const auto c1 = derive_covariance(make_erlang2_service(2.0), 0.5, 0.5);
  const auto c2 = derive_covariance(make_erlang2_service(2.0), 2.0, 0.5);
  CHECK(c2.var_u - c1.var_u == doctest::Approx(1.5).epsilon(1e-12));
  CHECK((c1.cov_v - c2.cov_v).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c1.cross - c2.cross).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero covariance reduces the pou scheme to the fluid path") {
  const auto ph = make_erlang2_service(2.0);
  const auto d = derive(ph);
  DiffusionCoeffs zero;
  zero.var_u = 0.0;
  zero.cov_v = Mat::Zero(2, 2);
  zero.cross = Vec::Zero(2);
  const Grid grid{4.0, 1e-3};
  Vec z0(2);
  z0 << 0.6, -0.6;
  const auto pou = simulate_pou(1.2, z0, zero, 0.5, d.mu, 0.7, d.R, ph.p,
                                grid, 99);
  const auto in = fluid_inputs(1.2, z0, 0.5, d.mu, ph.p, grid);
  const auto ref = psi(in, 0.7, d.R, ph.p, grid);
  double worst = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    worst = std::max(worst, std::abs(pou.x[i] - ref.x[i]));
    worst = std::max(worst,
                     (pou.z.row(i) - ref.z.row(i)).cwiseAbs().maxCoeff());
  }
  CHECK(worst == 0.0);
}

TEST_CASE("empirical increment covariance approaches the derived rates") {
  SystemConfig cfg;
  cfg.n = 80;
  cfg.beta = 0.5;
  cfg.alpha = 0.5;
  cfg.service = make_exponential_service(1.0);
  cfg.interarrival = InterarrivalDist::exponential(1.0);
  cfg.finalize();
  const Mat emp = empirical_increment_covariance(cfg, 350.0, 0.5, 50.0, 0.01,
                                                 4242);
  const auto derived = derive_covariance(cfg.service, 1.0, cfg.alpha);
  const Mat da = derived.assembled();
  CHECK((emp - da).norm() / da.norm() < 0.25);
}

TEST_CASE("cross reconciliation trusts the derivation when they agree") {
  const auto derived = derive_covariance(make_erlang2_service(2.0), 1.0, 0.5);
  bool warned = true;
  const auto kept = reconcile_cross(derived, derived.assembled(), warned);
  CHECK_FALSE(warned);
  CHECK((kept.cross - derived.cross).cwiseAbs().maxCoeff() == 0.0);

  Mat emp = derived.assembled();
  emp(0, 1) = -emp(0, 1);  // flip the sign of the measured cross term
  emp(1, 0) = -emp(1, 0);
  bool warned2 = false;
  const auto swapped = reconcile_cross(derived, emp, warned2);
  CHECK(warned2);
  CHECK(swapped.cross[0] == doctest::Approx(emp(1, 0)).epsilon(1e-12));
}

TEST_CASE("one-dimensional density oracle is gaussian when alpha equals mu") {
  const double beta = 0.7, alpha = 1.0, mu = 1.0, var = 2.0;
  const auto table = pou_1d_density_oracle(beta, alpha, mu, var);
  // Exponent collapses to a single gaussian N(-beta, var/(2 mu)).
  const double sd = std::sqrt(var / (2.0 * mu));
  for (double x : {-3.0, -1.0, -0.7, 0.0, 1.0, 2.0}) {
    const double ref = norm_cdf((x + beta) / sd);
    CHECK(table.cdf_at(x) == doctest::Approx(ref).epsilon(5e-3).scale(1.0));
  }
}

TEST_CASE("density oracle integrates to one and splits at the modes") {
  const auto table = pou_1d_density_oracle(0.5, 0.5, 1.0, 2.0);
  double mass = 0.0;
  for (int i = 0; i + 1 < table.xs.size(); ++i)
    mass += 0.5 * (table.pdf[i] + table.pdf[i + 1]) *
            (table.xs[i + 1] - table.xs[i]);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(table.cdf_at(table.xs[0]) == doctest::Approx(0.0).scale(1.0));
  CHECK(table.cdf_at(table.xs[table.xs.size() - 1]) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pou stationary sample matches the scalar density oracle") {
  const auto ph = make_exponential_service(1.0);
  const auto d = derive(ph);
  DiffusionCoeffs c = derive_covariance(ph, 1.0, 1.0);
  StationaryOptions opt;
  opt.burn_in = 20.0;
  opt.spacing = 2.0;
  opt.n_samples = 5000;
  const auto dist =
      estimate_stationary_pou(c, 1.0, d.mu, 1.0, d.R, ph.p, 0.01, opt, 7);
  CHECK(dist.size() == 5000);
  CHECK(dist.n == 0);
  // alpha = mu = 1: stationary law is N(-1, 1).
  double mean = 0.0;
  for (double x : dist.x) mean += x;
  mean /= dist.x.size();
  CHECK(std::abs(mean + 1.0) < 0.1);
  const auto table = pou_1d_density_oracle(1.0, 1.0, 1.0, c.var_u);
  CHECK(ks_1d(dist, table, marginal_x()) < 0.05);
}

}  // TEST_SUITE
