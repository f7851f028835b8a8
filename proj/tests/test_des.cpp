#include <cmath>
#include <vector>

#include "doctest.h"
#include "qhw/des.hpp"
#include "qhw/lyapunov.hpp"
#include "qhw/phasetype.hpp"

using namespace qhw;

namespace {

SystemConfig small_system(int n, double beta, double alpha,
                          const PhaseTypeParams& ph) {
  SystemConfig cfg;
  cfg.n = n;
  cfg.beta = beta;
  cfg.alpha = alpha;
  cfg.service = ph;
  cfg.interarrival = InterarrivalDist::exponential(1.0);
  cfg.finalize();
  return cfg;
}

}  // namespace

TEST_SUITE("des") {

TEST_CASE("birth-death oracle: the two recursions agree") {
  const Vec fwd = mm_n_m_oracle(20, 17.5, 1.0, 0.5);
  const Vec anchored = mm_n_m_oracle(20, 17.5, 1.0, 0.5, 0, true);
  REQUIRE(fwd.size() == anchored.size());
  CHECK((fwd - anchored).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fwd.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fwd.minCoeff() >= 0.0);
}

TEST_CASE("birth-death oracle satisfies detailed balance") {
  const int n = 10;
  const double lambda = 8.0, mu = 1.0, alpha = 0.7;
  const Vec pi = mm_n_m_oracle(n, lambda, mu, alpha);
  for (int j = 0; j + 1 < pi.size(); ++j) {
    const double death =
        (j + 1 <= n) ? (j + 1) * mu : n * mu + (j + 1 - n) * alpha;
    if (pi[j] < 1e-280) continue;
    CHECK(pi[j] * lambda == doctest::Approx(pi[j + 1] * death).epsilon(1e-10));
  }
}

TEST_CASE("birth-death oracle degenerates to poisson when n=1, alpha=mu") {
  const double lambda = 2.5;
  const Vec pi = mm_n_m_oracle(1, lambda, 1.0, 1.0);
  double logfact = 0.0;
  for (int j = 0; j < std::min<int>(20, static_cast<int>(pi.size())); ++j) {
    if (j > 0) logfact += std::log(static_cast<double>(j));
    const double ref = std::exp(-lambda + j * std::log(lambda) - logfact);
    CHECK(pi[j] == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("birth-death oracle with no arrivals is the point mass at zero") {
  const Vec pi = mm_n_m_oracle(5, 0.0, 1.0, 1.0);
  CHECK(pi[0] == doctest::Approx(1.0));
  for (int j = 1; j < pi.size(); ++j) CHECK(pi[j] == 0.0);
}

TEST_CASE("conservation and phase-count identities hold after every event") {
  const auto ph = make_erlang2_service(2.0);
  auto cfg = small_system(7, 0.3, 0.6, ph);
  Simulator sim(cfg, 777);
  long long events = 0;
  double last_t = 0.0;
  sim.run(200.0, [&](const Event& ev, const SystemState& st) {
    ++events;
    CHECK(ev.t >= last_t);
    last_t = ev.t;
    long long busy = 0;
    for (long long zk : st.Z) {
      CHECK(zk >= 0);
      busy += zk;
    }
    CHECK(st.N >= 0);
    CHECK(busy == std::min<long long>(st.N, cfg.n));
    CHECK(st.queue == st.N - busy);
    if (st.queue > 0) CHECK(busy == cfg.n);  // work conservation
    if (ev.started_service) CHECK(ev.start_phase >= 0);
  });
  CHECK(events > 1000);
  const auto& st = sim.state();
  CHECK(st.N == sim.arrivals() - sim.departures() - sim.abandonments());
  CHECK(sim.service_starts() >= sim.departures());
}

TEST_CASE("scaled state sits on the manifold exactly") {
  const auto ph = make_erlang2_service(2.0);
  auto cfg = small_system(9, 0.5, 0.8, ph);
  Simulator sim(cfg, 901);
  int checked = 0;
  sim.run(100.0, [&](const Event&, const SystemState& st) {
    double a, x;
    Vec z;
    sim.scaled_state(a, x, z);
    CHECK(a >= 0.0);
    CHECK(on_manifold(x, z, 1e-12));
    CHECK(x == doctest::Approx((st.N - cfg.n) / std::sqrt(1.0 * cfg.n))
                   .epsilon(1e-12));
    ++checked;
  });
  CHECK(checked > 100);
}

TEST_CASE("stationary histogram matches the birth-death oracle") {
  const auto ph = make_exponential_service(1.0);
  // lambda = 4 on n = 5 servers: beta = (1 - 4/5) sqrt(5).
  auto cfg = small_system(5, 0.2 * std::sqrt(5.0), 0.7, ph);
  CHECK(cfg.lambda_n == doctest::Approx(4.0).epsilon(1e-12));
  StationaryOptions opt;
  opt.burn_in = 50.0;
  opt.spacing = 1.0;
  opt.n_samples = 50000;
  const auto hist = stationary_n_histogram(cfg, opt, 5150);
  const Vec pi = mm_n_m_oracle(5, cfg.lambda_n, 1.0, 0.7);
  double tv = 0.0;
  const std::size_t len = std::max<std::size_t>(hist.size(), pi.size());
  for (std::size_t j = 0; j < len; ++j) {
    const double a = j < hist.size() ? hist[j] : 0.0;
    const double b = j < static_cast<std::size_t>(pi.size()) ? pi[j] : 0.0;
    tv += std::abs(a - b);
  }
  tv *= 0.5;
  CHECK(tv < 0.03);
}

TEST_CASE("infinite impatience empties the queue") {
  const auto ph = make_exponential_service(1.0);
  auto cfg = small_system(5, 0.2, 1e6, ph);
  Simulator sim(cfg, 33);
  sim.run(200.0);
  CHECK(sim.int_queue() / 200.0 < 1e-3);
}

TEST_CASE("stationary estimation honours the request and stays exact") {
  const auto ph = make_erlang2_service(2.0);
  auto cfg = small_system(12, 0.4, 0.9, ph);
  StationaryOptions opt;
  opt.burn_in = 20.0;
  opt.spacing = 2.0;
  opt.n_samples = 2000;
  const auto d = estimate_stationary(cfg, opt, 41);
  CHECK(d.size() == 2000);
  CHECK(d.n == 12);
  double wsum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    wsum += d.w[i];
    CHECK(d.a[i] >= 0.0);
    CHECK(on_manifold(d.x[i], d.z[i], 1e-12));
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.lag1 < 0.8);
  CHECK(d.se_xplus > 0.0);
}

TEST_CASE("component extraction reproduces the state through the map") {
  for (int K : {1, 2}) {
    const auto ph = (K == 1) ? make_exponential_service(1.0)
                             : make_erlang2_service(2.0);
    auto cfg = small_system(50, 0.5, 0.5, ph);
    const double dt = 0.01;
    const auto comp = extract_components(cfg, 10.0, dt, 60 + K);
    const double mag =
        std::max(path_magnitude(comp.xz),
                 std::max(comp.u.cwiseAbs().maxCoeff(),
                          comp.v.cwiseAbs().maxCoeff()));
    CHECK(comp.identity_residual <= 10.0 * dt * (1.0 + mag));
    CHECK(comp.u[0] == doctest::Approx(-std::sqrt(50.0)).epsilon(1e-12));
    CHECK(comp.e_tilde[0] == 0.0);
    // Initial-phase draws are compensated within the simplex: e'phi0 = 0.
    for (int i = 0; i < comp.phi0.rows(); ++i)
      CHECK(std::abs(comp.phi0.row(i).sum()) < 1e-9);
    if (K == 1) CHECK(comp.v.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("input components are centred: mean endpoints within monte-carlo error") {
  const auto ph = make_erlang2_service(2.0);
  auto cfg = small_system(40, 0.5, 0.5, ph);
  const int reps = 60;
  std::vector<double> e_end(reps), m1_end(reps);
  for (int r = 0; r < reps; ++r) {
    const auto comp = extract_components(cfg, 5.0, 0.01, 1000 + r);
    const int last = static_cast<int>(comp.u.size()) - 1;
    e_end[r] = comp.e_tilde[last];
    m1_end[r] = comp.m_tilde(last, 0);
  }
  auto mean_se = [&](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    s = std::sqrt(s / (v.size() - 1.0) / v.size());
    return std::pair<double, double>(m, s);
  };
  const auto [em, es] = mean_se(e_end);
  CHECK(std::abs(em) < 4.0 * es + 1e-9);
  const auto [mm, ms] = mean_se(m1_end);
  CHECK(std::abs(mm) < 4.0 * ms + 1e-9);
}

TEST_CASE("feasible integer states land near the scaled target") {
  const auto ph = make_erlang2_service(2.0);
  auto cfg = small_system(100, 0.5, 0.5, ph);
  Vec zt(2);
  zt << 0.0, 0.0;
  for (double xt : {-3.0, 0.0, 4.0, 50.0}) {
    long long N;
    std::vector<long long> Z;
    double xa;
    Vec za;
    make_system_state(cfg, xt, zt, N, Z, xa, za);
    long long busy = 0;
    for (long long zk : Z) {
      CHECK(zk >= 0);
      busy += zk;
    }
    CHECK(busy == std::min<long long>(N, cfg.n));
    CHECK(on_manifold(xa, za, 1e-12));
    CHECK(std::abs(xa - xt) <= 2.0 / std::sqrt(100.0) + 1e-12);
  }
}

}  // TEST_SUITE
