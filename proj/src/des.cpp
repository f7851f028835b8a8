#include "qhw/des.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace qhw {

void SystemConfig::finalize() {
  if (n < 1) throw std::invalid_argument("SystemConfig: n >= 1 required");
  if (alpha <= 0.0)
    throw std::invalid_argument("SystemConfig: alpha > 0 required");
  const ValidationResult vr = validate(service);
  if (!vr.ok) throw std::invalid_argument("SystemConfig: " + vr.message);
  svc = derive(service);
  if (std::abs(interarrival.mean() - 1.0) > 1e-10)
    throw std::invalid_argument(
        "SystemConfig: interarrival mean must be 1, got " +
        std::to_string(interarrival.mean()));
  cu2 = interarrival.cu2();
  lambda_n = n * svc.mu * (1.0 - beta / std::sqrt(static_cast<double>(n)));
  if (lambda_n <= 0.0)
    throw std::invalid_argument("SystemConfig: beta >= sqrt(n) gives a "
                                "nonpositive arrival rate");
}

bool Simulator::HeapEntry::operator>(const HeapEntry& o) const {
  if (t != o.t) return t > o.t;
  if (type != o.type) return static_cast<int>(type) > static_cast<int>(o.type);
  return seq > o.seq;
}

Simulator::Simulator(const SystemConfig& config, std::uint64_t seed)
    : cfg_(config), rng_(seed, 0) {
  cfg_.finalize();
  routing_t_ = cfg_.service.P.transpose();
  set_initial_state(0, std::vector<long long>(cfg_.service.K, 0));
}

void Simulator::set_initial_state(long long N0,
                                  const std::vector<long long>& Z0) {
  const int K = cfg_.service.K;
  const int n = cfg_.n;
  if (static_cast<int>(Z0.size()) != K)
    throw std::invalid_argument("set_initial_state: Z dimension mismatch");
  if (N0 < 0) throw std::invalid_argument("set_initial_state: N < 0");
  long long busy = 0;
  for (long long zk : Z0) {
    if (zk < 0) throw std::invalid_argument("set_initial_state: Z entry < 0");
    busy += zk;
  }
  if (busy != std::min<long long>(N0, n))
    throw std::invalid_argument(
        "set_initial_state: sum Z must equal min(N, n)");

  state_.t = 0.0;
  state_.last_arrival = 0.0;
  state_.N = N0;
  state_.Z = Z0;
  state_.queue = N0 - busy;

  heap_.clear();
  seq_ = 0;
  abandon_stamp_ = 0;
  slot_phase_.assign(n, -1);
  free_slots_.clear();
  int_z_.assign(K, 0.0);
  int_queue_ = 0.0;
  last_accum_t_ = 0.0;
  arrivals_ = departures_ = abandonments_ = service_starts_ = 0;

  int slot = 0;
  for (int k = 0; k < K; ++k)
    for (long long c = 0; c < Z0[k]; ++c) {
      slot_phase_[slot] = k;
      schedule_completion(slot);
      ++slot;
    }
  for (int s = slot; s < n; ++s) free_slots_.push_back(s);
  refresh_abandonment_clock();
  schedule_arrival();
}

void Simulator::schedule_arrival() {
  next_arrival_ = state_.t + cfg_.interarrival.sample(rng_) / cfg_.lambda_n;
  heap_.push_back({next_arrival_, EventType::arrival, seq_++, -1, 0});
  std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
}

void Simulator::schedule_completion(int slot) {
  const int k = slot_phase_[slot];
  const double t = state_.t + rng_.expo(cfg_.service.nu[k]);
  heap_.push_back({t, EventType::phase_completion, seq_++, slot, 0});
  std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
}

void Simulator::refresh_abandonment_clock() {
  ++abandon_stamp_;
  if (state_.queue > 0) {
    const double t = state_.t + rng_.expo(cfg_.alpha * state_.queue);
    heap_.push_back({t, EventType::abandonment, seq_++, -1, abandon_stamp_});
    std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
  }
}

void Simulator::enter_service(int phase) {
  const int slot = free_slots_.back();
  free_slots_.pop_back();
  slot_phase_[slot] = phase;
  ++state_.Z[phase];
  ++service_starts_;
  schedule_completion(slot);
}

void Simulator::start_service_from_queue(Event& ev) {
  --state_.queue;
  refresh_abandonment_clock();
  int ph = rng_.pick(cfg_.service.p);
  if (ph >= cfg_.service.K) ph = cfg_.service.K - 1;  // guard vs rounding in p
  enter_service(ph);
  ev.started_service = true;
  ev.start_phase = ph;
}

void Simulator::accumulate_to(double t) {
  const double dt = t - last_accum_t_;
  if (dt <= 0.0) return;
  for (std::size_t k = 0; k < int_z_.size(); ++k)
    int_z_[k] += static_cast<double>(state_.Z[k]) * dt;
  int_queue_ += static_cast<double>(state_.queue) * dt;
  last_accum_t_ = t;
}

void Simulator::pop_heap_entry(HeapEntry& out) {
  std::pop_heap(heap_.begin(), heap_.end(), std::greater<>{});
  out = heap_.back();
  heap_.pop_back();
}

void Simulator::run(double t_end, const EventObserver& observer) {
  if (t_end < state_.t)
    throw std::invalid_argument("run: t_end precedes current time");
  HeapEntry e;
  while (!heap_.empty()) {
    const HeapEntry& top = heap_.front();
    if (top.type == EventType::abandonment && top.stamp != abandon_stamp_) {
      pop_heap_entry(e);  // stale clock
      continue;
    }
    if (top.t > t_end) break;
    pop_heap_entry(e);
    accumulate_to(e.t);
    state_.t = e.t;

    Event ev;
    ev.t = e.t;
    ev.type = e.type;
    switch (e.type) {
      case EventType::arrival: {
        ++arrivals_;
        state_.last_arrival = e.t;
        ++state_.N;
        schedule_arrival();
        if (!free_slots_.empty()) {
          int ph = rng_.pick(cfg_.service.p);
          if (ph >= cfg_.service.K) ph = cfg_.service.K - 1;
          enter_service(ph);
          ev.started_service = true;
          ev.start_phase = ph;
          ev.phase_to = ph;
        } else {
          ++state_.queue;
          refresh_abandonment_clock();
        }
        break;
      }
      case EventType::phase_completion: {
        const int slot = e.slot;
        const int k = slot_phase_[slot];
        ev.phase_from = k;
        const int dest = rng_.pick(routing_t_.col(k));
        if (dest < cfg_.service.K) {
          --state_.Z[k];
          ++state_.Z[dest];
          slot_phase_[slot] = dest;
          schedule_completion(slot);
          ev.phase_to = dest;
        } else {
          --state_.Z[k];
          --state_.N;
          ++departures_;
          slot_phase_[slot] = -1;
          free_slots_.push_back(slot);
          ev.phase_to = -1;
          if (state_.queue > 0) start_service_from_queue(ev);
        }
        break;
      }
      case EventType::abandonment: {
        --state_.queue;
        --state_.N;
        ++abandonments_;
        refresh_abandonment_clock();
        break;
      }
    }
    if (observer) observer(ev, state_);
  }
  accumulate_to(t_end);
  state_.t = t_end;
}

void Simulator::scaled_state(double& a, double& x, Vec& z) const {
  const double rn = std::sqrt(static_cast<double>(cfg_.n));
  a = (state_.t - state_.last_arrival) / rn;
  x = static_cast<double>(state_.N - cfg_.n) / rn;
  const int K = cfg_.service.K;
  z.resize(K);
  for (int k = 0; k < K; ++k)
    z[k] = (static_cast<double>(state_.Z[k]) - cfg_.n * cfg_.svc.gamma[k]) / rn;
}

Vec mm_n_m_oracle(int n, double lambda, double mu, double alpha,
                  int truncation, bool from_mode) {
  if (n < 1 || mu <= 0.0 || alpha <= 0.0 || lambda < 0.0)
    throw std::invalid_argument("mm_n_m_oracle: invalid rates");
  if (lambda == 0.0) {
    Vec r = Vec::Zero(2);
    r[0] = 1.0;
    return r;
  }
  auto death = [&](long long j) {
    return std::min<long long>(j, n) * mu +
           static_cast<double>(std::max<long long>(j - n, 0)) * alpha;
  };
  long long m =
      truncation > 0
          ? truncation
          : llround(n + lambda / mu + 12.0 * std::sqrt(n + lambda / mu)) + 2;
  const double llam = std::log(lambda);
  for (;;) {
    if (m > 10000000)
      throw std::runtime_error("mm_n_m_oracle: truncation exceeds 1e7 states");
    std::vector<double> lw(m + 1);
    if (!from_mode) {
      lw[0] = 0.0;
      for (long long j = 1; j <= m; ++j)
        lw[j] = lw[j - 1] + llam - std::log(death(j));
    } else {
      long long mode = 0;
      while (mode < m && lambda >= death(mode + 1)) ++mode;
      lw[mode] = 0.0;
      for (long long j = mode + 1; j <= m; ++j)
        lw[j] = lw[j - 1] + llam - std::log(death(j));
      for (long long j = mode - 1; j >= 0; --j)
        lw[j] = lw[j + 1] + std::log(death(j + 1)) - llam;
    }
    const double mx = *std::max_element(lw.begin(), lw.end());
    double sum = 0.0;
    for (double v : lw) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    Vec pi(m + 1);
    for (long long j = 0; j <= m; ++j) pi[j] = std::exp(lw[j] - lse);
    const double ratio = lambda / death(m);  // bounds all later ratios
    if (ratio < 1.0 && pi[m] * ratio / (1.0 - ratio) < 1e-12) return pi;
    m *= 2;
  }
}

namespace {

double default_relaxation(const SystemConfig& cfg) {
  return 1.0 /
         std::min({cfg.alpha, cfg.svc.mu, cfg.service.nu.minCoeff()});
}

}  // namespace

EmpiricalDist estimate_stationary(const SystemConfig& config,
                                  const StationaryOptions& opt,
                                  std::uint64_t seed) {
  SystemConfig cfg = config;
  cfg.finalize();
  const double relax = default_relaxation(cfg);
  const double burn = opt.burn_in > 0.0 ? opt.burn_in : 100.0 * relax;
  double spacing = opt.spacing > 0.0 ? opt.spacing : 10.0 * relax;
  const std::size_t m = opt.n_samples;
  if (m < 4)
    throw std::invalid_argument("estimate_stationary: need >= 4 samples");

  Simulator sim(cfg, seed);
  sim.run(burn);
  double t_cursor = burn;

  std::vector<double> as, xs;
  std::vector<Vec> zs;
  as.reserve(m);
  xs.reserve(m);
  zs.reserve(m);
  auto draw = [&]() {
    t_cursor += spacing;
    sim.run(t_cursor);
    double a, x;
    Vec z;
    sim.scaled_state(a, x, z);
    as.push_back(a);
    xs.push_back(x);
    zs.push_back(std::move(z));
  };
  for (std::size_t i = 0; i < m; ++i) draw();

  int rounds = 0;
  double l1 = lag1_autocorr(xs);
  while (l1 > 0.5 && rounds < opt.max_extensions) {
    // Thin by two (keep the later of each pair) and double the spacing, then
    // extend the same run back to the requested sample count.
    std::size_t kept = 0;
    for (std::size_t i = 1; i < xs.size(); i += 2, ++kept) {
      as[kept] = as[i];
      xs[kept] = xs[i];
      zs[kept] = zs[i];
    }
    as.resize(kept);
    xs.resize(kept);
    zs.resize(kept);
    spacing *= 2.0;
    while (xs.size() < m) draw();
    l1 = lag1_autocorr(xs);
    ++rounds;
  }
  const bool warn = l1 > 0.5;
  if (warn)
    std::cerr << "warning: lag-1 autocorrelation " << l1
              << " still above 0.5 after " << rounds
              << " extension rounds\n";

  EmpiricalDist d;
  d.x = std::move(xs);
  d.z = std::move(zs);
  d.a = std::move(as);
  d.w.assign(m, 1.0 / static_cast<double>(m));
  d.n = cfg.n;
  d.seed = seed;
  d.burn_in = burn;
  d.spacing = spacing;
  d.lag1 = l1;
  d.extensions = rounds;
  d.extension_warning = warn;

  std::vector<double> plus(m), minus(m);
  for (std::size_t i = 0; i < m; ++i) {
    plus[i] = std::max(d.x[i], 0.0);
    minus[i] = std::max(-d.x[i], 0.0);
  }
  const int batches = static_cast<int>(std::min<std::size_t>(32, m / 2));
  if (batches >= 2) {
    d.se_xplus = batch_means_se(plus, batches);
    d.se_xminus = batch_means_se(minus, batches);
  }
  return d;
}

std::vector<double> stationary_n_histogram(const SystemConfig& config,
                                           const StationaryOptions& opt,
                                           std::uint64_t seed,
                                           std::size_t* n_used) {
  SystemConfig cfg = config;
  cfg.finalize();
  const double relax = default_relaxation(cfg);
  const double burn = opt.burn_in > 0.0 ? opt.burn_in : 100.0 * relax;
  const double spacing = opt.spacing > 0.0 ? opt.spacing : 10.0 * relax;
  const std::size_t m = opt.n_samples;

  Simulator sim(cfg, seed);
  sim.run(burn);
  double t_cursor = burn;
  std::vector<long long> counts;
  for (std::size_t i = 0; i < m; ++i) {
    t_cursor += spacing;
    sim.run(t_cursor);
    const long long N = sim.state().N;
    if (N >= static_cast<long long>(counts.size()))
      counts.resize(N + 1, 0);
    ++counts[N];
  }
  std::vector<double> freq(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j)
    freq[j] = static_cast<double>(counts[j]) / static_cast<double>(m);
  if (n_used) *n_used = m;
  return freq;
}

Components extract_components(const SystemConfig& config, double t_end,
                              double dt, std::uint64_t seed) {
  SystemConfig cfg = config;
  cfg.finalize();
  const int K = cfg.service.K;
  const double rn = std::sqrt(static_cast<double>(cfg.n));
  Grid grid{t_end, dt};
  const int S = grid.steps();

  Simulator sim(cfg, seed);
  Vec D = Vec::Zero(K);           // phase-k completions (routed + departed)
  Vec routed_in = Vec::Zero(K);   // transitions into j from phase completions
  Vec started_in = Vec::Zero(K);  // initial-phase draws at service starts
  EventObserver obs = [&](const Event& ev, const SystemState&) {
    if (ev.type == EventType::phase_completion) {
      D[ev.phase_from] += 1.0;
      if (ev.phase_to >= 0) routed_in[ev.phase_to] += 1.0;
    }
    if (ev.started_service) started_in[ev.start_phase] += 1.0;
  };

  Components out;
  out.grid = grid;
  out.u.resize(S + 1);
  out.e_tilde.resize(S + 1);
  out.g_term.resize(S + 1);
  out.v.resize(S + 1, K);
  out.m_tilde.resize(S + 1, K);
  out.phi0.resize(S + 1, K);
  out.xz.x.resize(S + 1);
  out.xz.z.resize(S + 1, K);

  const Vec& p = cfg.service.p;
  const Mat Pt = cfg.service.P.transpose();
  const Vec& nu = cfg.service.nu;
  const Vec& gamma = cfg.svc.gamma;
  const double mu = cfg.svc.mu;
  const Mat IK = Mat::Identity(K, K);

  const double x0 = -rn;                       // empty system: (0 − n)/√n
  const Vec z0 = -rn * gamma;
  const Vec v0 = z0 - p * z0.sum();            // (I − pe')z0

  Vec T(K), S_k(K), phik_sum(K), M(K), Phi0(K), V(K);
  for (int i = 0; i <= S; ++i) {
    const double t = i * dt;
    sim.run(t, obs);
    double a, x;
    Vec z;
    sim.scaled_state(a, x, z);
    out.xz.x[i] = x;
    out.xz.z.row(i) = z.transpose();

    for (int k = 0; k < K; ++k) T[k] = sim.int_Z()[k];
    const double Et = (sim.arrivals() - cfg.lambda_n * t) / rn;
    S_k = (D - nu.cwiseProduct(T)) / rn;
    phik_sum = (routed_in - Pt * D) / rn;
    M = phik_sum - (IK - Pt) * S_k;
    const double G =
        (sim.abandonments() - cfg.alpha * sim.int_queue()) / rn;
    Phi0 = (started_in - p * static_cast<double>(sim.service_starts())) / rn;

    out.e_tilde[i] = Et;
    out.m_tilde.row(i) = M.transpose();
    out.g_term[i] = G;
    out.phi0.row(i) = Phi0.transpose();
    out.u[i] = x0 - mu * cfg.beta * t + Et + M.sum() - G;
    V = v0 + Phi0 + (M - p * M.sum());
    out.v.row(i) = V.transpose();
  }

  out.identity_residual =
      residual(out.xz, {out.u, out.v}, cfg.alpha, cfg.svc.R, p, grid);
  const double tol = 10.0 * dt * (1.0 + path_magnitude(out.xz));
  if (out.identity_residual > tol)
    throw std::runtime_error(
        "extract_components: input-map identity residual " +
        std::to_string(out.identity_residual) + " exceeds " +
        std::to_string(tol) + " (reconstruction bug)");
  return out;
}

void make_system_state(const SystemConfig& config, double x_target,
                       const Vec& z_target, long long& N_out,
                       std::vector<long long>& Z_out, double& x_achieved,
                       Vec& z_achieved) {
  SystemConfig cfg = config;
  cfg.finalize();
  const int K = cfg.service.K;
  const int n = cfg.n;
  const double rn = std::sqrt(static_cast<double>(n));
  const Vec& gamma = cfg.svc.gamma;

  long long N = n + llround(rn * x_target);
  if (N < 0) N = 0;
  const long long busy = std::min<long long>(N, n);

  std::vector<long long> Z(K);
  std::vector<double> target(K);
  long long tot = 0;
  for (int k = 0; k < K; ++k) {
    target[k] = n * gamma[k] + rn * z_target[k];
    Z[k] = std::max<long long>(0, llround(target[k]));
    tot += Z[k];
  }
  while (tot > busy) {
    int k_best = -1;
    double excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k)
      if (Z[k] > 0 && Z[k] - target[k] > excess) {
        excess = Z[k] - target[k];
        k_best = k;
      }
    --Z[k_best];
    --tot;
  }
  while (tot < busy) {
    int k_best = 0;
    double deficit = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k)
      if (target[k] - Z[k] > deficit) {
        deficit = target[k] - Z[k];
        k_best = k;
      }
    ++Z[k_best];
    ++tot;
  }

  N_out = N;
  Z_out = Z;
  x_achieved = static_cast<double>(N - n) / rn;
  z_achieved.resize(K);
  for (int k = 0; k < K; ++k)
    z_achieved[k] = (static_cast<double>(Z[k]) - n * gamma[k]) / rn;
}

}  // namespace qhw
