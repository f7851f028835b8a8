/// @file des.hpp
/// @brief Event-driven simulation of the n-server system with renewal
/// arrivals, phase-type service and exponential patience, plus its
/// birth–death oracle, stationary estimation with batch-means extension, and
/// the reconstruction of the diffusion-scaled input components (U, V) whose
/// image under Ψ must reproduce the scaled state path.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qhw/harris.hpp"
#include "qhw/phasetype.hpp"
#include "qhw/psi.hpp"
#include "qhw/stats.hpp"

namespace qhw {

struct SystemConfig {
  int n = 1;
  double beta = 0.0;
  InterarrivalDist interarrival = InterarrivalDist::exponential(1.0);
  PhaseTypeParams service;
  double alpha = 1.0;

  // Derived at construction via finalize():
  DerivedServiceData svc;
  double lambda_n = 0.0;  ///< n·μ·(1 − β/√n); keeps √n(1−ρⁿ) = β exactly
  double cu2 = 0.0;

  void finalize();  ///< validates, derives svc/lambda_n/cu2; throws on error
};

/// Integer system state; the FIFO queue is represented by its length because
/// waiting customers carry no state (patience is memoryless and aggregated,
/// the service phase is drawn at start of service).
struct SystemState {
  double t = 0.0;
  double last_arrival = 0.0;  ///< epoch of the most recent arrival (age = t − this)
  long long N = 0;
  std::vector<long long> Z;
  long long queue = 0;
};

enum class EventType : int { arrival = 0, phase_completion = 1, abandonment = 2 };

/// One event as seen by observers. For phase completions, `phase_from` is the
/// completing phase and `phase_to` the destination (−1 = departure). For
/// arrivals and service starts `phase_to` is the drawn initial phase (service
/// starts are reported through `started_service`).
struct Event {
  double t = 0.0;
  EventType type = EventType::arrival;
  int phase_from = -1;
  int phase_to = -1;
  bool started_service = false;  ///< this event put a customer into service
  int start_phase = -1;          ///< initial phase drawn at that start
};

using EventObserver = std::function<void(const Event&, const SystemState&)>;

/// The simulator. Events are scheduled in a binary heap keyed by time with
/// ties broken by event-type priority (arrival < phase completion <
/// abandonment) then insertion order. Per-customer phase timers are scheduled
/// ahead (valid by memorylessness); the abandonment clock is an aggregate
/// Exp(α·queue) regenerated lazily whenever the queue changes.
class Simulator {
 public:
  Simulator(const SystemConfig& config, std::uint64_t seed);

  /// Starts from the empty system with age 0 (default) or from a given state.
  void set_initial_state(long long N0, const std::vector<long long>& Z0);

  /// Runs until t_end, invoking the observer (if any) after every event.
  void run(double t_end, const EventObserver& observer = nullptr);

  const SystemState& state() const { return state_; }

  // Exact time integrals of Z_k and of the queue length, from 0 to state().t.
  const std::vector<double>& int_Z() const { return int_z_; }
  double int_queue() const { return int_queue_; }

  // Flow counters since t = 0.
  long long arrivals() const { return arrivals_; }
  long long departures() const { return departures_; }
  long long abandonments() const { return abandonments_; }
  long long service_starts() const { return service_starts_; }

  /// Diffusion-scaled view of the current state: a = age/√n, x = (N−n)/√n,
  /// z_k = (Z_k − nγ_k)/√n.
  void scaled_state(double& a, double& x, Vec& z) const;

 private:
  struct HeapEntry {
    double t;
    EventType type;
    std::uint64_t seq;
    int slot;              // server slot for phase completions
    std::uint64_t stamp;   // abandonment clock version
    bool operator>(const HeapEntry& o) const;
  };

  void schedule_arrival();
  void schedule_completion(int slot);
  void refresh_abandonment_clock();
  void start_service_from_queue(Event& ev);
  void enter_service(int phase);

  SystemConfig cfg_;
  RngStream rng_;
  SystemState state_;
  std::vector<HeapEntry> heap_;
  std::uint64_t seq_ = 0;
  std::uint64_t abandon_stamp_ = 0;
  std::vector<int> slot_phase_;   // phase per busy server slot, −1 when free
  std::vector<int> free_slots_;
  Mat routing_t_;                 // P', column k = destination probs of phase k
  double next_arrival_ = 0.0;
  std::vector<double> int_z_;
  double int_queue_ = 0.0;
  double last_accum_t_ = 0.0;
  long long arrivals_ = 0, departures_ = 0, abandonments_ = 0, service_starts_ = 0;

  void accumulate_to(double t);
  void pop_heap_entry(HeapEntry& out);
};

/// Birth–death stationary law over N for the one-phase exponential system:
/// birth λ, death min(j, n)·μ + (j−n)⁺·α. Truncated where the tail mass drops
/// below 1e−12 (widened automatically up to 10⁷ states), normalized. Computed
/// in log space by forward detailed balance; `from_mode` switches to a second
/// implementation that recurses outward from the modal state (double-
/// computation oracle).
Vec mm_n_m_oracle(int n, double lambda, double mu, double alpha,
                  int truncation = 0, bool from_mode = false);

struct StationaryOptions {
  double burn_in = 0.0;    ///< 0 → 100 relaxation times (1/min(α, μ, min ν))
  double spacing = 0.0;    ///< 0 → 10 relaxation times
  std::size_t n_samples = 10000;
  int max_extensions = 4;  ///< auto-extend rounds when lag-1 corr > 0.5
};

/// Samples the scaled state at spaced epochs past burn-in; thins and extends
/// the run while the lag-1 autocorrelation exceeds 0.5.
EmpiricalDist estimate_stationary(const SystemConfig& config,
                                  const StationaryOptions& opt,
                                  std::uint64_t seed);

/// Like estimate_stationary but records the raw N histogram instead of scaled
/// samples (for the birth–death comparison).
std::vector<double> stationary_n_histogram(const SystemConfig& config,
                                           const StationaryOptions& opt,
                                           std::uint64_t seed,
                                           std::size_t* n_used = nullptr);

/// Diffusion-scaled input components reconstructed from one simulated run on
/// a uniform grid: the centered arrival process E, the per-phase compensated
/// completion counts S, the compensated routing sums, the abandonment
/// compensation G, the compensated initial-phase draws Phi0, and their
/// combinations U and V feeding Ψ.
struct Components {
  Grid grid;
  Vec u;        ///< U(t_i)
  Mat v;        ///< V(t_i), rows on the grid
  Vec e_tilde;  ///< centered arrivals
  Mat m_tilde;  ///< martingale part entering both U and V
  Vec g_term;   ///< abandonment compensation term
  Mat phi0;     ///< compensated initial-phase draws
  StatePath xz; ///< scaled state on the grid
  double identity_residual = 0.0;  ///< defect of (x, z) = Ψ(u, v)
};

/// Simulates [0, t_end] from the empty system and reconstructs the components.
Components extract_components(const SystemConfig& config, double t_end,
                              double dt, std::uint64_t seed);

/// Builds a feasible integer state near the scaled target (x, z) on the
/// manifold and returns the exactly-achieved scaled state.
void make_system_state(const SystemConfig& config, double x_target,
                       const Vec& z_target, long long& N_out,
                       std::vector<long long>& Z_out, double& x_achieved,
                       Vec& z_achieved);

}  // namespace qhw
