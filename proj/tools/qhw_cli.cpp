/// Command-line laboratory driver: orchestrates the Lyapunov-matrix solver,
/// the fluid drift suite, discrete-event and diffusion stationary estimation,
/// the limit-interchange report, and the regeneration-structure check.
/// Exit codes: 0 pass, 1 property failure, 2 usage/config error.
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qhw/config.hpp"
#include "qhw/cqlf.hpp"
#include "qhw/des.hpp"
#include "qhw/diffusion.hpp"
#include "qhw/fluid.hpp"
#include "qhw/harris.hpp"
#include "qhw/lyapunov.hpp"
#include "qhw/phasetype.hpp"
#include "qhw/plot_data.hpp"
#include "qhw/psi.hpp"
#include "qhw/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  long long seed_offset = 0;
  int jobs = 1;
};

/// Index-parallel loop with a deterministic join: results must be written to
/// pre-sized slots so the outcome is independent of scheduling.
void for_each_index(int jobs, int count, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mtx;
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mtx);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int width = std::min(jobs, count);
  for (int w = 0; w < width; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

json mat_rows(const qhw::Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

json vec_arr(const qhw::Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

qhw::RunManifest base_manifest(const std::string& subcommand,
                               const qhw::ExperimentConfig& cfg,
                               std::uint64_t seed, const CommonArgs& args) {
  qhw::RunManifest m;
  m.subcommand = subcommand;
  m.config_hash = qhw::fnv1a64(cfg.canonical_string());
  m.seed = seed;
  m.seed_offset = args.seed_offset;
  m.jobs = args.jobs;
  return m;
}

struct LyapunovSetup {
  qhw::DerivedServiceData svc;
  qhw::Cqlf cqlf;
  qhw::LyapunovFn fn;
};

/// Solves the common quadratic Lyapunov matrix, selects κ, and assembles the
/// Lyapunov function for the config. Throws when no certificate is found.
LyapunovSetup make_lyapunov(const qhw::ExperimentConfig& cfg,
                            std::uint64_t seed) {
  LyapunovSetup s;
  s.svc = qhw::derive(cfg.service);
  auto q = qhw::solve_q(s.svc.R, cfg.service.p, s.svc.gamma, 1e-8, seed);
  if (!q)
    throw std::runtime_error(
        "no certified common quadratic Lyapunov matrix found");
  s.cqlf = *q;
  s.cqlf.kappa = qhw::select_kappa(s.cqlf.Q, s.svc.R, cfg.service.p, cfg.alpha,
                                   s.svc.mu);
  s.cqlf.cert = qhw::certify(s.cqlf.Q, s.cqlf.kappa, s.svc.R, cfg.service.p,
                             cfg.alpha, s.svc.mu);
  s.fn.beta = cfg.beta;
  s.fn.alpha = cfg.alpha;
  s.fn.mu = s.svc.mu;
  s.fn.gamma = s.svc.gamma;
  s.fn.Q = s.cqlf.Q;
  s.fn.kappa = s.cqlf.kappa;
  s.fn.b = s.cqlf.b;
  return s;
}

void write_samples_csv(const qhw::EmpiricalDist& d, const fs::path& path,
                       bool with_age) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  const int K = d.size() ? static_cast<int>(d.z[0].size()) : 0;
  if (with_age)
    f << "a,x";
  else
    f << "x";
  for (int k = 1; k <= K; ++k) f << ",z" << k;
  f << "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (with_age) f << qhw::fmt_double(d.a[i]) << ",";
    f << qhw::fmt_double(d.x[i]);
    for (int k = 0; k < K; ++k)
      f << "," << qhw::fmt_double(d.z[i][k]);
    f << "\n";
  }
}

/// Quantile of the √g pushforward of a sample (uniform weights).
std::vector<double> sqrt_g_quantiles(const qhw::EmpiricalDist& d,
                                     const qhw::LyapunovFn& fn,
                                     const std::vector<double>& levels) {
  std::vector<double> vals(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    vals[i] = qhw::sqrt_g(fn, d.x[i], d.z[i]);
  std::sort(vals.begin(), vals.end());
  std::vector<double> out;
  for (double lv : levels) {
    // Round the index up so the mass strictly above vals[idx] stays below
    // 1 − lv even under floating-point weight accumulation.
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(lv * static_cast<double>(vals.size())));
    if (idx >= vals.size()) idx = vals.size() - 1;
    out.push_back(vals[idx]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int cmd_cqlf(const qhw::ExperimentConfig& cfg, const fs::path& out,
             std::uint64_t seed, const CommonArgs& args) {
  qhw::RunManifest man = base_manifest("cqlf", cfg, seed, args);
  man.tolerances["solver_tol"] = 1e-8;
  man.tolerances["psd_slack"] = 1e-8;

  LyapunovSetup s = make_lyapunov(cfg, seed);
  json j;
  j["Q"] = mat_rows(s.cqlf.Q);
  j["b"] = s.cqlf.b;
  j["kappa"] = s.cqlf.kappa;
  j["certificates"] = {{"lmin_q", s.cqlf.cert.lmin_q},
                       {"lmin_qr", s.cqlf.cert.lmin_qr},
                       {"lmin_m3", s.cqlf.cert.lmin_m3},
                       {"lmin_cond_i", s.cqlf.cert.lmin_cond_i},
                       {"lmin_cond_ii", s.cqlf.cert.lmin_cond_ii},
                       {"band_margin", s.cqlf.cert.band_margin}};
  std::cout << j.dump(2) << "\n";
  write_json(j, out / "cqlf.json");
  qhw::write_manifest(man, out / "manifest.json");

  const auto& c = s.cqlf.cert;
  if (!(c.lmin_q > 0.0)) {
    std::cerr << "FAIL: Q not positive definite\n";
    return 1;
  }
  if (!(c.lmin_qr > 0.0)) {
    std::cerr << "FAIL: QR + R'Q not positive definite\n";
    return 1;
  }
  if (c.lmin_m3 < -1e-8) {
    std::cerr << "FAIL: mixed form not positive semidefinite\n";
    return 1;
  }
  if (!(c.lmin_cond_i > 0.0) || !(c.lmin_cond_ii > 0.0) ||
      c.band_margin < 0.0) {
    std::cerr << "FAIL: kappa certificates violated\n";
    return 1;
  }
  return 0;
}

int cmd_fluid(const qhw::ExperimentConfig& cfg, const fs::path& out,
              std::uint64_t seed, const CommonArgs& args) {
  qhw::RunManifest man = base_manifest("fluid", cfg, seed, args);
  man.tolerances["g_monotone_step_tol"] = 1e-6;
  man.tolerances["band_positive"] = 0.0;
  man.tolerances["drift_eps_grid_step"] = 0.01;

  LyapunovSetup s = make_lyapunov(cfg, seed);
  const qhw::Mat& R = s.svc.R;
  const qhw::Vec& p = cfg.service.p;

  const auto mono = qhw::check_g_monotone(s.fn, R, p, 100, cfg.t_end, seed);
  const auto band =
      qhw::check_geometric_band(s.fn, R, p, 50, 1000.0, cfg.t_end, seed);
  const auto drift =
      qhw::check_fluid_drift_inequality(s.fn, R, p, 1.0, 200, seed);

  // A few representative trajectories for plotting.
  const qhw::Grid grid{cfg.t_end, cfg.dt};
  qhw::RngStream rng(seed, 11);
  std::vector<qhw::FluidTrajectory> trajs;
  const double radii[] = {0.5, 2.0, 10.0, 50.0, 200.0};
  for (std::size_t i = 0; i < 5; ++i) {
    double x0;
    qhw::Vec z0;
    qhw::random_manifold_state(cfg.service.K, radii[i], rng, x0, z0);
    trajs.push_back(qhw::integrate_fluid(x0, z0, grid,
                                         qhw::FluidMethod::direct_ode, s.fn,
                                         R, p));
  }
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    std::ofstream f(out / ("fluid_trajectory_" + std::to_string(i + 1) +
                           ".csv"));
    if (!f) throw std::runtime_error("cannot write trajectory CSV");
    f << "t,x";
    for (int k = 1; k <= cfg.service.K; ++k) f << ",z" << k;
    f << ",g,dlng\n";
    const auto& tr = trajs[i];
    const Eigen::Index m = tr.g.size();
    for (Eigen::Index r = 0; r < m; ++r) {
      double dlng = 0.0;
      const Eigen::Index lo = r > 0 ? r - 1 : r;
      const Eigen::Index hi = r + 1 < m ? r + 1 : r;
      if (hi > lo && tr.g[lo] > 1e-300 && tr.g[hi] > 1e-300)
        dlng = (std::log(tr.g[hi]) - std::log(tr.g[lo])) /
               (cfg.dt * static_cast<double>(hi - lo));
      f << qhw::fmt_double(r * cfg.dt) << "," << qhw::fmt_double(tr.path.x[r]);
      for (int k = 0; k < cfg.service.K; ++k)
        f << "," << qhw::fmt_double(tr.path.z(r, k));
      f << "," << qhw::fmt_double(tr.g[r]) << "," << qhw::fmt_double(dlng)
        << "\n";
    }
  }
  qhw::write_g_plot(trajs, cfg.dt, out / "fluid_g.dat");

  json j;
  j["c_hat"] = band.c_hat;
  j["C_hat"] = band.C_hat;
  j["M_used"] = band.M_used;
  j["eps_hat"] = drift.eps_hat;
  j["C_drift"] = drift.C_hat;
  j["drift_feasible"] = drift.feasible;
  j["max_sqrt_g0"] = drift.max_sqrt_g0;
  j["trajectories"] = mono.trajectories;
  j["violations"] = mono.violations;
  j["max_violation"] = mono.max_violation;
  j["kappa"] = s.fn.kappa;
  write_json(j, out / "fluid_summary.json");
  qhw::write_manifest(man, out / "manifest.json");

  if (mono.violations > 0) {
    std::cerr << "FAIL: g increased along " << mono.violations
              << " fluid steps (max excess " << mono.max_violation << ")\n";
    return 1;
  }
  if (!(band.c_hat > 0.0)) {
    std::cerr << "FAIL: no positive geometric decay band outside the compact "
                 "set\n";
    return 1;
  }
  if (!drift.feasible) {
    std::cerr << "FAIL: no (C, eps > 0) satisfies the fluid contraction "
                 "inequality\n";
    return 1;
  }
  return 0;
}

int cmd_simulate(const qhw::ExperimentConfig& cfg, const fs::path& out,
                 std::uint64_t seed, const CommonArgs& args) {
  if (cfg.n_list.empty()) {
    std::cerr << "config error: simulate requires a non-empty n_list\n";
    return 2;
  }
  qhw::RunManifest man = base_manifest("simulate", cfg, seed, args);
  man.tolerances["manifold_tol"] = qhw::kManifoldTol;

  qhw::StationaryOptions opt;
  opt.burn_in = cfg.burn_in;
  opt.spacing = cfg.spacing;
  opt.n_samples = cfg.n_samples;

  const int count = static_cast<int>(cfg.n_list.size());
  std::vector<qhw::EmpiricalDist> dists(count);
  for_each_index(args.jobs, count, [&](int i) {
    const qhw::SystemConfig sc = cfg.make_system(cfg.n_list[i]);
    dists[i] = qhw::estimate_stationary(sc, opt, qhw::mix_seed(seed, 100 + i));
  });

  json summary = json::array();
  bool manifold_ok = true;
  for (int i = 0; i < count; ++i) {
    const auto& d = dists[i];
    for (std::size_t r = 0; r < d.size(); ++r)
      if (!qhw::on_manifold(d.x[r], d.z[r])) manifold_ok = false;
    write_samples_csv(d, out / ("samples_n" + std::to_string(d.n) + ".csv"),
                      true);
    double mean_plus = 0.0, mean_minus = 0.0;
    for (std::size_t r = 0; r < d.size(); ++r) {
      mean_plus += std::max(d.x[r], 0.0);
      mean_minus += std::max(-d.x[r], 0.0);
    }
    mean_plus /= static_cast<double>(d.size());
    mean_minus /= static_cast<double>(d.size());
    summary.push_back({{"n", d.n},
                       {"samples", d.size()},
                       {"mean_xplus", mean_plus},
                       {"mean_xminus", mean_minus},
                       {"se_xplus", d.se_xplus},
                       {"se_xminus", d.se_xminus},
                       {"lag1", d.lag1},
                       {"spacing", d.spacing},
                       {"burn_in", d.burn_in},
                       {"extensions", d.extensions},
                       {"extension_warning", d.extension_warning}});
  }
  write_json(summary, out / "simulate_summary.json");
  qhw::write_manifest(man, out / "manifest.json");
  if (!manifold_ok) {
    std::cerr << "FAIL: scaled-state manifold e'z + x^- = 0 violated\n";
    return 1;
  }
  return 0;
}

int cmd_diffusion(const qhw::ExperimentConfig& cfg, const fs::path& out,
                  std::uint64_t seed, const CommonArgs& args) {
  qhw::RunManifest man = base_manifest("diffusion", cfg, seed, args);
  man.tolerances["covariance_frobenius_rel"] = 0.10;
  man.tolerances["cross_trust_rel"] = 0.15;
  man.tolerances["psd_tol"] = 1e-10;

  const qhw::DerivedServiceData svc = qhw::derive(cfg.service);
  const double cu2 = cfg.make_interarrival().cu2();
  const qhw::DiffusionCoeffs derived =
      qhw::derive_covariance(cfg.service, cu2, cfg.alpha);

  const int n_val = cfg.n_list.empty() ? 200 : cfg.n_list.back();
  const double window = 0.25, cov_burn = 50.0;
  const double cov_t_end = cov_burn + 2000 * window;
  const qhw::Mat emp = qhw::empirical_increment_covariance(
      cfg.make_system(n_val), cov_t_end, window, cov_burn, cfg.dt,
      qhw::mix_seed(seed, 300));
  const qhw::Mat da = derived.assembled();
  const double frob_rel = (emp - da).norm() / da.norm();

  bool cross_warned = false;
  const qhw::DiffusionCoeffs used =
      qhw::reconcile_cross(derived, emp, cross_warned);

  qhw::StationaryOptions opt;
  opt.burn_in = cfg.burn_in;
  opt.spacing = cfg.spacing;
  opt.n_samples = cfg.n_samples;
  const qhw::EmpiricalDist pou = qhw::estimate_stationary_pou(
      used, cfg.beta, svc.mu, cfg.alpha, svc.R, cfg.service.p, cfg.dt, opt,
      qhw::mix_seed(seed, 301));
  write_samples_csv(pou, out / "diffusion_samples.csv", false);

  json j;
  j["var_u"] = used.var_u;
  j["cov_v"] = mat_rows(used.cov_v);
  j["cross"] = vec_arr(used.cross);
  j["derived_assembled"] = mat_rows(da);
  j["empirical_assembled"] = mat_rows(emp);
  j["frobenius_rel_error"] = frob_rel;
  j["cross_replaced_by_empirical"] = cross_warned;
  j["validation_n"] = n_val;
  double mean_x = 0.0;
  for (double x : pou.x) mean_x += x;
  mean_x /= static_cast<double>(pou.size());
  j["mean_x"] = mean_x;
  j["lag1"] = pou.lag1;
  if (cfg.service.K == 1) {
    const auto table = qhw::pou_1d_density_oracle(cfg.beta, cfg.alpha, svc.mu,
                                                  used.var_u);
    j["ks_vs_density_oracle"] =
        qhw::ks_1d(pou, table, qhw::marginal_x());
  }
  write_json(j, out / "diffusion_summary.json");
  qhw::write_manifest(man, out / "manifest.json");

  if (frob_rel > 0.10) {
    std::cerr << "FAIL: derived covariance differs from the empirical "
                 "increment covariance by "
              << frob_rel << " (relative Frobenius), tolerance 0.10\n";
    return 1;
  }
  return 0;
}

int cmd_interchange(const qhw::ExperimentConfig& cfg, const fs::path& out,
                    std::uint64_t seed, const CommonArgs& args) {
  if (cfg.n_list.size() < 3) {
    std::cerr << "config error: interchange requires at least 3 entries in "
                 "n_list\n";
    return 2;
  }
  qhw::RunManifest man = base_manifest("interchange", cfg, seed, args);
  man.tolerances["ks_final"] = 0.05;
  man.tolerances["tail_bound"] = 0.05;
  man.tolerances["diffusion_tail_level"] = 0.01;
  man.tolerances["monotone_noise_factor"] = 2.0;

  LyapunovSetup s = make_lyapunov(cfg, seed);

  qhw::StationaryOptions opt;
  opt.burn_in = cfg.burn_in;
  opt.spacing = cfg.spacing;
  opt.n_samples = cfg.n_samples;

  const int count = static_cast<int>(cfg.n_list.size());
  std::vector<qhw::EmpiricalDist> by_n(count);
  for_each_index(args.jobs, count, [&](int i) {
    const qhw::SystemConfig sc = cfg.make_system(cfg.n_list[i]);
    by_n[i] = qhw::estimate_stationary(sc, opt, qhw::mix_seed(seed, 100 + i));
  });

  const double cu2 = cfg.make_interarrival().cu2();
  const qhw::DiffusionCoeffs derived =
      qhw::derive_covariance(cfg.service, cu2, cfg.alpha);
  const double window = 0.25, cov_burn = 50.0;
  const qhw::Mat emp = qhw::empirical_increment_covariance(
      cfg.make_system(cfg.n_list.back()), cov_burn + 2000 * window, window,
      cov_burn, cfg.dt, qhw::mix_seed(seed, 300));
  bool cross_warned = false;
  const qhw::DiffusionCoeffs used =
      qhw::reconcile_cross(derived, emp, cross_warned);
  const qhw::EmpiricalDist pou = qhw::estimate_stationary_pou(
      used, cfg.beta, s.svc.mu, cfg.alpha, s.svc.R, cfg.service.p, cfg.dt,
      opt, qhw::mix_seed(seed, 301));

  const std::vector<double> s_grid =
      sqrt_g_quantiles(pou, s.fn, {0.5, 0.75, 0.9, 0.95, 0.99});
  const qhw::InterchangeReport rep =
      qhw::interchange_report(by_n, pou, s.fn, s_grid);

  {
    std::ofstream f(out / "interchange.csv");
    if (!f) throw std::runtime_error("cannot write interchange.csv");
    f << "n,ks_x,w1_x,ks_g";
    for (double sv : rep.s_grid) f << ",tail@" << qhw::fmt_double(sv);
    f << "\n";
    for (const auto& row : rep.rows) {
      f << row.n << "," << qhw::fmt_double(row.ks_x) << ","
        << qhw::fmt_double(row.w1_x) << "," << qhw::fmt_double(row.ks_g);
      for (double tv : row.tail) f << "," << qhw::fmt_double(tv);
      f << "\n";
    }
  }
  qhw::write_distance_plot(rep, out / "interchange_distances.dat");
  qhw::write_tail_plot(rep, out / "interchange_tails.dat");

  const double ks_final = rep.rows.back().ks_x;
  json j;
  j["distances_monotone"] = rep.distances_monotone;
  j["tails_bounded"] = rep.tails_bounded;
  j["ks_final"] = ks_final;
  j["detail"] = rep.detail;
  j["s_grid"] = rep.s_grid;
  j["diffusion_tail"] = rep.diffusion_tail;
  j["cross_replaced_by_empirical"] = cross_warned;
  json rows = json::array();
  for (const auto& row : rep.rows)
    rows.push_back({{"n", row.n},
                    {"ks_x", row.ks_x},
                    {"w1_x", row.w1_x},
                    {"ks_g", row.ks_g},
                    {"w1_g", row.w1_g},
                    {"ks_noise", row.ks_noise},
                    {"tail", row.tail}});
  j["rows"] = rows;
  if (cfg.service.K == 1) {
    const auto table = qhw::pou_1d_density_oracle(cfg.beta, cfg.alpha,
                                                  s.svc.mu, used.var_u);
    json ks_oracle = json::array();
    for (const auto& d : by_n)
      ks_oracle.push_back(
          {{"n", d.n}, {"ks", qhw::ks_1d(d, table, qhw::marginal_x())}});
    j["ks_vs_density_oracle"] = ks_oracle;
  }
  write_json(j, out / "interchange_summary.json");
  qhw::write_manifest(man, out / "manifest.json");

  if (!rep.distances_monotone) {
    std::cerr << "FAIL: distances to the diffusion increase beyond noise "
                 "across the n-sweep: "
              << rep.detail << "\n";
    return 1;
  }
  if (!rep.tails_bounded) {
    std::cerr << "FAIL: tail masses not uniformly bounded: " << rep.detail
              << "\n";
    return 1;
  }
  if (!(ks_final < 0.05)) {
    std::cerr << "FAIL: final KS distance " << ks_final << " not below 0.05\n";
    return 1;
  }
  return 0;
}

int cmd_harris(const qhw::ExperimentConfig& cfg, const fs::path& out,
               std::uint64_t seed, const CommonArgs& args) {
  qhw::RunManifest man = base_manifest("harris-check", cfg, seed, args);
  man.tolerances["drift_bound"] = -1.0;
  man.tolerances["grid_points_per_axis"] = 100;

  const qhw::InterarrivalDist dist = cfg.make_interarrival();
  const int n_bound = cfg.n_list.empty() ? 100 : cfg.n_list.back();
  const auto consts =
      qhw::petite_set_constants(dist, cfg.alpha, cfg.service.nu, n_bound);
  const auto grid =
      qhw::petite_grid_check(dist, cfg.alpha, cfg.service.nu, consts);

  json j;
  j["family"] = dist.name();
  j["C1"] = consts.C1;
  j["C2"] = consts.C2;
  j["H"] = consts.H;
  j["set"] = consts.set_description;
  j["grid_points"] = grid.points;
  j["worst_bound"] = grid.worst_bound;
  j["ok"] = grid.ok;
  std::cout << j.dump(2) << "\n";
  write_json(j, out / "harris.json");
  qhw::write_manifest(man, out / "manifest.json");

  if (!grid.ok) {
    std::cerr << "FAIL: generator upper bound exceeds -1 outside the petite "
                 "set (worst "
              << grid.worst_bound << ")\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Many-server queue laboratory: discrete-event simulation, "
               "fluid and diffusion limits, Lyapunov drift verification"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path,
                    "path to the JSON experiment config")
        ->required();
    sub->add_option("--out", args.out_override,
                    "output directory (overrides the config's out_dir)");
    sub->add_option("--seed-offset", args.seed_offset,
                    "offset added to the config seed");
    sub->add_option("--jobs", args.jobs, "maximum parallel jobs")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* c_cqlf = app.add_subcommand(
      "cqlf", "solve and certify the common quadratic Lyapunov matrix");
  CLI::App* c_fluid =
      app.add_subcommand("fluid", "fluid-model drift suite");
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "discrete-event stationary estimation per n");
  CLI::App* c_diff = app.add_subcommand(
      "diffusion",
      "diffusion covariance derivation/validation and stationary estimation");
  CLI::App* c_inter = app.add_subcommand(
      "interchange", "full pipeline: finite-n laws against the diffusion");
  CLI::App* c_harris = app.add_subcommand(
      "harris-check", "regeneration-structure drift constants and grid check");
  for (CLI::App* sub : {c_cqlf, c_fluid, c_sim, c_diff, c_inter, c_harris})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string err;
  auto loaded = qhw::load_config(args.config_path, err);
  if (!loaded) {
    std::cerr << "config error: " << err << "\n";
    return 2;
  }
  const qhw::ExperimentConfig cfg = *loaded;
  const fs::path out =
      args.out_override.empty() ? fs::path(cfg.out_dir)
                                : fs::path(args.out_override);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "config error: cannot create output directory "
              << out.string() << "\n";
    return 2;
  }
  const std::uint64_t seed =
      cfg.seed + static_cast<std::uint64_t>(args.seed_offset);

  try {
    if (c_cqlf->parsed()) return cmd_cqlf(cfg, out, seed, args);
    if (c_fluid->parsed()) return cmd_fluid(cfg, out, seed, args);
    if (c_sim->parsed()) return cmd_simulate(cfg, out, seed, args);
    if (c_diff->parsed()) return cmd_diffusion(cfg, out, seed, args);
    if (c_inter->parsed()) return cmd_interchange(cfg, out, seed, args);
    if (c_harris->parsed()) return cmd_harris(cfg, out, seed, args);
  } catch (const std::exception& e) {
    std::cerr << "FAIL: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
