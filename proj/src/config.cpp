#include "qhw/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace qhw {

using nlohmann::json;

InterarrivalDist ExperimentConfig::make_interarrival() const {
  if (interarrival_family == "exponential")
    return InterarrivalDist::exponential(1.0);
  if (interarrival_family == "erlang")
    return InterarrivalDist::erlang(erlang_m, static_cast<double>(erlang_m));
  if (interarrival_family == "hyperexp")
    return InterarrivalDist::hyperexp(hyperexp_q, hyperexp_rate1,
                                      hyperexp_rate2);
  if (interarrival_family == "lognormal")
    return InterarrivalDist::lognormal_mean1(lognormal_sigma);
  if (interarrival_family == "deterministic")
    return InterarrivalDist::deterministic(1.0);
  throw std::invalid_argument("unknown interarrival family: " +
                              interarrival_family);
}

SystemConfig ExperimentConfig::make_system(int n) const {
  SystemConfig sc;
  sc.n = n;
  sc.beta = beta;
  sc.interarrival = make_interarrival();
  sc.service = service;
  sc.alpha = alpha;
  sc.finalize();
  return sc;
}

std::string ExperimentConfig::canonical_string() const {
  std::string s;
  s += "scenario=" + scenario;
  s += ";family=" + interarrival_family;
  s += ";erlang_m=" + std::to_string(erlang_m);
  s += ";hq=" + fmt_double(hyperexp_q) + "," + fmt_double(hyperexp_rate1) +
       "," + fmt_double(hyperexp_rate2);
  s += ";lsigma=" + fmt_double(lognormal_sigma);
  s += ";alpha=" + fmt_double(alpha) + ";beta=" + fmt_double(beta);
  s += ";K=" + std::to_string(service.K);
  s += ";p=";
  for (int k = 0; k < service.K; ++k) s += fmt_double(service.p[k]) + ",";
  s += ";nu=";
  for (int k = 0; k < service.K; ++k) s += fmt_double(service.nu[k]) + ",";
  s += ";P=";
  for (int i = 0; i < service.K; ++i)
    for (int k = 0; k < service.K; ++k) s += fmt_double(service.P(i, k)) + ",";
  s += ";n_list=";
  for (int n : n_list) s += std::to_string(n) + ",";
  s += ";t_end=" + fmt_double(t_end);
  s += ";burn_in=" + fmt_double(burn_in);
  s += ";spacing=" + fmt_double(spacing);
  s += ";n_samples=" + std::to_string(n_samples);
  s += ";seed=" + std::to_string(seed);
  s += ";dt=" + fmt_double(dt);
  return s;
}

namespace {

bool keys_allowed(const json& j, const std::set<std::string>& allowed,
                  const std::string& where, std::string& error) {
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      error = "unknown key \"" + item.key() + "\" in " + where;
      return false;
    }
  }
  return true;
}

}  // namespace

std::optional<ExperimentConfig> load_config(const std::filesystem::path& path,
                                            std::string& error) {
  std::ifstream f(path);
  if (!f) {
    error = "cannot open config file " + path.string();
    return std::nullopt;
  }
  json j;
  try {
    j = json::parse(f);
  } catch (const std::exception& e) {
    error = std::string("JSON parse error: ") + e.what();
    return std::nullopt;
  }
  if (!j.is_object()) {
    error = "config top level must be a JSON object";
    return std::nullopt;
  }
  static const std::set<std::string> top_keys = {
      "scenario",       "service",       "interarrival_family",
      "erlang_m",       "hyperexp_q",    "hyperexp_rate1",
      "hyperexp_rate2", "lognormal_sigma", "alpha",
      "beta",           "n_list",        "t_end",
      "burn_in",        "spacing",       "n_samples",
      "seed",           "dt",            "out_dir"};
  if (!keys_allowed(j, top_keys, "config", error)) return std::nullopt;

  ExperimentConfig cfg;
  try {
    cfg.scenario = j.value("scenario", cfg.scenario);
    cfg.interarrival_family =
        j.value("interarrival_family", cfg.interarrival_family);
    cfg.erlang_m = j.value("erlang_m", cfg.erlang_m);
    cfg.hyperexp_q = j.value("hyperexp_q", cfg.hyperexp_q);
    cfg.hyperexp_rate1 = j.value("hyperexp_rate1", cfg.hyperexp_rate1);
    cfg.hyperexp_rate2 = j.value("hyperexp_rate2", cfg.hyperexp_rate2);
    cfg.lognormal_sigma = j.value("lognormal_sigma", cfg.lognormal_sigma);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.t_end = j.value("t_end", cfg.t_end);
    cfg.burn_in = j.value("burn_in", cfg.burn_in);
    cfg.spacing = j.value("spacing", cfg.spacing);
    cfg.n_samples = j.value("n_samples", cfg.n_samples);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.dt = j.value("dt", cfg.dt);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("n_list"))
      cfg.n_list = j.at("n_list").get<std::vector<int>>();

    if (!j.contains("service")) {
      error = "missing required key \"service\"";
      return std::nullopt;
    }
    const json& sj = j.at("service");
    if (!sj.is_object()) {
      error = "\"service\" must be an object";
      return std::nullopt;
    }
    static const std::set<std::string> svc_keys = {"K", "p", "nu", "P"};
    if (!keys_allowed(sj, svc_keys, "service", error)) return std::nullopt;
    const int K = sj.at("K").get<int>();
    if (K < 1) {
      error = "service.K must be >= 1";
      return std::nullopt;
    }
    cfg.service.K = K;
    const auto pv = sj.at("p").get<std::vector<double>>();
    const auto nuv = sj.at("nu").get<std::vector<double>>();
    const auto Pv = sj.at("P").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(pv.size()) != K ||
        static_cast<int>(nuv.size()) != K ||
        static_cast<int>(Pv.size()) != K) {
      error = "service arrays must all have length K";
      return std::nullopt;
    }
    cfg.service.p.resize(K);
    cfg.service.nu.resize(K);
    cfg.service.P.resize(K, K);
    for (int k = 0; k < K; ++k) {
      cfg.service.p[k] = pv[k];
      cfg.service.nu[k] = nuv[k];
      if (static_cast<int>(Pv[k].size()) != K) {
        error = "service.P rows must have length K";
        return std::nullopt;
      }
      for (int c = 0; c < K; ++c) cfg.service.P(k, c) = Pv[k][c];
    }
  } catch (const std::exception& e) {
    error = std::string("config field error: ") + e.what();
    return std::nullopt;
  }

  // Module invariants, checked at load.
  const ValidationResult vr = validate(cfg.service);
  if (!vr.ok) {
    error = "service invalid: " + vr.message;
    return std::nullopt;
  }
  if (cfg.alpha <= 0.0) {
    error = "alpha must be > 0";
    return std::nullopt;
  }
  if (cfg.dt <= 0.0 || cfg.t_end <= 0.0) {
    error = "dt and t_end must be > 0";
    return std::nullopt;
  }
  if (cfg.burn_in < 0.0 || cfg.spacing < 0.0) {
    error = "burn_in and spacing must be >= 0";
    return std::nullopt;
  }
  if (cfg.n_samples < 1) {
    error = "n_samples must be >= 1";
    return std::nullopt;
  }
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    if (cfg.n_list[i] < 1) {
      error = "n_list entries must be >= 1";
      return std::nullopt;
    }
    if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1]) {
      error = "n_list must be strictly increasing";
      return std::nullopt;
    }
    if (cfg.beta >= std::sqrt(static_cast<double>(cfg.n_list[i]))) {
      error = "beta must be < sqrt(n) for every n in n_list";
      return std::nullopt;
    }
  }
  try {
    const InterarrivalDist d = cfg.make_interarrival();
    if (std::abs(d.mean() - 1.0) > 1e-10) {
      error = "interarrival mean must be 1 (got " + fmt_double(d.mean()) +
              "); adjust the family parameters";
      return std::nullopt;
    }
  } catch (const std::exception& e) {
    error = e.what();
    return std::nullopt;
  }
  return cfg;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  json j;
  j["subcommand"] = m.subcommand;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(m.config_hash));
  j["config_hash"] = std::string(buf);
  j["seed"] = m.seed;
  j["seed_offset"] = m.seed_offset;
  j["jobs"] = m.jobs;
  j["version"] = m.version;
  j["tolerances"] = m.tolerances;
  j["extra"] = m.extra;
  std::ofstream f(path);
  f << j.dump(2) << "\n";
  if (!f)
    throw std::runtime_error("cannot write manifest to " + path.string());
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace qhw
