/// @file config.hpp
/// @brief Experiment configuration (strict JSON), run manifests, and the CSV
/// formatting conventions that make reruns byte-identical.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qhw/des.hpp"

namespace qhw {

struct ExperimentConfig {
  std::string scenario;
  PhaseTypeParams service;
  std::string interarrival_family = "exponential";
  int erlang_m = 2;
  double hyperexp_q = 0.5, hyperexp_rate1 = 2.0, hyperexp_rate2 = 0.5;
  double lognormal_sigma = 1.0;
  double alpha = 1.0;
  double beta = 0.0;
  std::vector<int> n_list;
  double t_end = 10.0;
  double burn_in = 0.0;   ///< 0 → simulator default
  double spacing = 0.0;   ///< 0 → simulator default
  std::size_t n_samples = 10000;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  std::string out_dir = "out";

  InterarrivalDist make_interarrival() const;
  SystemConfig make_system(int n) const;
  /// Canonical key=value serialization; hashed into the manifest.
  std::string canonical_string() const;
};

/// Loads and validates a strict-mode JSON config: unknown keys anywhere are an
/// error, and all module invariants are checked at load. On failure returns
/// nullopt and fills `error` with the first violation.
std::optional<ExperimentConfig> load_config(const std::filesystem::path& path,
                                            std::string& error);

/// FNV-1a 64-bit hash, used for config fingerprints in manifests.
std::uint64_t fnv1a64(const std::string& s);

struct RunManifest {
  std::string subcommand;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::int64_t seed_offset = 0;
  int jobs = 1;
  std::string version = "1.0.0";
  std::map<std::string, double> tolerances;  ///< every pass/fail tolerance used
  std::map<std::string, std::string> extra;
};

/// Writes the manifest as pretty JSON (no timestamps; reruns are identical).
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

/// Shortest round-trip double formatting ("%.12g"), fixed across the codebase
/// so CSV output is byte-stable.
std::string fmt_double(double v);

}  // namespace qhw
