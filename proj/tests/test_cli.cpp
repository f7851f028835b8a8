#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#ifndef QHW_CLI_PATH
#error "QHW_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd =
      std::string(QHW_CLI_PATH) + " " + args + " > /dev/null 2> /dev/null";
  const int st = std::system(cmd.c_str());
  if (st == -1) return -1;
  return WEXITSTATUS(st);
}

fs::path workspace() {
  const fs::path dir = fs::temp_directory_path() / "qhw_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path p = workspace() / name;
  std::ofstream f(p);
  f << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string mini_config(const std::string& out_sub, int variant) {
  std::ostringstream ss;
  ss << R"({
  "scenario": "cli-mini",
  "service": { "K": 1, "p": [1.0], "nu": [1.0], "P": [[0.0]] },
  "interarrival_family": "exponential",
  "alpha": 0.5,
  "beta": 0.5,
  "n_list": [4, 8, 16],
  "t_end": 5.0,
  "burn_in": 20.0,
  "spacing": 1.0,
  "n_samples": )"
     << (variant == 0 ? 300 : 800) << R"(,
  "seed": 424242,
  "dt": 0.01,
  "out_dir": ")"
     << (workspace() / out_sub).string() << R"("
})";
  return ss.str();
}

std::string erlang_config(const std::string& out_sub) {
  return std::string(R"({
  "scenario": "cli-erlang",
  "service": { "K": 2, "p": [1.0, 0.0], "nu": [2.0, 2.0],
               "P": [[0.0, 1.0], [0.0, 0.0]] },
  "alpha": 0.5,
  "beta": 0.5,
  "n_list": [10],
  "t_end": 5.0,
  "seed": 7,
  "dt": 0.01,
  "out_dir": ")") +
         (workspace() / out_sub).string() + "\"\n}";
}

/// Every non-comment whitespace-separated token must parse as a finite double.
bool all_tokens_finite(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  bool any = false;
  while (std::getline(f, line)) {
    if (!line.empty() && line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      any = true;
      try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size() || !std::isfinite(v)) return false;
      } catch (...) {
        return false;
      }
    }
  }
  return any;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);
  CHECK(run("cqlf") == 2);  // --config is required
  CHECK(run("cqlf --config /nonexistent/p.json") == 2);
  const auto bad = write_file("bad.json", "{ not json");
  CHECK(run("cqlf --config " + bad.string()) == 2);
  const auto unknown = write_file("unknown.json", R"({
    "scenario": "x",
    "service": { "K": 1, "p": [1.0], "nu": [1.0], "P": [[0.0]] },
    "mystery_knob": 3
  })");
  CHECK(run("cqlf --config " + unknown.string()) == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("certificate run emits the solved matrix and a manifest") {
  const auto cfg = write_file("erl.json", erlang_config("out_cqlf"));
  CHECK(run("cqlf --config " + cfg.string()) == 0);
  const fs::path out = workspace() / "out_cqlf";
  REQUIRE(fs::exists(out / "cqlf.json"));
  REQUIRE(fs::exists(out / "manifest.json"));
  const json j = json::parse(slurp(out / "cqlf.json"));
  CHECK(j["Q"][0][0].get<double>() == doctest::Approx(35.0 / 32.0));
  CHECK(j["b"].get<double>() == doctest::Approx(1.0));
  CHECK(j["certificates"]["lmin_qr"].get<double>() > 0.0);
  const json man = json::parse(slurp(out / "manifest.json"));
  CHECK(man["subcommand"] == "cqlf");
  CHECK(man["tolerances"].size() > 0);
  CHECK(man.count("timestamp") == 0);
}

TEST_CASE("reruns are byte-identical and seed offsets change the draw") {
  const auto cfg = write_file("sim.json", mini_config("out_sim_a", 0));
  CHECK(run("simulate --config " + cfg.string()) == 0);
  const fs::path out_a = workspace() / "out_sim_a";
  REQUIRE(fs::exists(out_a / "samples_n4.csv"));
  const std::string first = slurp(out_a / "samples_n4.csv");
  CHECK(first.rfind("a,x,z1", 0) == 0);

  CHECK(run("simulate --config " + cfg.string()) == 0);
  CHECK(slurp(out_a / "samples_n4.csv") == first);

  CHECK(run("simulate --config " + cfg.string() + " --out " +
            (workspace() / "out_sim_b").string()) == 0);
  CHECK(slurp(workspace() / "out_sim_b" / "samples_n4.csv") == first);

  CHECK(run("simulate --config " + cfg.string() + " --seed-offset 1 --out " +
            (workspace() / "out_sim_c").string()) == 0);
  CHECK(slurp(workspace() / "out_sim_c" / "samples_n4.csv") != first);
}

TEST_CASE("parallel jobs do not change the bytes") {
  const auto cfg = write_file("sim2.json", mini_config("out_jobs_1", 0));
  CHECK(run("simulate --config " + cfg.string()) == 0);
  CHECK(run("simulate --config " + cfg.string() + " --jobs 3 --out " +
            (workspace() / "out_jobs_3").string()) == 0);
  for (int n : {4, 8, 16}) {
    const std::string f = "samples_n" + std::to_string(n) + ".csv";
    CHECK(slurp(workspace() / "out_jobs_1" / f) ==
          slurp(workspace() / "out_jobs_3" / f));
  }
}

TEST_CASE("regeneration check reports the closed-form exponential constant") {
  const auto cfg = write_file("har.json", mini_config("out_har", 0));
  CHECK(run("harris-check --config " + cfg.string()) == 0);
  const json j = json::parse(slurp(workspace() / "out_har" / "harris.json"));
  CHECK(j["C1"].get<double>() == doctest::Approx(std::log(6.0)).epsilon(1e-7));
  CHECK(j["ok"].get<bool>());
}

TEST_CASE("fluid run writes plot data with finite values only") {
  const auto cfg = write_file("fl.json", erlang_config("out_fluid"));
  CHECK(run("fluid --config " + cfg.string()) == 0);
  const fs::path out = workspace() / "out_fluid";
  REQUIRE(fs::exists(out / "fluid_g.dat"));
  CHECK(all_tokens_finite(out / "fluid_g.dat"));
  const json j = json::parse(slurp(out / "fluid_summary.json"));
  CHECK(j["c_hat"].get<double>() > 0.0);
  CHECK(j["violations"].get<int>() == 0);
  REQUIRE(fs::exists(out / "fluid_trajectory_1.csv"));
  const std::string head = slurp(out / "fluid_trajectory_1.csv").substr(0, 20);
  CHECK(head.rfind("t,x,z1,z2,g,dlng", 0) == 0);
}

TEST_CASE("interchange pipeline emits the report and plot files") {
  const auto cfg = write_file("ic.json", mini_config("out_ic", 1));
  const int code = run("interchange --config " + cfg.string());
  CHECK((code == 0 || code == 1));  // statistical gates may trip at this scale
  const fs::path out = workspace() / "out_ic";
  REQUIRE(fs::exists(out / "interchange.csv"));
  REQUIRE(fs::exists(out / "interchange_distances.dat"));
  REQUIRE(fs::exists(out / "interchange_tails.dat"));
  REQUIRE(fs::exists(out / "interchange_summary.json"));
  CHECK(all_tokens_finite(out / "interchange_distances.dat"));
  CHECK(all_tokens_finite(out / "interchange_tails.dat"));
  const std::string csv = slurp(out / "interchange.csv");
  CHECK(csv.rfind("n,ks_x,w1_x,ks_g,tail@", 0) == 0);
  int rows = 0;
  for (char ch : csv)
    if (ch == '\n') ++rows;
  CHECK(rows == 4);  // header + one row per n
  const json j = json::parse(slurp(out / "interchange_summary.json"));
  CHECK(j.count("distances_monotone") == 1);
  CHECK(j.count("ks_vs_density_oracle") == 1);  // scalar service
}

}  // TEST_SUITE
