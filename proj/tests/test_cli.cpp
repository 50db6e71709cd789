#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>

#include <json.hpp>

#include "cli.hpp"
#include "doctest.h"

using json = nlohmann::json;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = topo::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json run_json(std::vector<std::string> args) {
  args.insert(args.end(), {"--format", "json"});
  const auto r = run(args);
  REQUIRE(r.code == 0);
  return json::parse(r.out);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json without_timestamps(json j) {
  j["manifest"].erase("started_at");
  j["manifest"].erase("finished_at");
  return j;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("topoqst_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("evolve: normal SSH summary") {
  const auto j = run_json({"evolve", "--protocol", "normal_ssh", "--n", "20", "--t-total", "200", "--epsilon", "0.2"});
  const auto& r = j["result"];
  CHECK(r["abs_A"].get<double>() > 0.95);
  CHECK(std::abs(r["phase"].get<double>() - pi / 2) < 0.05);
  CHECK(r["z4_class"] == "+pi/2");
  CHECK(r["converged"] == true);
  CHECK(j["manifest"]["config"]["params"]["epsilon"] == 0.2);
  CHECK(j["manifest"]["command"] == "evolve");
}

TEST_CASE("evolve: mirror chain is exact") {
  const auto j = run_json({"evolve", "--protocol", "christandl", "--n", "4"});
  CHECK(std::abs(j["result"]["abs_A"].get<double>() - 1.0) < 1e-8);
  CHECK(j["manifest"]["config"]["total_time"].get<double>() == doctest::Approx(pi));
}

TEST_CASE("evolve: CSV schema and precision") {
  const auto r = run({"evolve", "--protocol", "edge_cosine", "--n", "5", "--t-total", "40", "--samples", "9"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"t", "site_1", "site_2", "site_3", "site_4", "site_5"});
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][1] == "1");
  CHECK(std::stod(rows[9][0]) == 40.0);
  double sum = 0.0;
  for (std::size_t i = 1; i < rows[5].size(); ++i) sum += std::stod(rows[5][i]);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // 17 significant digits round-trip exactly.
  const std::string cell = rows[5][3];
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", std::stod(cell));
  CHECK(cell == buf);
}

TEST_CASE("configuration errors exit with code 2") {
  const auto parity = run({"evolve", "--protocol", "normal_ssh", "--n", "19"});
  CHECK(parity.code == topo::cli::kConfigError);
  CHECK(parity.err.find("N must be even") != std::string::npos);
  CHECK(run({"evolve", "--protocol", "nope"}).code == topo::cli::kConfigError);
  CHECK(run({"evolve", "--protocol", "normal_ssh", "--alpha", "2"}).code == topo::cli::kConfigError);
  CHECK(run({"evolve", "--bogus"}).code == topo::cli::kConfigError);
  CHECK(run({}).code == topo::cli::kConfigError);
  CHECK(run({"evolve", "--h", "-1"}).code == topo::cli::kConfigError);
  CHECK(run({"ensemble", "--realizations", "2"}).code == topo::cli::kConfigError);
  CHECK(run({"ensemble", "--delta-list", "0.1,x"}).code == topo::cli::kConfigError);
  CHECK(run({"ensemble", "--delta-list", "0.2,0.1"}).code == topo::cli::kConfigError);
  CHECK(run({"ensemble", "--delta-list", "0.1", "--delta-max", "0.3"}).code == topo::cli::kConfigError);
  CHECK(run({"bands", "--samples", "1"}).code == topo::cli::kConfigError);
  CHECK(run({"sweep-period", "--t-min", "60", "--t-max", "50"}).code == topo::cli::kConfigError);
  CHECK(run({"phase-gate"}).code == topo::cli::kConfigError);
  CHECK(run({"phase-gate", "--n", "1"}).code == topo::cli::kConfigError);
  CHECK(run({"evolve", "--format", "xml"}).code == topo::cli::kConfigError);
  const auto help = run({"evolve", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--protocol") != std::string::npos);
}

TEST_CASE("ensemble: schema, order and reproducibility") {
  const std::vector<std::string> args{"ensemble", "--protocol", "edge_cosine", "--n", "7", "--t-total", "60",
                                      "--delta-max", "0.2", "--delta-steps", "2", "--realizations", "3",
                                      "--seed", "11", "--h", "0.2"};
  const auto a = run(args);
  REQUIRE(a.code == 0);
  const auto rows = parse_csv(a.out);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"delta", "k", "sub_seed", "abs_A", "phase", "fidelity"});
  const char* deltas[] = {"0", "0.10000000000000001", "0.20000000000000001"};
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(rows[i + 1][0] == deltas[i / 3]);
    CHECK(rows[i + 1][1] == std::to_string(i % 3 + 1));
  }
  CHECK(run(args).out == a.out);
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "4"});
  CHECK(run(threaded).out == a.out);

  const auto j = run_json(args);
  REQUIRE(j["summary"].size() == 3);
  CHECK(j["summary"][0]["class_counts"]["pi"] == 3);
  CHECK(j["summary"][0]["circular_std"].get<double>() == 0.0);
  CHECK(j["manifest"]["config"]["strengths"].size() == 3);
  CHECK(j["manifest"]["config"]["seed"] == 11);
  CHECK(j["failed_records"].empty());
}

TEST_CASE("manifest reruns reproduce outputs") {
  TempDir dir;
  const auto csv = (dir.path / "ens.csv").string();
  const std::vector<std::string> args{"ensemble", "--protocol", "edge_exponential", "--n", "7", "--t-total",
                                      "50", "--alpha", "4", "--delta-list", "0.05,0.3", "--realizations", "4",
                                      "--seed", "3", "--h", "0.2", "--out", csv};
  REQUIRE(run(args).code == 0);
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(csv + ".json"));
  CHECK_FALSE(fs::exists(csv + ".tmp"));

  const auto again = (dir.path / "again.csv").string();
  REQUIRE(run({"ensemble", "--manifest", csv + ".json", "--out", again}).code == 0);
  CHECK(slurp(csv) == slurp(again));
  CHECK(without_timestamps(json::parse(slurp(csv + ".json"))) ==
        without_timestamps(json::parse(slurp(again + ".json"))));

  // Explicit flags override the manifest.
  const auto more = run({"ensemble", "--manifest", csv + ".json", "--realizations", "2"});
  CHECK(parse_csv(more.out).size() == 5);

  CHECK(run({"evolve", "--manifest", csv + ".json"}).code == topo::cli::kConfigError);
  CHECK(run({"ensemble", "--manifest", (dir.path / "missing.json").string()}).code ==
        topo::cli::kConfigError);

  const auto evolve_out = (dir.path / "ev.json").string();
  REQUIRE(run({"evolve", "--protocol", "sqrt_interface", "--n", "7", "--t-total", "30", "--format", "json",
               "--out", evolve_out})
              .code == 0);
  const auto evolve_again = (dir.path / "ev2.json").string();
  REQUIRE(run({"evolve", "--manifest", evolve_out, "--format", "json", "--out", evolve_again}).code == 0);
  CHECK(without_timestamps(json::parse(slurp(evolve_out))) ==
        without_timestamps(json::parse(slurp(evolve_again))));
}

TEST_CASE("no output file is left behind on failure") {
  TempDir dir;
  const auto out = (dir.path / "bad.csv").string();
  CHECK(run({"evolve", "--protocol", "normal_ssh", "--n", "19", "--out", out}).code == topo::cli::kConfigError);
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(out + ".tmp"));
}

TEST_CASE("bands") {
  const auto pair = parse_csv(run({"bands", "--protocol", "christandl", "--n", "2", "--lambda-c", "2",
                                   "--samples", "4"})
                                  .out);
  REQUIRE(pair.size() == 5);
  CHECK(pair[0] == std::vector<std::string>{"t", "lambda_1", "lambda_2"});
  for (std::size_t i = 1; i < pair.size(); ++i) {
    CHECK(std::stod(pair[i][1]) == doctest::Approx(-1.0));
    CHECK(std::stod(pair[i][2]) == doctest::Approx(1.0));
  }

  const auto flat = run_json({"bands", "--protocol", "sqrt_interface", "--n", "19", "--samples", "50"});
  CHECK(flat["max_drift"].get<double>() < 1e-8);
  CHECK(flat["rows"].size() == 50);

  const auto cos = parse_csv(run({"bands", "--protocol", "edge_cosine", "--n", "19", "--samples", "101"}).out);
  REQUIRE(cos.size() == 102);
  for (std::size_t i = 1; i < cos.size(); ++i) {
    REQUIRE(cos[i].size() == 20);
    CHECK(std::abs(std::stod(cos[i][10])) < 0.05);
    for (std::size_t c = 2; c < cos[i].size(); ++c) CHECK(std::stod(cos[i][c - 1]) <= std::stod(cos[i][c]));
  }
}

TEST_CASE("sweep-period") {
  const auto none = run_json({"sweep-period", "--protocol", "sqrt_interface", "--n", "19", "--t-min", "5",
                              "--t-max", "10"});
  CHECK(none["peaks"].is_array());
  CHECK(none["peaks"].empty());

  const auto r = run({"sweep-period", "--n", "19", "--t-min", "40", "--t-max", "56"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  CHECK(rows[0] == std::vector<std::string>{"T", "P"});
  CHECK(rows.size() == 18);

  const auto j = run_json({"sweep-period", "--n", "19", "--t-min", "40", "--t-max", "56"});
  double best_t = 0.0, best_p = 0.0;
  for (const auto& p : j["peaks"]) {
    if (p["P"].get<double>() > best_p) {
      best_p = p["P"].get<double>();
      best_t = p["T"].get<double>();
    }
  }
  CHECK(best_t >= 46.0);
  CHECK(best_t <= 50.0);
  CHECK(best_p > 0.99);
  CHECK(j["manifest"]["config"]["protocol"] == "sqrt_interface");
}

TEST_CASE("phase-gate") {
  const auto g20 = run_json({"phase-gate", "--n", "20"});
  CHECK(g20["phi0"].get<double>() == doctest::Approx(-pi / 2));
  CHECK(g20["z4_class"] == "-pi/2");
  CHECK(g20["gate"][0] == json::array({1.0, 0.0}));
  CHECK(g20["gate"][3] == json::array({0.0, -1.0}));

  const auto g5 = run_json({"phase-gate", "--n", "5"});
  CHECK(g5["phi0"].get<double>() == 0.0);
  CHECK(g5["gate"][3] == json::array({1.0, 0.0}));

  const auto g19 = run({"phase-gate", "--n", "19"});
  REQUIRE(g19.code == 0);
  CHECK(json::parse(g19.out)["phi0"].get<double>() == doctest::Approx(pi));
}
