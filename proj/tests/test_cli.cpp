#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = slowfast::cli::cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("slowfast-cli-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("list-models") {
  const auto r = run({"list-models"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["command"] == "list-models");
  CHECK(j["report"]["models"].size() == 3);
}

TEST_CASE("usage errors exit with 2") {
  auto r = run({"classify", "--model", "example21"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--x") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);

  r = run({"stationary", "--x", "0.5"});
  CHECK(r.code == 2);
  r = run({"classify", "--model", "nosuchmodel", "--x", "0.5"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "unknown-name");
  r = run({});
  CHECK(r.code == 2);
  r = run({"averaged", "--model", "example21", "--x-grid", "0:1"});
  CHECK(r.code == 2);
}

TEST_CASE("numerical errors exit with 3 and a JSON diagnostic") {
  // sigma(x, y) = y vanishes at y = 0, so the convergence study refuses example21.
  const auto r = run({"converge", "--model", "example21", "--n-paths", "10", "--epsilons", "0.1"});
  CHECK(r.code == 3);
  const auto j = json::parse(r.err);
  CHECK(j["error"] == "degeneracy");
  CHECK(j["exit_code"] == 3);
}

TEST_CASE("classify example21") {
  const auto r = run({"classify", "--model", "example21", "--x", "0.5"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["report"]["strongly_ergodic"] == false);
  CHECK(j["report"]["exp_ergodic"] == true);
  CHECK(j["params"]["x"] == 0.5);
}

TEST_CASE("averaged csv reproduces 2 - x") {
  const auto r = run({"averaged", "--model", "example21", "--x-grid", "0:1:0.1", "--format", "csv"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,b_bar,a_bar,sigma_bar");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string a, b;
    std::getline(cells, a, ',');
    std::getline(cells, b, ',');
    const double x = std::stod(a), bb = std::stod(b);
    if (x > 0) {
      CHECK(std::abs(bb - (2 - x)) < 1e-6);
    } else {
      CHECK(std::abs(bb - 1) < 1e-6);
    }
    ++rows;
  }
  CHECK(rows == 11);
}

TEST_CASE("manifests replay bit-identically") {
  const auto dir = scratch_dir();
  const auto first = dir / "decay.json";
  const auto second = dir / "decay-replay.json";
  auto r = run({"decay", "--model", "ou-coupled", "--kind", "coupling", "--x", "0", "--y", "2", "--y-prime",
                "-1", "--times", "0.5:2:0.5", "--n-paths", "64", "--seed", "99", "--workers", "1", "--out",
                first.string()});
  REQUIRE(r.code == 0);
  const auto manifest = json::parse(slurp(dir / "decay.json.manifest.json"));
  CHECK(manifest["command"] == "decay");
  CHECK(manifest["seed"] == 99);
  CHECK(manifest.contains("artifact_version"));
  CHECK(manifest.contains("params"));

  r = run({"replay", "--manifest", (dir / "decay.json.manifest.json").string(), "--out", second.string(),
           "--workers", "3"});
  REQUIRE(r.code == 0);
  CHECK(slurp(first) == slurp(second));
  fs::remove_all(dir);
}

TEST_CASE("config files feed the simulation config") {
  const auto dir = scratch_dir();
  const auto cfg = dir / "run.ini";
  {
    std::ofstream f(cfg);
    f << "n_paths = 50\nseed = 5\ndt = 0.01\nhorizon = 1\n";
  }
  auto r = run({"l2fail", "--config", cfg.string(), "--epsilons", "0.1"});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["seed"] == 5);
  CHECK(j["report"]["n_paths"] == 50);
  // Flags override the file.
  r = run({"l2fail", "--config", cfg.string(), "--epsilons", "0.1", "--seed", "6"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["seed"] == 6);
  {
    std::ofstream f(cfg);
    f << "n_pathz = 50\n";
  }
  CHECK(run({"l2fail", "--config", cfg.string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("distance and stationary") {
  auto r = run({"distance", "--model", "example21", "--metric", "w1", "--x1", "0.3", "--x2", "0"});
  REQUIRE(r.code == 0);
  CHECK(std::abs(json::parse(r.out)["report"]["distance"]["value"].get<double>() - 0.7) < 1e-4);
  r = run({"stationary", "--model", "ou-coupled", "--x", "1", "--points", "512", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("y,density\n", 0) == 0);
}

TEST_CASE("holder estimates lambda and K3 when omitted") {
  const auto r = run({"holder", "--model", "ou-coupled", "--pairs", "0:0.1,0:0.5", "--n-paths", "500"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(std::abs(j["params"]["K3"].get<double>() - 1.0) < 0.01);
  CHECK(std::abs(j["params"]["lambda"].get<double>() - 1.0) < 0.1);
  CHECK(j["report"]["bound_satisfied"] == true);
}
