#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "sgm/rng.hpp"
#include "sgm/run_io.hpp"

#ifndef SGM_CLI_PATH
#define SGM_CLI_PATH "sgm"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SGM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sgm_cli_" + std::to_string(sgm::RngStream(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli end to end: generate, match, eval") {
  TempDir tmp;
  const std::string out = (tmp.path / "out").string();
  const std::string common =
      " --seed 5 --n-graphs 3 --n-ref 10 --mu-pert 0 --edge-del-p 0 --kappa 1000 "
      "--repetitions 1 --workers 2 --out " + out;

  REQUIRE(run("generate" + common) == 0);
  const std::string pop = out + "/populations/kappa1000_rep0.json";
  REQUIRE(fs::exists(pop));

  REQUIRE(run("match " + pop + " --method msync --out " + out + "/runs --seed 5") == 0);
  const std::string meta = out + "/runs/kappa1000_rep0_msync.meta.json";
  const std::string assign = out + "/runs/kappa1000_rep0_msync.assign.csv";
  REQUIRE(fs::exists(meta));
  REQUIRE(fs::exists(assign));
  const auto j = sgm::load_run_metadata(meta);
  REQUIRE(j.at("consistency_verified").get<bool>());
  REQUIRE(j.at("method").get<std::string>() == "msync");

  REQUIRE(run("eval " + meta + " " + pop + " --out " + out + "/eval") == 0);
  REQUIRE(fs::exists(out + "/eval/kappa1000_rep0_msync_metrics.csv"));
  REQUIRE(fs::exists(out + "/eval/kappa1000_rep0_msync_nodes.csv"));
  const auto rows = sgm::read_metrics_csv(out + "/eval/kappa1000_rep0_msync_metrics.csv");
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].f1.has_value());
  REQUIRE(*rows[0].f1 == 1.0);  // zero-noise population

  // evaluating straight from the triplets file also works
  REQUIRE(run("eval " + assign + " " + pop + " --out " + out + "/eval2") == 0);

  // mals hyperparameter override lands in the metadata
  REQUIRE(run("match " + pop + " --method mals --mals-threshold 0.7 --out " + out +
              "/runs --seed 5") == 0);
  const auto mals_meta = sgm::load_run_metadata(out + "/runs/kappa1000_rep0_mals.meta.json");
  REQUIRE(mals_meta.at("hyperparameters").at("mals").at("threshold").get<double>() == 0.7);
}

TEST_CASE("cli exit codes") {
  TempDir tmp;
  const std::string out = (tmp.path / "out").string();
  // config error: unknown method
  REQUIRE(run("match nonexistent.json --method nope --out " + out) == 2);
  // config error: bad parameter value
  REQUIRE(run("generate --edge-del-p 1.5 --out " + out) == 2);
  // io error: missing population
  REQUIRE(run("match nonexistent.json --method msync --out " + out) == 4);
  // parse error: malformed subcommand
  REQUIRE(run("frobnicate") == 2);
  // benchmark on a tiny config succeeds
  REQUIRE(run("benchmark --seed 7 --n-graphs 3 --n-ref 10 --mu-pert 0 --edge-del-p 0 "
              "--kappa 500,1000 --repetitions 1 --methods pairwise,msync --workers 2 --out " +
              out + "/bench") == 0);
  REQUIRE(fs::exists(out + "/bench/summary.csv"));
}
