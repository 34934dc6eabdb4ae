#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "entnet/config.hpp"
#include "entnet/world.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

// Runs the CLI through the shell with ENTNET_OUTPUT_ROOT pointed at `root`.
Result run(const std::string& args, const fs::path& root) {
  const char* cli = std::getenv("ENTNET_CLI");
  REQUIRE(cli != nullptr);
  const std::string cmd = "ENTNET_OUTPUT_ROOT='" + root.string() + "' '" + cli + "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.output += buf;
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("entnet_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("generate writes a dataset with a header") {
  const fs::path root = scratch("gen");
  const Result r = run("generate --task world --T 10 --n 12 --seed 7", root);
  INFO(r.output);
  REQUIRE(r.status == 0);
  const fs::path file = root / "world_T10_seed7.txt";
  REQUIRE(fs::exists(file));
  std::ifstream in(file);
  const auto data = entnet::world::read_dataset(in);
  CHECK(data.header.at("seed") == "7");
  CHECK(data.header.at("T") == "10");
  CHECK(data.stories.size() == 12);
  for (const auto& s : data.stories) CHECK(entnet::world::world_oracle(s.actions, {}) == s.answers);

  // Same seed, same bytes.
  REQUIRE(run("generate --T 10 --n 12 --seed 7 --out " + (root / "again.txt").string(), root).status == 0);
  CHECK(slurp(file) == slurp(root / "again.txt"));
  fs::remove_all(root);
}

TEST_CASE("train, eval and inspect on a tiny world dataset") {
  const fs::path root = scratch("train");
  REQUIRE(run("generate --T 6 --n 60 --seed 3", root).status == 0);
  const std::string data = (root / "world_T6_seed3.txt").string();
  const Result tr = run("train --task world --data " + data +
                            " --split 40,10,10 --epochs 2 --seeds 1,2 --dim 8 --slots 3 --quiet",
                        root);
  INFO(tr.output);
  REQUIRE(tr.status == 0);
  const fs::path run_dir = root / "world";
  for (const char* f : {"config.txt", "summary.json", "seed1/metrics.csv", "seed1/metrics.json",
                        "seed1/checkpoint.bin", "seed2/checkpoint.bin"}) {
    CHECK(fs::exists(run_dir / f));
  }
  const auto cfg = entnet::FlatConfig::load((run_dir / "config.txt").string());
  CHECK(cfg.get_string("dim", "") == "8");
  CHECK(cfg.get_string("lr", "") == "0.01");
  CHECK(cfg.get_string("schedule", "") == "update");
  CHECK(cfg.get_string("seeds", "") == "1,2");
  CHECK(slurp(run_dir / "seed1/metrics.csv").starts_with("epoch,split,loss,error,lr,seed\n"));

  // The copied config reproduces the run bit for bit.
  const Result again = run("train --config " + (run_dir / "config.txt").string() + " --out " +
                               (root / "replay").string() + " --quiet",
                           root);
  REQUIRE(again.status == 0);
  CHECK(slurp(run_dir / "seed1/metrics.csv") == slurp(root / "replay/seed1/metrics.csv"));

  const Result ev = run("eval --checkpoint " + (run_dir / "seed1/checkpoint.bin").string() + " --data " + data, root);
  INFO(ev.output);
  CHECK(ev.status == 0);
  CHECK(ev.output.find("Mean error") != std::string::npos);

  const Result in = run("inspect --checkpoint " + (run_dir / "seed1/checkpoint.bin").string() + " --data " + data +
                            " --k 2",
                        root);
  INFO(in.output);
  CHECK(in.status == 0);
  CHECK(in.output.find("1-NN") != std::string::npos);
  CHECK(in.output.find("slot0") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("gradcheck subcommand") {
  const fs::path root = scratch("grad");
  const Result r = run("gradcheck --d 8 --m 3 --T 4", root);
  INFO(r.output);
  CHECK(r.status == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("user errors exit with status 1") {
  const fs::path root = scratch("err");
  CHECK(run("", root).status == 1);
  CHECK(run("frobnicate", root).status == 1);
  CHECK(run("train --task world --train " + (root / "missing.txt").string(), root).status == 1);
  CHECK(run("train --task chess", root).status == 1);
  CHECK(run("train --task world --set bogus_key=1", root).status == 1);
  std::ofstream(root / "bad.txt") << "not a checkpoint";
  CHECK(run("eval --checkpoint " + (root / "bad.txt").string() + " --data x", root).status == 1);
  CHECK(run("generate --task babi", root).status == 1);
  CHECK(run("--help", root).status == 0);
  fs::remove_all(root);
}
