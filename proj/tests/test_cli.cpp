#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "test_util.hpp"

namespace xke {
namespace {

using testing::TempDir;

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr together
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(XKE_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string synth_config(const TempDir& dir) {
  dir.write("run.conf",
            "train = data/train.tsv\nvalid = data/valid.tsv\ntest = data/test.tsv\nout = out\n"
            "seed = 11\nsynth.entities = 60\nsynth.layout = lattice\nsynth.density = 0.9\n"
            "dim = 10\nepochs = 20\n");
  return (dir / "run.conf").string();
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli("--help").code, 0); }

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run_cli("frobnicate").code, 2); }

TEST(Cli, MissingValidFileExitsTwoAndNamesIt) {
  TempDir dir;
  dir.write("train.tsv", "a\tr\tb\n");
  dir.write("c.conf", "train = train.tsv\nvalid = absent_valid.tsv\n");
  const auto r = run_cli("train-embedding --config " + (dir / "c.conf").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("absent_valid.tsv"), std::string::npos) << r.output;
}

TEST(Cli, BadConfigKeyExitsTwo) {
  TempDir dir;
  dir.write("c.conf", "no_such_key = 1\n");
  const auto r = run_cli("synth --config " + (dir / "c.conf").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(":1:"), std::string::npos) << r.output;
}

TEST(Cli, SynthThenRunEndToEnd) {
  TempDir dir;
  const auto conf = synth_config(dir);
  ASSERT_EQ(run_cli("synth --config " + conf + " --out " + (dir / "data").string()).code, 0);
  const auto r = run_cli("run --config " + conf);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("Fidelity"), std::string::npos);
  const auto again = run_cli("evaluate --config " + conf);
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(testing::read_file(dir / "out/metrics_true.json").empty(), false);
  const auto ex = run_cli("explain --config " + conf + " --triples " + (dir / "data/test.tsv").string());
  EXPECT_EQ(ex.code, 0) << ex.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "out/explanations_true.jsonl"));
}

TEST(Cli, SeedFlagOverridesConfig) {
  TempDir dir;
  const auto conf = synth_config(dir);
  ASSERT_EQ(run_cli("synth --config " + conf + " --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(run_cli("synth --config " + conf + " --seed 11 --out " + (dir / "b").string()).code, 0);
  ASSERT_EQ(run_cli("synth --config " + conf + " --seed 12 --out " + (dir / "c").string()).code, 0);
  EXPECT_EQ(testing::read_file(dir / "a/train.tsv"), testing::read_file(dir / "b/train.tsv"));
  EXPECT_NE(testing::read_file(dir / "a/train.tsv"), testing::read_file(dir / "c/train.tsv"));
}

}  // namespace
}  // namespace xke
