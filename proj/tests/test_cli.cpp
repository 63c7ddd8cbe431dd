#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "support.hpp"

using namespace hfp;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hfp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the CLI with stdout and stderr sent to files; returns the exit code.
  int hfp(const std::string& args, const std::string& out = "stdout.txt") const {
    const std::string cmd = std::string(HFP_CLI_PATH) + " " + args + " > " + path(out) + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string text(const std::string& name) const { return read_file(path(name)); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateThenRun) {
  ASSERT_EQ(hfp("gen --blocks 12 --nets 16 --dies 2 --seed 4 --out " + path("d.json")), 0);
  const Design d = load_design(path("d.json"));
  EXPECT_EQ(d.blocks.size(), 12u);
  ASSERT_EQ(hfp("run --design " + path("d.json") + " --method sa --seed 3 --max-steps 300 --out " +
                path("r.json") + " --svg " + path("r.svg")),
            0);
  const json r = json::parse(text("r.json"));
  EXPECT_EQ(r.at("method"), "sa");
  EXPECT_NEAR(reevaluate_result(d, r).f, r.at("objective").at("f").get<double>(), 1e-9 * r.at("objective").at("f").get<double>());
  EXPECT_EQ(text("r.svg").rfind("<?xml", 0), 0u);
  EXPECT_NE(text("stdout.txt").find("sa seed 3"), std::string::npos);
}

TEST_F(Cli, RunWithoutOutPrintsJson) {
  ASSERT_EQ(hfp("gen --blocks 6 --nets 6 --seed 1 --out " + path("d.json")), 0);
  ASSERT_EQ(hfp("run --design " + path("d.json") + " --method baseline"), 0);
  EXPECT_EQ(json::parse(text("stdout.txt")).at("method"), "baseline");
}

TEST_F(Cli, BudgetPerDieFlag) {
  ASSERT_EQ(hfp("gen --blocks 12 --nets 16 --dies 2 --seed 3 --out " + path("d.json")), 0);
  ASSERT_EQ(hfp("run --design " + path("d.json") + " --method sa --seed 1 --max-steps 100 --budget-per-die"), 0);
  const json r = json::parse(text("stdout.txt"));
  EXPECT_TRUE(r.at("config").at("budget_per_die").get<bool>());
  EXPECT_GT(r.at("steps").get<int>(), 100);
  EXPECT_LE(r.at("steps").get<int>(), 200);
}

TEST_F(Cli, OutputsAreByteIdentical) {
  ASSERT_EQ(hfp("gen --blocks 10 --nets 14 --dies 2 --seed 9", "g1.json"), 0);
  ASSERT_EQ(hfp("gen --blocks 10 --nets 14 --dies 2 --seed 9", "g2.json"), 0);
  EXPECT_EQ(text("g1.json"), text("g2.json"));

  const std::string design = " --design " + path("g1.json");
  for (const char* m : {"sa", "rl"}) {
    const std::string args = "run" + design + " --method " + m + " --seed 2 --max-steps 300";
    ASSERT_EQ(hfp(args, "r1.json"), 0);
    ASSERT_EQ(hfp(args, "r2.json"), 0);
    EXPECT_EQ(text("r1.json"), text("r2.json")) << m;
  }
  const std::string bench = "bench" + design + " --methods baseline,sa --seeds 2 --max-steps 200";
  ASSERT_EQ(hfp(bench, "b1.json"), 0);
  ASSERT_EQ(hfp(bench, "b2.json"), 0);
  EXPECT_EQ(text("b1.json"), text("b2.json"));

  const std::string abl = "ablate" + design + " --axis n_max --grid 1,4 --seeds 2 --max-steps 200";
  ASSERT_EQ(hfp(abl, "a1.json"), 0);
  ASSERT_EQ(hfp(abl, "a2.json"), 0);
  EXPECT_EQ(text("a1.json"), text("a2.json"));
}

TEST_F(Cli, AgentRoundTrip) {
  ASSERT_EQ(hfp("gen --blocks 8 --nets 10 --seed 2 --out " + path("d.json")), 0);
  const std::string base = "run --design " + path("d.json") + " --method rl --seed 1 --max-steps 200";
  ASSERT_EQ(hfp(base + " --save-agent " + path("a.json")), 0);
  EXPECT_NO_THROW(load_agent(path("a.json")));
  EXPECT_EQ(hfp(base + " --load-agent " + path("a.json")), 0);
  EXPECT_EQ(hfp("run --design " + path("d.json") + " --method sa --save-agent " + path("b.json")), 64);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(hfp("run --design x.json --bogus"), 64);
  EXPECT_EQ(hfp("frobnicate"), 64);
  EXPECT_EQ(hfp("run --design " + path("missing.json")), 1);

  ASSERT_EQ(hfp("gen --blocks 6 --nets 6 --seed 1 --out " + path("d.json")), 0);
  EXPECT_EQ(hfp("run --design " + path("d.json") + " --method annealing"), 64);
  EXPECT_EQ(hfp("ablate --design " + path("d.json") + " --axis colour --grid 1"), 64);

  // A hard IP locked to the oldest node, but every die uses the newer one.
  Design d = lock_hard_ips(test::small_generated(6, 1), 1);
  const std::size_t newer = d.oldest_tech() == 0 ? 1 : 0;
  for (Die& die : d.dies) die.tech = newer;
  save_design(d, path("ip.json"));
  EXPECT_EQ(hfp("run --design " + path("ip.json") + " --method sa"), 2);
  EXPECT_EQ(hfp("run --design " + path("ip.json") + " --method baseline"), 2);

  write_file(path("bad.json"), "{\"technologies\": 3}");
  EXPECT_EQ(hfp("run --design " + path("bad.json")), 2);
  EXPECT_NE(text("stderr.txt").find("/technologies"), std::string::npos);
}
