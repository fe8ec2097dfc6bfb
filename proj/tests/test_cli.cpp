#include "support.hpp"

#include <cstdlib>
#include <sys/wait.h>

using namespace bngc;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(BNGC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bngc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("pipeline -i " + (dir / "absent.csv").string() + " -o " + (dir / "out").string()), 1);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_EQ(run("pipeline --no-such-flag"), 3);
  write_text(dir / "bad.toml", "bogus = 1\n");
  EXPECT_EQ(run("pipeline -c " + (dir / "bad.toml").string() + " -i x.csv"), 3);
  EXPECT_EQ(run("pipeline -i x.csv --set spectral.variant=nope"), 3);
  write_text(dir / "ragged.csv", "a,b\n1,2\n3\n");
  EXPECT_EQ(run("estimate-graph -i " + (dir / "ragged.csv").string() + " -o " + (dir / "g").string()), 1);
}

TEST(Cli, SimulatePipelineEvaluate) {
  const auto dir = scratch("flow");
  ASSERT_EQ(run("simulate --set n=150 --set p=20 --set K=3 --set n_partitions=1 --set n_datasets_per_partition=1 -o " +
                (dir / "sim").string()),
            0);
  ASSERT_TRUE(fs::exists(dir / "sim" / "partition0_dataset0.csv"));
  ASSERT_TRUE(fs::exists(dir / "sim" / "partition0_truth.csv"));
  ASSERT_EQ(run("pipeline -i " + (dir / "sim" / "partition0_dataset0.csv").string() + " -o " + (dir / "run").string() +
                " --seed 3"),
            0);
  ASSERT_TRUE(fs::exists(dir / "run" / "manifest.json"));
  EXPECT_EQ(run("evaluate -t " + (dir / "sim" / "partition0_truth.csv").string() + " -e " +
                (dir / "run" / "clusters.csv").string()),
            0);
  EXPECT_EQ(run("pipeline -m " + (dir / "run" / "manifest.json").string() + " -o " + (dir / "rerun").string()), 0);
  EXPECT_EQ(read_text(dir / "run" / "clusters.csv"), read_text(dir / "rerun" / "clusters.csv"));
  EXPECT_EQ(run("theorycheck --trials 5"), 0);
}
