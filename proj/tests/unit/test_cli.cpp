#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <sys/wait.h>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const int status = std::system((NETTOMO_CLI_PATH " "s + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nettomo_cli_"s + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "small.json") << R"({"sim": {"n_exterior": 4, "ticks": 20}, "detect": {"null_draws": 20}})";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("simulate"), 2);
  std::ofstream(path("bad.json")) << R"({"sim": {"bogus": 1}})";
  EXPECT_EQ(run("simulate --config " + path("bad.json") + " --out " + path("o")), 2);
  EXPECT_EQ(run("simulate --config " + path("absent.json") + " --out " + path("o")), 1);
  EXPECT_EQ(run("estimate --observations " + path("absent.json") + " --out " + path("e.json")), 1);
  EXPECT_EQ(run("study --config " + path("small.json") + " --out " + path("s")), 2);
  EXPECT_EQ(run("study --study nonsense --out " + path("s")), 2);
}

TEST_F(Cli, PipelineAndGolden) {
  const std::string cfg = " --config " + path("small.json") + " --seed 7";
  ASSERT_EQ(run("simulate" + cfg + " --out " + path("sim")), 0);
  EXPECT_EQ(slurp(path("sim/ground_truth.json")), slurp(fs::path(NETTOMO_GOLDEN_DIR) / "ground_truth_seed7.json"));
  EXPECT_EQ(slurp(path("sim/observations.json")), slurp(fs::path(NETTOMO_GOLDEN_DIR) / "observations_seed7.json"));
  ASSERT_EQ(run("estimate" + cfg + " --observations " + path("sim/observations.json") + " --out " + path("est.json")), 0);
  ASSERT_EQ(run("estimate" + cfg + " --observations " + path("sim/observations.json") + " --estimator oracle --traffic " +
                path("sim/traffic.json") + " --out " + path("oracle.json")),
            0);
  EXPECT_EQ(run("estimate" + cfg + " --observations " + path("sim/observations.json") +
                " --estimator oracle --out " + path("x.json")),
            2);
  ASSERT_EQ(run("detect" + cfg + " --observations " + path("sim/observations.json") + " --estimate " + path("est.json") +
                " --threshold 0.5 --out " + path("det.json")),
            0);
  EXPECT_EQ(run("detect" + cfg + " --observations " + path("sim/observations.json") + " --estimate " +
                path("sim/ground_truth.json") + " --out " + path("det2.json")),
            1);
}

TEST_F(Cli, RerunsAndThreadsAreByteIdentical) {
  const std::string cfg = " --config " + path("small.json") + " --seed 3";
  for (const char* name : {"a", "b", "c"}) {
    const std::string threads = name == "c"s ? " --threads 3" : " --threads 1";
    const std::string out = path(name);
    ASSERT_EQ(run("simulate" + cfg + " --out " + out), 0);
    ASSERT_EQ(run("estimate" + cfg + " --observations " + out + "/observations.json --out " + out + "/est.json"), 0);
    ASSERT_EQ(run("detect" + cfg + threads + " --observations " + out + "/observations.json --estimate " + out +
                  "/est.json --out " + out + "/det.json"),
              0);
  }
  for (const char* file : {"ground_truth.json", "traffic.json", "observations.json", "est.json", "det.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / file), slurp(dir_ / "b" / file)) << file;
    EXPECT_EQ(slurp(dir_ / "a" / file), slurp(dir_ / "c" / file)) << file;
  }
}
