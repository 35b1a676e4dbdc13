// End-to-end checks of the hpcadvisor binary.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HPCADVISOR_CLI;
const fs::path kData = HPCADVISOR_DATA_DIR;

struct CliResult {
  int code;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hpcadvisor_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) const {
    const auto log = dir_ / "stdout.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && SOURCE_DATE_EPOCH=1717200000 '" + kCli +
                            "' --catalog '" + (kData / "catalog.jsonl").string() + "' --out out " + args + " > '" +
                            log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
  }

  std::string grid() const { return (kData / "demo.grid").string(); }
  std::string model() const { return (kData / "demo_model.jsonl").string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpForEverySubcommand) {
  EXPECT_EQ(run("--help").code, 0);
  for (const char* sub : {"ingest", "simulate", "plan", "fit", "predict", "advise", "report"}) {
    auto r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
}

TEST_F(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run("frobnicate").code, 1); }

TEST_F(Cli, PlanPrintsReduction) {
  auto r = run("plan --grid '" + grid() + "'");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "executed 9 / 45 (80.0% reduction)");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "plan.txt"));
}

TEST_F(Cli, PlanRejectsBadProbes) { EXPECT_EQ(run("plan --grid '" + grid() + "' --probes 3").code, 1); }

TEST_F(Cli, FitWithoutTargetDataIsUserError) {
  auto r = run("fit --source HBv2 --target HC --input cells=1e6");
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("error:"), std::string::npos);
}

TEST_F(Cli, SimulateAdviseReport) {
  auto sim = run("simulate --grid '" + grid() + "' --model '" + model() + "'");
  ASSERT_EQ(sim.code, 0) << sim.out;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "dataset.jsonl"));

  auto adv = run("advise --input cells=1e6 --app openfoam");
  ASSERT_EQ(adv.code, 0) << adv.out;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "pareto.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "pareto.svg"));

  auto rep = run("report --kind all --input cells=1e6");
  ASSERT_EQ(rep.code, 0) << rep.out;
  for (const char* f : {"dataset.csv", "time_vs_vms.svg", "cost_vs_vms.svg", "pareto.svg"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
}

TEST_F(Cli, PlanExecuteWithSimulator) {
  auto r = run("plan --grid '" + grid() + "' --execute --backend simulate --model '" + model() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("45 records"), std::string::npos) << r.out;
}

TEST_F(Cli, CloudStubExecuteIsInternalError) {
  auto r = run("plan --grid '" + grid() + "' --execute --backend cloud-stub");
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(Cli, MissingCatalogIsUserError) {
  const std::string cmd = "'" + kCli + "' --catalog /nonexistent/catalog.jsonl --out '" + (dir_ / "o").string() +
                          "' plan --grid '" + grid() + "' > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
