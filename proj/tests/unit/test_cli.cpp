#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <json.hpp>

#include "bstc/chain_io.hpp"
#include "bstc/data.hpp"
#include "bstc/partition.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using namespace bstc;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("bstc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }

  /// Small simulated dataset on the default grid with few periods.
  void simulate(int periods = 4) {
    const auto r = run({"simulate", "--preset", "appendix-e", "--seed", "7", "--periods", std::to_string(periods),
                        "--out", p("sim")});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_F(CliTest, SimulateWritesDatasetAndManifest) {
  simulate();
  for (const char* f : {"panel.csv", "adjacency.csv", "truth.csv", "truth_partition.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;
  const auto m = nlohmann::json::parse(slurp(dir / "sim" / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["seed"], 7);
  const auto tiled = run({"simulate", "--seed", "7", "--periods", "4", "--tiling", BSTC_TILING_FILE, "--out", p("sim2")});
  ASSERT_EQ(tiled.code, 0) << tiled.err;
  EXPECT_EQ(slurp(dir / "sim" / "panel.csv"), slurp(dir / "sim2" / "panel.csv"));
}

TEST_F(CliTest, FitSummarizeFixedRefitMetricsWorkflow) {
  simulate(5);
  const auto panel = p("sim/panel.csv"), adj = p("sim/adjacency.csv");
  auto r = run({"fit", "--panel", panel, "--adj", adj, "--iterations", "60", "--burn-in", "20", "--thin", "2",
                "--seed", "3", "--out", p("run1")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("stored draws: 20"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "run1" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "run1" / "config.resolved"));

  const auto manifest = nlohmann::json::parse(slurp(dir / "run1" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "fit");
  EXPECT_EQ(manifest["seed"], 3);
  ASSERT_EQ(manifest["inputs"].size(), 2u);
  EXPECT_EQ(manifest["inputs"][0]["sha256"].get<std::string>().size(), 64u);

  r = run({"summarize", "--draws", p("run1"), "--loss", "binder", "--a", "1", "--b", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(dir / "run1" / "partition_binder.csv"));
  r = run({"summarize", "--draws", p("run1"), "--loss", "gvi", "--out", p("gvi.csv"), "--psm", p("psm.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "psm.csv"));

  r = run({"fit", "--panel", panel, "--adj", adj, "--iterations", "40", "--burn-in", "10", "--thin", "1",
           "--fixed-partition", p("run1/partition_binder.csv"), "--out", p("run2")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fixed = read_chain_output(dir / "run2");
  const auto ids = load_panel(panel).unit_ids;
  const Labels est = read_partition_csv(dir / "run1" / "partition_binder.csv", ids);
  for (const auto& s : fixed.allocations) EXPECT_EQ(s, est);

  r = run({"metrics", "--draws", p("run2"), "--panel", panel, "--adj", adj, "--t0", "4", "--iterations", "40",
           "--burn-in", "10", "--out", p("metrics.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir / "metrics.csv");
  EXPECT_NE(text.find("waic,all,"), std::string::npos);
  EXPECT_NE(text.find("predictive_loglik,4,"), std::string::npos);
  EXPECT_NE(text.find("predictive_loglik,5,"), std::string::npos);
  EXPECT_NE(text.find("lml_sum,all,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "metrics.csv.manifest.json"));
}

TEST_F(CliTest, FitIsReproducibleFromSeed) {
  simulate();
  const std::vector<std::string> base{"fit", "--panel", p("sim/panel.csv"), "--adj", p("sim/adjacency.csv"),
                                      "--iterations", "30", "--burn-in", "10", "--chains", "2", "--seed", "5"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", p("a")});
  b.insert(b.end(), {"--out", p("b")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  for (const char* f : {"allocations.csv", "scalars.csv", "w.csv", "loglik.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST_F(CliTest, ConfigFileAndOverrides) {
  simulate();
  std::ofstream(dir / "c.cfg") << "iterations = 30\nburn_in = 10\nthin = 5\nalpha_rho = 1\n";
  const auto r = run({"fit", "--panel", p("sim/panel.csv"), "--adj", p("sim/adjacency.csv"), "--config",
                      p("c.cfg"), "--set", "beta_rho=1", "--thin", "1", "--out", p("run")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto resolved = slurp(dir / "run" / "config.resolved");
  EXPECT_NE(resolved.find("thin = 1\n"), std::string::npos);
  EXPECT_NE(resolved.find("alpha_rho = 1\n"), std::string::npos);
  EXPECT_NE(resolved.find("beta_rho = 1\n"), std::string::npos);
  EXPECT_NE(resolved.find("iterations = 30\n"), std::string::npos);
}

TEST_F(CliTest, ExploreReportsAutocorrelation) {
  std::ofstream(dir / "panel.csv") << "unit,time,y\na,1,1\nb,1,-1\nc,1,-1\nd,1,1\n";
  std::ofstream(dir / "adj.csv") << "unit_a,unit_b\na,b\na,c\nb,d\nc,d\n";
  const auto r = run({"explore", "--panel", p("panel.csv"), "--adj", p("adj.csv"), "--out", p("auto.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir / "auto.csv");
  EXPECT_NE(text.find("morans_i,mean,-1"), std::string::npos) << text;
  EXPECT_NE(text.find("gearys_c,mean,1.5"), std::string::npos) << text;
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  auto r = run({"simulate", "--out", p("s"), "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  simulate();
  r = run({"fit", "--panel", p("sim/panel.csv"), "--adj", p("sim/adjacency.csv"), "--set", "warmup=3", "--out",
           p("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("warmup"), std::string::npos);
  r = run({"fit", "--panel", p("sim/panel.csv"), "--adj", p("sim/adjacency.csv"), "--set", "thin=0", "--out",
           p("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("thin"), std::string::npos);
  r = run({"fit", "--panel", p("missing.csv"), "--adj", p("sim/adjacency.csv"), "--out", p("x")});
  EXPECT_EQ(r.code, 1);
  // A non-finite response cannot be sampled: the loader rejects it up front.
  std::ofstream(dir / "bad.csv") << "unit,time,y\na,1,nan\na,2,1\n";
  r = run({"explore", "--panel", p("bad.csv"), "--adj", p("sim/adjacency.csv")});
  EXPECT_EQ(r.code, 1);
}
