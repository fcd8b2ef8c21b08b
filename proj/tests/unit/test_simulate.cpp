#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "bstc/errors.hpp"
#include "bstc/partition.hpp"
#include "bstc/simulate.hpp"
#include "fixtures.hpp"

using namespace bstc;
using namespace bstc::testing;

TEST(Tiling, BuiltInMatchesShippedFile) {
  const Labels t = grid10_tiling();
  EXPECT_EQ(load_tiling(BSTC_TILING_FILE, 10, 10), t);
  ASSERT_EQ(cluster_count(t), 7);
  std::vector<int> sizes(7, 0);
  for (int l : t) ++sizes[l];
  EXPECT_EQ(sizes, (std::vector<int>{15, 15, 12, 18, 12, 16, 12}));
}

TEST(Tiling, RegionsAreContiguous) {
  const Labels t = grid10_tiling();
  const auto g = rook_grid(10, 10);
  for (int region = 0; region < 7; ++region) {
    std::vector<std::size_t> stack;
    std::vector<char> seen(100, 0);
    for (std::size_t i = 0; i < 100; ++i)
      if (t[i] == region) {
        stack.push_back(i);
        seen[i] = 1;
        break;
      }
    std::size_t reached = 0;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      ++reached;
      for (auto v : g.neighbors(u))
        if (!seen[v] && t[v] == region) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    EXPECT_EQ(reached, static_cast<std::size_t>(std::count(t.begin(), t.end(), region)));
  }
}

TEST(Simulate, DefaultDesign) {
  SimulationSpec spec;
  const auto sim = simulate_dataset(spec);
  EXPECT_EQ(sim.data.units(), 100u);
  EXPECT_EQ(sim.data.coefficients(), 4u);
  EXPECT_EQ(sim.truth.cluster.k(), 7);
  EXPECT_EQ(sim.truth.rho, 0.95);
  EXPECT_EQ(sim.truth.sigma2, 1.0);
  EXPECT_EQ(sim.truth.tau2, 1.0);
  for (double x : sim.truth.cluster.xis) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NO_THROW(sim.data.validate());
  EXPECT_EQ(sim.graph.edge_count(), 180u);
  EXPECT_EQ(sim.graph.degree(0), 2u);
  EXPECT_EQ(sim.graph.degree(11), 4u);
}

TEST(Simulate, SameSeedIdenticalDifferentSeedNot) {
  SimulationSpec spec;
  spec.seed = 9;
  const auto a = simulate_dataset(spec);
  const auto b = simulate_dataset(spec);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_EQ(a.truth.w, b.truth.w);
  EXPECT_EQ(a.truth.cluster.betas, b.truth.cluster.betas);
  spec.seed = 10;
  EXPECT_NE(simulate_dataset(spec).data.y, a.data.y);
}

TEST(Simulate, FirstPeriodCovarianceIsScaledInverseLeroux) {
  SimulationSpec spec;
  spec.grid_rows = 3;
  spec.grid_cols = 3;
  spec.true_partition = Labels(9, 0);
  spec.sigma2 = 0.0;
  spec.coefficient_sd = 0.0;
  spec.tau2 = 1.7;
  spec.rho = 0.8;
  spec.periods = 1;
  const Eigen::MatrixXd cov = spec.tau2 * dense_leroux(spec.rho, rook_grid(3, 3)).inverse();
  const int n = 10000;
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(9, 9);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(9);
  for (int r = 0; r < n; ++r) {
    spec.seed = 1000 + r;
    const auto sim = simulate_dataset(spec);
    ASSERT_EQ(sim.data.y, sim.truth.w);
    const Eigen::VectorXd w = sim.truth.w.col(0);
    sum += w;
    outer += w * w.transpose();
  }
  const Eigen::MatrixXd sample = outer / n;
  for (int a = 0; a < 9; ++a) {
    EXPECT_LT(std::abs(sum[a] / n), 4.0 * std::sqrt(cov(a, a) / n));
    for (int b = 0; b < 9; ++b) {
      const double se = std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / n);
      EXPECT_LT(std::abs(sample(a, b) - cov(a, b)), 4.0 * se) << a << "," << b;
    }
  }
}

TEST(Simulate, FilesLoadBack) {
  SimulationSpec spec;
  spec.seed = 4;
  const auto sim = simulate_dataset(spec);
  const auto dir = std::filesystem::temp_directory_path() / "bstc_sim_test";
  std::filesystem::remove_all(dir);
  write_simulation(dir, sim);
  const auto panel = load_panel(dir / "panel.csv");
  EXPECT_EQ(panel.unit_ids, sim.data.unit_ids);
  EXPECT_EQ(panel.y, sim.data.y);
  const auto g = load_adjacency(dir / "adjacency.csv", panel.unit_ids);
  EXPECT_EQ(g.edges(), sim.graph.edges());
  EXPECT_EQ(read_partition_csv(dir / "truth_partition.csv", panel.unit_ids), sim.truth.cluster.s);
  EXPECT_TRUE(std::filesystem::exists(dir / "truth.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Simulate, RejectsInvalidSpecs) {
  SimulationSpec spec;
  spec.rho = 1.0;
  EXPECT_THROW(simulate_dataset(spec), InputError);
  spec = SimulationSpec{};
  spec.grid_rows = 5;
  EXPECT_THROW(simulate_dataset(spec), InputError);
  spec = SimulationSpec{};
  spec.true_partition = Labels(99, 0);
  EXPECT_THROW(simulate_dataset(spec), InputError);
}
