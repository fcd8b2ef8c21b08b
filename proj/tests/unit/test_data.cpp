#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "bstc/data.hpp"
#include "bstc/errors.hpp"
#include "fixtures.hpp"

using namespace bstc;
using namespace bstc::testing;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Panel, LoadsLongFormatWithNumericTimeOrder) {
  const auto p = write_file("bstc_panel_a.csv",
                            "region,year,rate,x1\n"
                            "b,10,1.5,0.1\n"
                            "a,9,2.0,0.2\n"
                            "a,10,2.5,0.3\n"
                            "b,9,3.0,0.4\n");
  PanelSchema schema;
  schema.unit_column = "region";
  schema.time_column = "year";
  schema.response_column = "rate";
  const auto d = load_panel(p, schema);
  EXPECT_EQ(d.unit_ids, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(d.times, (std::vector<std::string>{"9", "10"}));
  EXPECT_EQ(d.predictor_names, (std::vector<std::string>{"x1"}));
  EXPECT_EQ(d.y(0, 0), 3.0);
  EXPECT_EQ(d.y(0, 1), 1.5);
  EXPECT_EQ(d.y(1, 0), 2.0);
  EXPECT_EQ(d.x[1](1, 1), 0.3);
  EXPECT_EQ(d.x[1](1, 0), 1.0);
}

TEST(Panel, ReportsMalformedInputWithLocation) {
  auto msg = error_of([] {
    load_panel(write_file("bstc_panel_b.csv", "unit,time,y,x1\na,1,1,0\na,1,2,0\n"));
  });
  EXPECT_NE(msg.find("duplicate"), std::string::npos);
  EXPECT_NE(msg.find(":3"), std::string::npos);

  msg = error_of([] { load_panel(write_file("bstc_panel_c.csv", "unit,time,y,x1\na,1,1,0\na,2,oops,0\n")); });
  EXPECT_NE(msg.find("oops"), std::string::npos);
  EXPECT_NE(msg.find("column y"), std::string::npos);

  msg = error_of([] { load_panel(write_file("bstc_panel_d.csv", "unit,time,y\na,1,1\na,2,1\nb,1,1\n")); });
  EXPECT_NE(msg.find("incomplete panel"), std::string::npos);
  EXPECT_NE(msg.find("unit b"), std::string::npos);

  msg = error_of([] { load_panel(write_file("bstc_panel_e.csv", "unit,time,response\na,1,1\n")); });
  EXPECT_FALSE(msg.empty());
}

TEST(Panel, WriteThenLoadRoundTrips) {
  Rng rng(3);
  const auto d = random_panel(4, 3, 2, rng);
  const auto p = std::filesystem::temp_directory_path() / "bstc_panel_rt.csv";
  write_panel(p, d);
  const auto back = load_panel(p);
  EXPECT_EQ(back.unit_ids, d.unit_ids);
  EXPECT_EQ(back.times, d.times);
  EXPECT_EQ(back.y, d.y);
  for (std::size_t i = 0; i < d.units(); ++i) EXPECT_EQ(back.x[i], d.x[i]);
}

TEST(Panel, SliceAndReorder) {
  Rng rng(4);
  const auto d = random_panel(3, 5, 1, rng);
  const auto s = d.slice_periods(1, 3);
  EXPECT_EQ(s.times, (std::vector<std::string>{"2001", "2002", "2003"}));
  EXPECT_EQ(s.y, d.y.middleCols(1, 3));
  EXPECT_EQ(s.x[2], d.x[2].middleRows(1, 3));
  const std::vector<std::size_t> order{2, 0, 1};
  const auto r = d.reorder_units(order);
  EXPECT_EQ(r.unit_ids[0], "u2");
  EXPECT_EQ(r.y.row(1), d.y.row(0));
  EXPECT_EQ(r.x[0], d.x[2]);
}

TEST(Standardize, OverallMeanZeroSdOneAndInverts) {
  Rng rng(5);
  auto d = random_panel(4, 6, 2, rng);
  d.y.array() = d.y.array() * 3.0 + 10.0;
  const auto [z, sc] = standardize(d);
  const Eigen::Map<const Eigen::VectorXd> y(z.y.data(), z.y.size());
  EXPECT_NEAR(y.mean(), 0.0, 1e-12);
  EXPECT_NEAR((y.array() - y.mean()).square().sum() / (y.size() - 1), 1.0, 1e-12);
  for (int k = 1; k <= 2; ++k) {
    double s = 0.0, ss = 0.0;
    for (const auto& x : z.x) {
      s += x.col(k).sum();
      ss += x.col(k).squaredNorm();
    }
    EXPECT_NEAR(s, 0.0, 1e-10);
    EXPECT_NEAR(ss / 23.0, 1.0, 1e-12);
  }
  const auto back = unstandardize(z, sc);
  EXPECT_TRUE(back.y.isApprox(d.y, 1e-12));
  EXPECT_TRUE(back.x[3].isApprox(d.x[3], 1e-12));
}

TEST(Standardize, RejectsConstantColumns) {
  Rng rng(6);
  auto d = random_panel(3, 3, 1, rng);
  for (auto& x : d.x) x.col(1).setConstant(2.0);
  EXPECT_NE(error_of([&] { standardize(d); }).find("x1"), std::string::npos);
}

TEST(Adjacency, LoadsEdgeListAndFlagsProblems) {
  const std::vector<std::string> ids{"a", "b", "c"};
  std::vector<std::string> warnings;
  const auto g =
      load_adjacency(write_file("bstc_adj_a.csv", "unit_a,unit_b\na,b\nb,a\nb,c\n"), ids, &warnings);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_TRUE(g.adjacent(2, 1));
  EXPECT_FALSE(g.adjacent(0, 2));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("duplicate"), std::string::npos);

  EXPECT_NE(error_of([&] { load_adjacency(write_file("bstc_adj_b.csv", "unit_a,unit_b\na,z\n"), ids); })
                .find("unknown unit id 'z'"),
            std::string::npos);
  EXPECT_NE(error_of([&] { load_adjacency(write_file("bstc_adj_c.csv", "unit_a,unit_b\nc,c\n"), ids); })
                .find("self-loop"),
            std::string::npos);
}

TEST(Adjacency, RookGridNeighbourCounts) {
  const auto g = rook_grid(3, 4);
  EXPECT_EQ(g.size(), 12u);
  EXPECT_EQ(g.edge_count(), 3u * 3u + 2u * 4u);
  EXPECT_EQ(g.degree(0), 2u);
  EXPECT_EQ(g.degree(1), 3u);
  EXPECT_EQ(g.degree(5), 4u);
  EXPECT_TRUE(g.adjacent(5, 9));
  EXPECT_FALSE(g.adjacent(3, 4));
  EXPECT_EQ(g.bandwidth(), 4u);
}

TEST(Adjacency, PermutationBookkeeping) {
  const auto g = path_graph(4).with_permutation({3, 1, 0, 2});
  const auto inv = g.inverse_permutation();
  EXPECT_EQ(inv, (std::vector<std::size_t>{2, 1, 3, 0}));
  // Edges 0-1, 1-2, 2-3 at positions (2,1), (1,3), (3,0).
  EXPECT_EQ(g.bandwidth(), 3u);
  const auto r = g.relabeled();
  EXPECT_TRUE(r.adjacent(2, 1));
  EXPECT_TRUE(r.adjacent(1, 3));
  EXPECT_TRUE(r.adjacent(3, 0));
  EXPECT_EQ(r.edge_count(), 3u);
  EXPECT_THROW(path_graph(3).with_permutation({0, 0, 1}), InputError);
}

TEST(Autocorrelation, CheckerboardOnSquare) {
  // 2 x 2 rook grid, values (1, -1, -1, 1): every neighbour pair disagrees.
  const auto g = rook_grid(2, 2);
  const std::vector<double> v{1.0, -1.0, -1.0, 1.0};
  EXPECT_NEAR(morans_i(v, g), -1.0, 1e-14);
  EXPECT_NEAR(gearys_c(v, g), 1.5, 1e-14);
}

TEST(Autocorrelation, MatchesDenseFormulas) {
  Rng rng(7);
  const auto g = rook_grid(4, 5);
  std::vector<double> v(20);
  for (auto& x : v) x = rng.normal();
  const Eigen::Map<const Eigen::VectorXd> y(v.data(), 20);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(20, 20);
  for (const auto& [a, b] : g.edges()) W(a, b) = W(b, a) = 1.0;
  const Eigen::VectorXd z = y.array() - y.mean();
  const double s0 = W.sum();
  EXPECT_NEAR(morans_i(v, g), 20.0 / s0 * z.dot(W * z) / z.squaredNorm(), 1e-12);
  double diff = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) diff += W(i, j) * (y[i] - y[j]) * (y[i] - y[j]);
  EXPECT_NEAR(gearys_c(v, g), 19.0 * diff / (2.0 * s0 * z.squaredNorm()), 1e-12);
  EXPECT_THROW(morans_i(std::vector<double>(20, 1.0), g), InputError);
}
