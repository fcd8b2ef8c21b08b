#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "bstc/data.hpp"
#include "bstc/model.hpp"

namespace bstc {

/// Generating design for a rook grid. Cluster coefficients are drawn
/// N(0, coefficient_sd^2 I), covariates i.i.d. N(0, covariate_sd^2) per unit
/// and period, cluster xi uniform on (xi_low, xi_high).
struct SimulationSpec {
  std::size_t grid_rows = 10;
  std::size_t grid_cols = 10;
  /// Row-major cluster labels over the grid; empty means the built-in
  /// seven-region tiling of the 10 x 10 grid.
  Labels true_partition;
  std::size_t predictors = 3;
  double rho = 0.95;
  double sigma2 = 1.0;
  double tau2 = 1.0;
  double coefficient_sd = 1.0;
  double covariate_sd = 1.0;
  double xi_low = 0.0;
  double xi_high = 1.0;
  std::size_t periods = 13;
  std::uint64_t seed = 1;

  /// Throws InputError on an inconsistent spec.
  void validate() const;
  /// The resolved partition (tiling substituted when empty).
  Labels partition() const;
};

/// Seven contiguous regions on the 10 x 10 grid, row-major, sizes
/// 15, 15, 12, 18, 12, 16, 12.
Labels grid10_tiling();
/// Reads a `row,col,region` file (1-based) into row-major canonical labels.
Labels load_tiling(const std::filesystem::path& path, std::size_t rows, std::size_t cols);

struct SimulatedData {
  PanelData data;
  AdjacencyGraph graph;
  ModelState truth;
};

/// w_1 ~ N(0, tau2 Q^-1), w_t = diag(xi) w_{t-1} + N(0, tau2 Q^-1),
/// y_it = x_it' beta_{s_i} + w_it + N(0, sigma2). Deterministic given the seed.
SimulatedData simulate_dataset(const SimulationSpec& spec);

/// panel.csv, adjacency.csv, truth.csv (parameter,unit,value) and
/// truth_partition.csv (unit,cluster).
void write_simulation(const std::filesystem::path& dir, const SimulatedData& sim);

}  // namespace bstc
