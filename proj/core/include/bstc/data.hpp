#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bstc {

/// Areal panel: response y (I x T) and one T x (p+1) design matrix per unit.
/// Column 0 of every design matrix is the intercept.
struct PanelData {
  std::vector<std::string> unit_ids;
  std::vector<std::string> times;
  std::vector<std::string> predictor_names;
  Eigen::MatrixXd y;                // I x T
  std::vector<Eigen::MatrixXd> x;   // I entries, each T x (p+1)

  std::size_t units() const { return unit_ids.size(); }
  std::size_t periods() const { return times.size(); }
  std::size_t predictors() const { return predictor_names.size(); }
  std::size_t coefficients() const { return predictor_names.size() + 1; }

  /// x_it as a row vector of length p+1.
  auto covariates(std::size_t i, std::size_t t) const { return x[i].row(static_cast<Eigen::Index>(t)); }

  /// Throws InputError if dimensions disagree, the intercept column is not
  /// all ones, or any cell is non-finite.
  void validate() const;

  /// Keep time columns [first, first + count).
  PanelData slice_periods(std::size_t first, std::size_t count) const;

  /// Reorder units: result unit k is this unit order[k].
  PanelData reorder_units(std::span<const std::size_t> order) const;
};

/// Column layout of the panel CSV. An empty predictor list means "every
/// column that is not unit, time or response, in file order".
struct PanelSchema {
  std::string unit_column = "unit";
  std::string time_column = "time";
  std::string response_column = "y";
  std::vector<std::string> predictor_columns;
};

PanelData load_panel(const std::filesystem::path& path, const PanelSchema& schema = {});
void write_panel(const std::filesystem::path& path, const PanelData& data);

/// Undirected 0/1 contiguity graph. Neighbour lists are sorted and free of
/// self-loops. `permutation()[k]` is the original index placed at position k
/// of the band ordering (identity until a reordering is applied).
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  /// Builds from unordered pairs; duplicates are merged, self-loops rejected.
  AdjacencyGraph(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t size() const { return neighbors_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
  std::vector<std::size_t> neighbor_counts() const;
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
  bool adjacent(std::size_t i, std::size_t j) const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;  // i < j

  const std::vector<std::size_t>& permutation() const { return permutation_; }
  /// Position of original unit i in the band ordering.
  std::vector<std::size_t> inverse_permutation() const;
  AdjacencyGraph with_permutation(std::vector<std::size_t> permutation) const;
  /// Graph relabelled so that the band ordering becomes the natural ordering.
  AdjacencyGraph relabeled() const;

  /// max |pos(i) - pos(j)| over edges under the current permutation.
  std::size_t bandwidth() const;

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::size_t> permutation_;
  std::size_t edge_count_ = 0;
};

/// Reads an edge list `unit_a,unit_b`. Duplicate rows are dropped and
/// reported through `warnings` when given.
AdjacencyGraph load_adjacency(const std::filesystem::path& path, std::span<const std::string> unit_ids,
                              std::vector<std::string>* warnings = nullptr);
void write_adjacency(const std::filesystem::path& path, const AdjacencyGraph& graph,
                     std::span<const std::string> unit_ids);

/// Rook contiguity on a rows x cols lattice, row-major unit numbering.
AdjacencyGraph rook_grid(std::size_t rows, std::size_t cols);

/// Centering and scaling constants per variable: index 0 is the response,
/// index k >= 1 is predictor k (design column k).
struct Scaling {
  std::vector<double> means;
  std::vector<double> sds;
};

/// Overall-sample standardization of the response and each non-intercept
/// predictor. The sd uses the I*T - 1 denominator.
std::pair<PanelData, Scaling> standardize(const PanelData& data);
PanelData unstandardize(const PanelData& data, const Scaling& scaling);

/// Moran's I with binary symmetric weights.
double morans_i(std::span<const double> values, const AdjacencyGraph& graph);
/// Geary's C with binary symmetric weights.
double gearys_c(std::span<const double> values, const AdjacencyGraph& graph);

/// Per-unit average of y over time.
std::vector<double> time_average(const PanelData& data);

}  // namespace bstc
