#pragma once

#include <cstddef>
#include <vector>

#include "bstc/banded.hpp"
#include "bstc/data.hpp"

namespace bstc {

/// Reverse Cuthill-McKee ordering (new position -> original index).
///
/// Each connected component is started from its minimum-degree node (lowest
/// index on ties); neighbours are queued by ascending degree, then ascending
/// index. The concatenated BFS order is reversed. If the result would be
/// wider than the graph's current labelling, the current labelling is kept,
/// so the returned ordering never increases the bandwidth.
std::vector<std::size_t> reverse_cuthill_mckee(const AdjacencyGraph& graph);

/// Convenience: the graph with its RCM permutation attached.
AdjacencyGraph with_rcm_ordering(const AdjacencyGraph& graph);

/// Leroux precision Q = rho (diag(W 1) - W) + (1 - rho) I in band storage.
/// Row k of the result corresponds to original unit graph.permutation()[k].
/// Requires 0 <= rho < 1; rho = 1 (intrinsic CAR) is singular and rejected.
BandedSPD leroux_precision(double rho, const AdjacencyGraph& graph);

/// Graph Laplacian diag(W 1) - W under the graph's permutation.
BandedSPD graph_laplacian(const AdjacencyGraph& graph);

}  // namespace bstc
