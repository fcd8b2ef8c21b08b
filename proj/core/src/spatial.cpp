#include "bstc/spatial.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

#include "bstc/errors.hpp"

namespace bstc {

std::vector<std::size_t> reverse_cuthill_mckee(const AdjacencyGraph& graph) {
  const auto n = graph.size();
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);

  const auto by_degree = [&](std::size_t a, std::size_t b) {
    return graph.degree(a) != graph.degree(b) ? graph.degree(a) < graph.degree(b) : a < b;
  };
  std::vector<std::size_t> nodes(n);
  std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  std::stable_sort(nodes.begin(), nodes.end(), by_degree);

  std::vector<std::size_t> scratch;
  for (auto start : nodes) {
    if (visited[start]) continue;
    std::queue<std::size_t> queue;
    queue.push(start);
    visited[start] = 1;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop();
      order.push_back(u);
      scratch.clear();
      for (auto v : graph.neighbors(u))
        if (!visited[v]) scratch.push_back(v);
      std::sort(scratch.begin(), scratch.end(), by_degree);
      for (auto v : scratch) {
        visited[v] = 1;
        queue.push(v);
      }
    }
  }
  std::reverse(order.begin(), order.end());

  if (graph.with_permutation(order).bandwidth() > graph.bandwidth()) return graph.permutation();
  return order;
}

AdjacencyGraph with_rcm_ordering(const AdjacencyGraph& graph) {
  return graph.with_permutation(reverse_cuthill_mckee(graph));
}

BandedSPD graph_laplacian(const AdjacencyGraph& graph) {
  const auto n = graph.size();
  const auto pos = graph.inverse_permutation();
  BandedSPD L(n, graph.bandwidth());
  for (std::size_t u = 0; u < n; ++u) {
    const auto i = pos[u];
    L.lower(i, i) = static_cast<double>(graph.degree(u));
    for (auto v : graph.neighbors(u)) {
      const auto j = pos[v];
      if (j < i) L.lower(i, j) = -1.0;
    }
  }
  return L;
}

BandedSPD leroux_precision(double rho, const AdjacencyGraph& graph) {
  if (rho == 1.0) throw InputError("singular ICAR precision: rho = 1 is not supported");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1), got " + std::to_string(rho));
  return graph_laplacian(graph).scaled_plus_identity(rho, 1.0 - rho);
}

}  // namespace bstc
