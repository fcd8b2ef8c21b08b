#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bstc/banded.hpp"
#include "bstc/data.hpp"
#include "bstc/model.hpp"
#include "bstc/random.hpp"

namespace bstc::testing {

/// Panel with intercept plus `predictors` N(0,1) covariates and N(0,1) response.
inline PanelData random_panel(std::size_t units, std::size_t periods, std::size_t predictors, Rng& rng) {
  PanelData d;
  for (std::size_t i = 0; i < units; ++i) d.unit_ids.push_back("u" + std::to_string(i));
  for (std::size_t t = 0; t < periods; ++t) d.times.push_back(std::to_string(2000 + t));
  for (std::size_t k = 0; k < predictors; ++k) d.predictor_names.push_back("x" + std::to_string(k + 1));
  const auto T = static_cast<Eigen::Index>(periods);
  d.y.resize(static_cast<Eigen::Index>(units), T);
  for (std::size_t i = 0; i < units; ++i) {
    Eigen::MatrixXd x(T, static_cast<Eigen::Index>(predictors + 1));
    x.col(0).setOnes();
    for (Eigen::Index t = 0; t < T; ++t) {
      for (Eigen::Index k = 1; k < x.cols(); ++k) x(t, k) = rng.normal();
      d.y(static_cast<Eigen::Index>(i), t) = rng.normal();
    }
    d.x.push_back(std::move(x));
  }
  return d;
}

/// Dense Leroux precision built straight from the definition.
inline Eigen::MatrixXd dense_leroux(double rho, const AdjacencyGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : g.edges()) {
    W(a, b) = 1.0;
    W(b, a) = 1.0;
  }
  Eigen::MatrixXd D = W.rowwise().sum().asDiagonal();
  return rho * (D - W) + (1.0 - rho) * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_spd(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (auto& v : a.reshaped()) v = rng.normal();
  return a * a.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

/// Symmetric banded SPD matrix with the given bandwidth.
inline Eigen::MatrixXd random_banded_spd(Eigen::Index n, Eigen::Index b, Rng& rng) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - b); j < i; ++j) m(i, j) = m(j, i) = rng.normal();
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = 2.0 * static_cast<double>(b) + 1.0 + rng.uniform();
  return m;
}

/// Path graph 0 - 1 - ... - (n-1).
inline AdjacencyGraph path_graph(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return AdjacencyGraph(n, e);
}

}  // namespace bstc::testing
