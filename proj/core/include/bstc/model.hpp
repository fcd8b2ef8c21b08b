#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bstc/random.hpp"

namespace bstc {

/// Allocation labels are 0-based internally (cluster j is label j - 1 in the
/// 1-based convention used by files) and always kept canonical: label k first
/// appears after labels 0..k-1.
using Labels = std::vector<int>;

/// Relabel by order of first appearance. Idempotent; preserves the partition.
Labels canonicalize(const Labels& labels);
bool is_canonical(const Labels& labels);
/// Number of distinct labels of a canonical vector.
int cluster_count(const Labels& labels);

/// Dirichlet-process state: allocations plus one (beta, xi) pair per cluster.
struct ClusterState {
  Labels s;
  std::vector<Eigen::VectorXd> betas;
  std::vector<double> xis;
  double alpha = 1.0;

  int k() const { return static_cast<int>(betas.size()); }
  /// xi*_{s_i} for every unit.
  Eigen::VectorXd unit_xis() const;
  std::vector<std::size_t> cluster_sizes() const;
  /// Throws std::logic_error on a broken invariant (test and debug aid).
  void check_invariants() const;
};

/// Base measure P0 = N(mu0, Sigma0) x Beta_(-1,1)(a_xi, b_xi).
class BaseMeasure {
 public:
  /// Throws InputError unless Sigma0 is SPD and the Beta shapes are positive.
  BaseMeasure(Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0, double a_xi, double b_xi);
  /// mu0 = 0, Sigma0 = I, a_xi = b_xi = 1.
  static BaseMeasure standard(std::size_t coefficients);

  const Eigen::VectorXd& mu0() const { return mu0_; }
  const Eigen::MatrixXd& Sigma0() const { return sigma0_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  double a_xi() const { return a_xi_; }
  double b_xi() const { return b_xi_; }
  std::size_t coefficients() const { return static_cast<std::size_t>(mu0_.size()); }

  Eigen::VectorXd draw_beta(Rng& rng) const;
  double draw_xi(Rng& rng) const;
  /// Log density of the affine-transformed Beta on (-1, 1), including the
  /// 1/2 Jacobian of xi = 2B - 1.
  double xi_log_density(double xi) const;

 private:
  Eigen::VectorXd mu0_;
  Eigen::MatrixXd sigma0_;
  Eigen::MatrixXd sigma0_factor_;
  Eigen::MatrixXd precision_;
  double a_xi_;
  double b_xi_;
};

/// One configuration of the full chain.
struct ModelState {
  ClusterState cluster;
  Eigen::MatrixXd w;  // I x T random effects
  double sigma2 = 1.0;
  double tau2 = 1.0;
  double rho = 0.9;

  void check_invariants() const;
};

}  // namespace bstc
