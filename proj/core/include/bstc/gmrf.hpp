#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bstc/banded.hpp"
#include "bstc/data.hpp"
#include "bstc/model.hpp"
#include "bstc/random.hpp"

namespace bstc {

/// Symmetric block-tridiagonal matrix with T diagonal blocks of size I x I.
/// off_blocks[t] is block (t, t+1); block (t+1, t) is its transpose.
struct BlockTridiagonal {
  std::vector<BandedSPD> diag_blocks;
  std::vector<BandMatrix> off_blocks;

  std::size_t periods() const { return diag_blocks.size(); }
  std::size_t block_size() const { return diag_blocks.empty() ? 0 : diag_blocks.front().size(); }
  /// Dense (I T) x (I T) matrix, time-major: index t * I + i.
  Eigen::MatrixXd to_dense() const;
};

/// I x T matrix of spatio-temporal random effects.
using RandomEffects = Eigen::MatrixXd;

/// diag(xi) Q diag(xi) with the bandwidth of Q.
BandedSPD diagonal_sandwich(const BandedSPD& Q, const Eigen::VectorXd& xi);
/// diag(xi) Q scaled by `scale`, as a general band matrix.
BandMatrix scaled_left_diagonal(const BandedSPD& Q, const Eigen::VectorXd& xi, double scale);

/// Prior precision of (w_1, ..., w_T) under the VAR(1)-CAR process.
BlockTridiagonal joint_precision_omega(const Eigen::VectorXd& xi, double tau2, const BandedSPD& Q,
                                       std::size_t periods);

/// x_it' beta*_{s_i} for every cell.
Eigen::MatrixXd fitted_values(const ClusterState& cluster, const PanelData& data);

struct RandomEffectsConditional {
  BlockTridiagonal psi;
  Eigen::MatrixXd c;  // I x T
};

/// Full conditional of w: N(Psi^{-1} c, Psi^{-1}) with Psi = Omega + I / sigma2
/// and c_t = (Y_t - fitted_t) / sigma2. Q must be in the same unit order as
/// the data.
RandomEffectsConditional random_effects_full_conditional(const ModelState& state, const PanelData& data,
                                                         const BandedSPD& Q);

/// Exact draw from N(Psi^{-1} c, Psi^{-1}) by the forward (factor, mean) and
/// backward (sample) recursion over time blocks.
///
/// The first block and every block whose predecessor coupling is zero are
/// factored in band storage. Once a non-zero coupling enters, the Schur
/// complement Psi_tt - Psi_t,t-1 Sigma_t-1 Psi_t-1,t fills in and is factored
/// densely.
RandomEffects sample_block_tridiagonal(const BlockTridiagonal& psi, const Eigen::MatrixXd& c, Rng& rng);

/// Posterior mean Psi^{-1} c computed by the same forward recursion.
Eigen::MatrixXd block_tridiagonal_mean(const BlockTridiagonal& psi, const Eigen::MatrixXd& c);

/// Conditional law of row i of w at every time given all other rows, with
/// the autoregressive coefficient of unit i left free:
///   w_it | rest ~ N(xi_i * w_i,t-1 + offset_t, variance)
/// where offset_t = -(1/Q_ii) sum_{k != i} Q_ik (w_kt - xi_k w_k,t-1) and
/// variance = tau2 / Q_ii. The t = 0 term has no autoregressive mean.
struct SiteConditional {
  Eigen::VectorXd offset;
  double variance = 0.0;

  double log_density(const Eigen::Ref<const Eigen::RowVectorXd>& w_row, double xi_i) const;
};

SiteConditional site_conditional(std::size_t i, const RandomEffects& w, const Eigen::VectorXd& unit_xis,
                                 double tau2, const BandedSPD& Q);

/// sum_t log N(w_it | mu_it, tau2 / Q_ii) with unit i's coefficient set to
/// xi_i; entry i of unit_xis is ignored.
double conditional_site_density(std::size_t i, const RandomEffects& w, double xi_i,
                                const Eigen::VectorXd& unit_xis, double tau2, const BandedSPD& Q);

/// Innovations r_1 = w_1, r_t = w_t - diag(xi) w_t-1 (columns of the result).
Eigen::MatrixXd ar_innovations(const RandomEffects& w, const Eigen::VectorXd& unit_xis);

/// w_1' Q w_1 + sum_{t>=2} r_t' Q r_t.
double ar_quadratic_form(const RandomEffects& w, const Eigen::VectorXd& unit_xis, const BandedSPD& Q);

/// sum_t log N(y_it | fitted_it + w_it, sigma2) for a single unit.
double unit_log_likelihood(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& beta, const Eigen::Ref<const Eigen::RowVectorXd>& w,
                           double sigma2);

}  // namespace bstc
