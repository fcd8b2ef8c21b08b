#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bstc/banded.hpp"
#include "bstc/data.hpp"
#include "bstc/gmrf.hpp"
#include "bstc/model.hpp"
#include "bstc/random.hpp"

namespace bstc {

/// log of the sequential Polya-urn probability of a canonical allocation.
/// Throws InputError for non-canonical labels.
double polya_urn_log_prior(const Labels& s, double alpha);

struct AllocationOptions {
  std::size_t n_aux = 20;
  /// Replace the data and random-effect terms by constants, leaving the
  /// Polya-urn prior as the target (used to validate the sweep).
  bool prior_only = false;
};

/// One sweep of Neal's Algorithm 8 with the Favaro-Teh re-use rule over
/// units 0..I-1. Allocation probabilities combine the urn weights with
/// p(y_i | x_i, beta*, w_i, sigma2) and the site conditional of w_i. Labels
/// are canonical on return and empty clusters are dropped.
void gibbs_allocations(ModelState& state, const PanelData& data, const BandedSPD& Q, const BaseMeasure& base,
                       const AllocationOptions& options, Rng& rng);

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Conjugate posterior of beta*_j given the units in `members`.
GaussianPosterior cluster_beta_posterior(std::span<const std::size_t> members, const PanelData& data,
                                         const RandomEffects& w, double sigma2, const BaseMeasure& base);

void update_cluster_betas(ClusterState& cluster, const PanelData& data, const RandomEffects& w, double sigma2,
                          const BaseMeasure& base, Rng& rng);

/// The random-effect part of xi*_j's full conditional is Gaussian in xi*_j:
///   -1/(2 tau2) (const - 2 xi a + xi^2 b).
/// These are the (a, b) coefficients for cluster j, given the current state.
struct XiLikelihoodTerms {
  double linear = 0.0;     // a
  double quadratic = 0.0;  // b
};

XiLikelihoodTerms xi_likelihood_terms(int cluster, const ClusterState& state, const RandomEffects& w,
                                      const BandedSPD& Q);

/// log full conditional of xi*_j at `xi` up to a constant.
double xi_log_target(double xi, const XiLikelihoodTerms& terms, double tau2, const BaseMeasure& base);

struct MhTally {
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed); }
};

/// Random-walk MH on atanh(xi*_j) for every cluster, step `step` on that
/// scale, with the tanh Jacobian in the acceptance ratio.
MhTally update_cluster_xis(ClusterState& cluster, const RandomEffects& w, double tau2, const BandedSPD& Q,
                           const BaseMeasure& base, double step, Rng& rng, bool prior_only = false);

/// West's auxiliary-variable update of the DP concentration under a
/// Gamma(shape, rate) prior.
double update_concentration(double alpha, int clusters, std::size_t n, double shape, double rate, Rng& rng);

}  // namespace bstc
