#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bstc/banded.hpp"
#include "bstc/data.hpp"
#include "bstc/dp_cluster.hpp"
#include "bstc/model.hpp"
#include "bstc/random.hpp"

namespace bstc {

struct Hyperparameters {
  double a_sigma2 = 3.0;
  double b_sigma2 = 2.0;
  double a_tau2 = 3.0;
  double b_tau2 = 2.0;
  double alpha_rho = 6.0;
  double beta_rho = 1.0;
  double a_alpha = 3.0;
  double b_alpha = 2.0;
  /// Base-measure mean and covariance; empty means 0 and identity.
  Eigen::VectorXd mu0;
  Eigen::MatrixXd Sigma0;
  double a_xi = 1.0;
  double b_xi = 1.0;

  BaseMeasure base_measure(std::size_t coefficients) const;
  void validate() const;
};

enum class InitScheme {
  /// One cluster, beta from P0, xi = 0, w = 0, sigma2 = tau2 = 1, rho = 0.9, alpha = 1.
  Default,
  /// Every parameter drawn from its prior; w = 0.
  Prior,
};

struct ChainConfig {
  std::size_t iterations = 25000;
  std::size_t burn_in = 10000;
  std::size_t thin = 3;
  std::uint64_t seed = 1;
  std::size_t n_aux = 20;
  Hyperparameters priors;
  double mh_step_rho = 0.3;
  double mh_step_xi = 0.25;
  /// Robbins-Monro step adaptation, burn-in only.
  bool adapt = true;
  double target_acceptance = 0.3;
  /// Pins the allocations (original unit order) and skips the allocation step.
  std::optional<Labels> fixed_partition;
  std::size_t n_chains = 1;
  InitScheme init = InitScheme::Default;
  /// Reorder units by reverse Cuthill-McKee before sampling.
  bool reorder = true;

  std::size_t stored_draws() const { return iterations > burn_in ? (iterations - burn_in) / thin : 0; }
  /// Throws InputError naming the offending key.
  void validate() const;

  /// 25 chains, 5000 burn-in, 4000 kept each.
  static ChainConfig multi_chain_preset();
};

/// Thinned post-burn-in draws, in the original unit order. Cluster-level
/// parameters are expanded to units: beta[m].row(i) = beta*_{s_i}.
struct ChainOutput {
  std::vector<std::string> unit_ids;
  std::vector<std::string> times;
  std::size_t coefficients = 0;

  std::vector<Labels> allocations;
  std::vector<Eigen::MatrixXd> beta;  // I x (p+1) per draw
  std::vector<Eigen::VectorXd> xi;    // I per draw
  std::vector<Eigen::MatrixXd> w;     // I x T per draw
  std::vector<double> sigma2;
  std::vector<double> tau2;
  std::vector<double> rho;
  std::vector<double> alpha;
  std::vector<int> k;
  Eigen::MatrixXd loglik;  // draws x units

  double acceptance_xi = 0.0;
  double acceptance_rho = 0.0;
  double final_step_xi = 0.0;
  double final_step_rho = 0.0;
  ChainConfig config;
  std::size_t chain_index = 0;

  std::size_t draws() const { return sigma2.size(); }
  std::size_t units() const { return unit_ids.size(); }
  std::size_t periods() const { return times.size(); }

  bool operator==(const ChainOutput& other) const;
};

/// Concatenate draws of chains fitted to the same data.
ChainOutput merge_chains(const std::vector<ChainOutput>& chains);

// Individual full-conditional updates.

/// Inv-Gamma(a + IT/2, b + SSR/2) draw.
double update_sigma2(const ModelState& state, const PanelData& data, double a, double b, Rng& rng);
/// Inv-Gamma(a + IT/2, b + quadratic form/2) draw.
double update_tau2(const ModelState& state, const BandedSPD& Q, double a, double b, Rng& rng);

/// log Beta(rho) + (T/2) log|Q(rho)| - q(rho) / (2 tau2), with q the AR
/// quadratic form. `laplacian` is diag(W 1) - W in the state's unit order.
double rho_log_target(double rho, const ModelState& state, const BandedSPD& laplacian, double alpha_rho,
                      double beta_rho, bool prior_only = false);
/// Log MH ratio of the logit random walk from `from` to `to`, Jacobian included.
double rho_log_acceptance_ratio(double from, double to, const ModelState& state, const BandedSPD& laplacian,
                                double alpha_rho, double beta_rho, bool prior_only = false);
/// One MH step; returns whether the proposal was accepted.
bool update_rho(ModelState& state, const BandedSPD& laplacian, double alpha_rho, double beta_rho, double step,
                Rng& rng, bool prior_only = false);

/// The Metropolis-within-Gibbs transition on data whose units are already in
/// band order (graph with identity permutation).
class GibbsSampler {
 public:
  GibbsSampler(AdjacencyGraph graph, ChainConfig config, std::size_t coefficients);

  ModelState initial_state(const PanelData& data, Rng& rng) const;
  /// One full iteration: allocations; beta*, xi*; alpha; w; sigma2; tau2; rho.
  void sweep(ModelState& state, const PanelData& data, Rng& rng, bool adapting);

  const BaseMeasure& base() const { return base_; }
  const AdjacencyGraph& graph() const { return graph_; }
  const BandedSPD& laplacian() const { return laplacian_; }
  double step_xi() const { return step_xi_; }
  double step_rho() const { return step_rho_; }
  const MhTally& tally_xi() const { return tally_xi_; }
  const MhTally& tally_rho() const { return tally_rho_; }
  void reset_tallies() { tally_xi_ = {}; tally_rho_ = {}; }

  /// Allocations to hold fixed (units in band order), if any.
  void set_fixed_partition(std::optional<Labels> labels) { fixed_ = std::move(labels); }

 private:
  AdjacencyGraph graph_;
  ChainConfig config_;
  BaseMeasure base_;
  BandedSPD laplacian_;
  std::optional<Labels> fixed_;
  double step_xi_;
  double step_rho_;
  std::size_t adapt_count_ = 0;
  MhTally tally_xi_;
  MhTally tally_rho_;
};

/// Full chain: steps 1-7 per iteration, burn-in, thinning. Deterministic
/// given (config.seed, chain_index). NumericalError messages carry the
/// iteration index.
ChainOutput run_chain(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config,
                      std::size_t chain_index = 0);

/// run_chain with step 1 skipped and s pinned to config.fixed_partition.
ChainOutput run_conditional_on_partition(const PanelData& data, const AdjacencyGraph& graph,
                                         const ChainConfig& config);

/// config.n_chains independent chains on worker threads (BSTC_THREADS caps
/// the worker count; default hardware concurrency).
std::vector<ChainOutput> run_chains(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config);

/// Worker count from BSTC_THREADS or hardware concurrency.
std::size_t worker_threads();

}  // namespace bstc
