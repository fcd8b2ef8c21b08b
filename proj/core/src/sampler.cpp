#include "bstc/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "bstc/errors.hpp"
#include "bstc/gmrf.hpp"
#include "bstc/spatial.hpp"

namespace bstc {

namespace {

void require_positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("invalid ") + key + ": must be positive");
}

double log_beta_density(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }
double inv_logit(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double clamp_open_unit(double x) {
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(x, lo, hi);
}

}  // namespace

BaseMeasure Hyperparameters::base_measure(std::size_t coefficients) const {
  const auto P = static_cast<Eigen::Index>(coefficients);
  Eigen::VectorXd m = mu0.size() == 0 ? Eigen::VectorXd::Zero(P) : mu0;
  Eigen::MatrixXd S = Sigma0.size() == 0 ? Eigen::MatrixXd::Identity(P, P) : Sigma0;
  if (m.size() != P || S.rows() != P || S.cols() != P)
    throw InputError("dimension mismatch: base measure vs " + std::to_string(coefficients) + " coefficients");
  return BaseMeasure(std::move(m), std::move(S), a_xi, b_xi);
}

void Hyperparameters::validate() const {
  require_positive(a_sigma2, "a_sigma2");
  require_positive(b_sigma2, "b_sigma2");
  require_positive(a_tau2, "a_tau2");
  require_positive(b_tau2, "b_tau2");
  require_positive(alpha_rho, "alpha_rho");
  require_positive(beta_rho, "beta_rho");
  require_positive(a_alpha, "a_alpha");
  require_positive(b_alpha, "b_alpha");
  require_positive(a_xi, "a_xi");
  require_positive(b_xi, "b_xi");
}

void ChainConfig::validate() const {
  if (iterations == 0) throw InputError("invalid iterations: must be positive");
  if (burn_in >= iterations) throw InputError("invalid burn_in: must be smaller than iterations");
  if (thin == 0) throw InputError("invalid thin: must be at least 1");
  if (n_aux == 0) throw InputError("invalid n_aux: must be at least 1");
  if (n_chains == 0) throw InputError("invalid n_chains: must be at least 1");
  require_positive(mh_step_rho, "mh_step_rho");
  require_positive(mh_step_xi, "mh_step_xi");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw InputError("invalid target_acceptance: must lie in (0, 1)");
  priors.validate();
}

ChainConfig ChainConfig::multi_chain_preset() {
  ChainConfig c;
  c.n_chains = 25;
  c.burn_in = 5000;
  c.thin = 1;
  c.iterations = 9000;
  c.init = InitScheme::Prior;
  return c;
}

bool ChainOutput::operator==(const ChainOutput& o) const {
  auto same_mats = [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t m = 0; m < a.size(); ++m) {
      if (a[m].rows() != b[m].rows() || a[m].cols() != b[m].cols()) return false;
      if (a[m] != b[m]) return false;
    }
    return true;
  };
  if (loglik.rows() != o.loglik.rows() || loglik.cols() != o.loglik.cols()) return false;
  return unit_ids == o.unit_ids && times == o.times && coefficients == o.coefficients &&
         allocations == o.allocations && same_mats(beta, o.beta) && same_mats(xi, o.xi) && same_mats(w, o.w) &&
         sigma2 == o.sigma2 && tau2 == o.tau2 && rho == o.rho && alpha == o.alpha && k == o.k &&
         loglik == o.loglik && acceptance_xi == o.acceptance_xi && acceptance_rho == o.acceptance_rho &&
         final_step_xi == o.final_step_xi && final_step_rho == o.final_step_rho && chain_index == o.chain_index &&
         config.seed == o.config.seed && config.iterations == o.config.iterations &&
         config.burn_in == o.config.burn_in && config.thin == o.config.thin;
}

ChainOutput merge_chains(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw InputError("no chains to merge");
  ChainOutput out = chains.front();
  for (std::size_t c = 1; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    if (ch.unit_ids != out.unit_ids || ch.times != out.times || ch.coefficients != out.coefficients)
      throw InputError("cannot merge chains fitted to different data");
    out.allocations.insert(out.allocations.end(), ch.allocations.begin(), ch.allocations.end());
    out.beta.insert(out.beta.end(), ch.beta.begin(), ch.beta.end());
    out.xi.insert(out.xi.end(), ch.xi.begin(), ch.xi.end());
    out.w.insert(out.w.end(), ch.w.begin(), ch.w.end());
    out.sigma2.insert(out.sigma2.end(), ch.sigma2.begin(), ch.sigma2.end());
    out.tau2.insert(out.tau2.end(), ch.tau2.begin(), ch.tau2.end());
    out.rho.insert(out.rho.end(), ch.rho.begin(), ch.rho.end());
    out.alpha.insert(out.alpha.end(), ch.alpha.begin(), ch.alpha.end());
    out.k.insert(out.k.end(), ch.k.begin(), ch.k.end());
    Eigen::MatrixXd ll(out.loglik.rows() + ch.loglik.rows(), out.loglik.cols());
    ll << out.loglik, ch.loglik;
    out.loglik = std::move(ll);
  }
  const double n = static_cast<double>(chains.size());
  out.acceptance_xi = 0.0;
  out.acceptance_rho = 0.0;
  for (const auto& ch : chains) {
    out.acceptance_xi += ch.acceptance_xi / n;
    out.acceptance_rho += ch.acceptance_rho / n;
  }
  return out;
}

double update_sigma2(const ModelState& state, const PanelData& data, double a, double b, Rng& rng) {
  const Eigen::MatrixXd resid = data.y - fitted_values(state.cluster, data) - state.w;
  const double n = static_cast<double>(data.y.size());
  return rng.inv_gamma(a + 0.5 * n, b + 0.5 * resid.squaredNorm());
}

double update_tau2(const ModelState& state, const BandedSPD& Q, double a, double b, Rng& rng) {
  const double n = static_cast<double>(state.w.size());
  const double q = ar_quadratic_form(state.w, state.cluster.unit_xis(), Q);
  return rng.inv_gamma(a + 0.5 * n, b + 0.5 * q);
}

namespace {

/// The quadratic form sum_t r_t' Q(rho) r_t splits as rho * qL + (1 - rho) * qI.
struct RhoForms {
  double laplacian = 0.0;
  double identity = 0.0;
};

RhoForms rho_forms(const ModelState& state, const BandedSPD& laplacian) {
  const Eigen::MatrixXd r = ar_innovations(state.w, state.cluster.unit_xis());
  RhoForms f;
  for (Eigen::Index t = 0; t < r.cols(); ++t) {
    f.laplacian += laplacian.quadratic_form(r.col(t));
    f.identity += r.col(t).squaredNorm();
  }
  return f;
}

double rho_target(double rho, const RhoForms& f, const ModelState& state, const BandedSPD& laplacian, double a,
                  double b, bool prior_only) {
  if (!(rho > 0.0 && rho < 1.0)) return -std::numeric_limits<double>::infinity();
  double lp = log_beta_density(rho, a, b);
  if (prior_only) return lp;
  const double T = static_cast<double>(state.w.cols());
  const BandedSPD Q = laplacian.scaled_plus_identity(rho, 1.0 - rho);
  lp += 0.5 * T * log_determinant(band_cholesky(Q));
  lp -= 0.5 / state.tau2 * (rho * f.laplacian + (1.0 - rho) * f.identity);
  return lp;
}

}  // namespace

double rho_log_target(double rho, const ModelState& state, const BandedSPD& laplacian, double alpha_rho,
                      double beta_rho, bool prior_only) {
  return rho_target(rho, prior_only ? RhoForms{} : rho_forms(state, laplacian), state, laplacian, alpha_rho,
                    beta_rho, prior_only);
}

double rho_log_acceptance_ratio(double from, double to, const ModelState& state, const BandedSPD& laplacian,
                                double alpha_rho, double beta_rho, bool prior_only) {
  const RhoForms f = prior_only ? RhoForms{} : rho_forms(state, laplacian);
  // d rho / d logit(rho) = rho (1 - rho)
  return rho_target(to, f, state, laplacian, alpha_rho, beta_rho, prior_only) + std::log(to) + std::log1p(-to) -
         rho_target(from, f, state, laplacian, alpha_rho, beta_rho, prior_only) - std::log(from) -
         std::log1p(-from);
}

bool update_rho(ModelState& state, const BandedSPD& laplacian, double alpha_rho, double beta_rho, double step,
                Rng& rng, bool prior_only) {
  const double proposal = inv_logit(logit(state.rho) + step * rng.normal());
  const double u = rng.uniform();
  if (!(proposal > 0.0 && proposal < 1.0)) return false;
  const double log_ratio =
      rho_log_acceptance_ratio(state.rho, proposal, state, laplacian, alpha_rho, beta_rho, prior_only);
  if (std::log(u) < log_ratio) {
    state.rho = proposal;
    return true;
  }
  return false;
}

GibbsSampler::GibbsSampler(AdjacencyGraph graph, ChainConfig config, std::size_t coefficients)
    : graph_(std::move(graph)),
      config_(std::move(config)),
      base_(config_.priors.base_measure(coefficients)),
      laplacian_(graph_laplacian(graph_)),
      step_xi_(config_.mh_step_xi),
      step_rho_(config_.mh_step_rho) {}

ModelState GibbsSampler::initial_state(const PanelData& data, Rng& rng) const {
  const auto I = data.units();
  const auto T = static_cast<Eigen::Index>(data.periods());
  ModelState st;
  st.w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(I), T);
  auto& cl = st.cluster;
  const auto& h = config_.priors;
  if (config_.init == InitScheme::Default) {
    cl.s.assign(I, 0);
    cl.betas = {base_.draw_beta(rng)};
    cl.xis = {0.0};
    cl.alpha = 1.0;
    st.sigma2 = 1.0;
    st.tau2 = 1.0;
    st.rho = 0.9;
  } else {
    cl.alpha = rng.gamma(h.a_alpha, h.b_alpha);
    std::vector<std::size_t> counts;
    cl.s.resize(I);
    for (std::size_t i = 0; i < I; ++i) {
      double u = rng.uniform() * (static_cast<double>(i) + cl.alpha);
      std::size_t label = counts.size();
      for (std::size_t k = 0; k < counts.size(); ++k) {
        u -= static_cast<double>(counts[k]);
        if (u <= 0.0) {
          label = k;
          break;
        }
      }
      if (label == counts.size()) counts.push_back(0);
      ++counts[label];
      cl.s[i] = static_cast<int>(label);
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
      cl.betas.push_back(base_.draw_beta(rng));
      cl.xis.push_back(base_.draw_xi(rng));
    }
    st.sigma2 = rng.inv_gamma(h.a_sigma2, h.b_sigma2);
    st.tau2 = rng.inv_gamma(h.a_tau2, h.b_tau2);
    st.rho = clamp_open_unit(rng.beta(h.alpha_rho, h.beta_rho));
  }
  if (fixed_) {
    // Pinned allocations: one base-measure draw per fixed cluster.
    cl.s = *fixed_;
    const int K = cluster_count(cl.s);
    cl.betas.clear();
    cl.xis.clear();
    for (int k = 0; k < K; ++k) {
      cl.betas.push_back(base_.draw_beta(rng));
      cl.xis.push_back(config_.init == InitScheme::Default ? 0.0 : base_.draw_xi(rng));
    }
  }
  return st;
}

void GibbsSampler::sweep(ModelState& st, const PanelData& data, Rng& rng, bool adapting) {
  const auto& h = config_.priors;
  const BandedSPD Q = leroux_precision(st.rho, graph_);

  // 1. allocations
  if (!fixed_) gibbs_allocations(st, data, Q, base_, AllocationOptions{config_.n_aux, false}, rng);

  // 2. cluster coefficients and autoregressive parameters
  update_cluster_betas(st.cluster, data, st.w, st.sigma2, base_, rng);
  const MhTally xi_tally = update_cluster_xis(st.cluster, st.w, st.tau2, Q, base_, step_xi_, rng);
  tally_xi_.accepted += xi_tally.accepted;
  tally_xi_.proposed += xi_tally.proposed;

  // 3. concentration
  st.cluster.alpha = update_concentration(st.cluster.alpha, st.cluster.k(), data.units(), h.a_alpha, h.b_alpha, rng);

  // 4. random effects
  const auto cond = random_effects_full_conditional(st, data, Q);
  st.w = sample_block_tridiagonal(cond.psi, cond.c, rng);

  // 5-7. variances and spatial dependence
  st.sigma2 = update_sigma2(st, data, h.a_sigma2, h.b_sigma2, rng);
  st.tau2 = update_tau2(st, Q, h.a_tau2, h.b_tau2, rng);
  const bool rho_accepted = update_rho(st, laplacian_, h.alpha_rho, h.beta_rho, step_rho_, rng);
  ++tally_rho_.proposed;
  if (rho_accepted) ++tally_rho_.accepted;

  if (adapting && config_.adapt) {
    ++adapt_count_;
    const double gain = 1.0 / std::pow(static_cast<double>(adapt_count_) + 1.0, 0.6);
    if (xi_tally.proposed > 0) step_xi_ *= std::exp(gain * (xi_tally.rate() - config_.target_acceptance));
    step_rho_ *= std::exp(gain * ((rho_accepted ? 1.0 : 0.0) - config_.target_acceptance));
    step_xi_ = std::clamp(step_xi_, 1e-4, 10.0);
    step_rho_ = std::clamp(step_rho_, 1e-4, 10.0);
  }
}

namespace {

void check_inputs(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config) {
  config.validate();
  data.validate();
  if (graph.size() != data.units())
    throw InputError("dimension mismatch: graph has " + std::to_string(graph.size()) + " units, data has " +
                     std::to_string(data.units()));
  if (data.units() == 0 || data.periods() == 0) throw InputError("empty panel");
  if (config.fixed_partition) {
    if (config.fixed_partition->size() != data.units())
      throw InputError("dimension mismatch: fixed partition has " + std::to_string(config.fixed_partition->size()) +
                       " entries, data has " + std::to_string(data.units()) + " units");
    for (int l : *config.fixed_partition)
      if (l < 0) throw InputError("fixed partition labels must be non-negative");
  }
}

}  // namespace

ChainOutput run_chain(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config,
                      std::size_t chain_index) {
  check_inputs(data, graph, config);

  const AdjacencyGraph ordered = config.reorder ? with_rcm_ordering(graph) : graph;
  const auto& order = ordered.permutation();             // band position -> original unit
  const auto position = ordered.inverse_permutation();   // original unit -> band position
  const PanelData work = data.reorder_units(order);

  GibbsSampler sampler(ordered.relabeled(), config, data.coefficients());
  if (config.fixed_partition) {
    Labels pinned(data.units());
    for (std::size_t k = 0; k < order.size(); ++k) pinned[k] = (*config.fixed_partition)[order[k]];
    sampler.set_fixed_partition(canonicalize(pinned));
  }

  Rng rng = Rng::derive(config.seed, chain_index);
  ModelState st = sampler.initial_state(work, rng);

  const auto I = data.units();
  const auto stored = config.stored_draws();
  ChainOutput out;
  out.unit_ids = data.unit_ids;
  out.times = data.times;
  out.coefficients = data.coefficients();
  out.config = config;
  out.chain_index = chain_index;
  out.allocations.reserve(stored);
  out.beta.reserve(stored);
  out.xi.reserve(stored);
  out.w.reserve(stored);
  out.loglik.resize(static_cast<Eigen::Index>(stored), static_cast<Eigen::Index>(I));

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const bool burning = iter < config.burn_in;
    if (iter == config.burn_in) sampler.reset_tallies();
    try {
      sampler.sweep(st, work, rng, burning);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    if (burning || (iter - config.burn_in + 1) % config.thin != 0) continue;

    const auto& cl = st.cluster;
    const auto m = static_cast<Eigen::Index>(out.sigma2.size());
    Labels s(I);
    Eigen::MatrixXd beta(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(data.coefficients()));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(I));
    Eigen::MatrixXd w(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(data.periods()));
    for (std::size_t u = 0; u < I; ++u) {
      const auto p = position[u];
      const auto ui = static_cast<Eigen::Index>(u);
      const auto pi = static_cast<Eigen::Index>(p);
      const int label = cl.s[p];
      s[u] = label;
      beta.row(ui) = cl.betas[label].transpose();
      xi[ui] = cl.xis[label];
      w.row(ui) = st.w.row(pi);
      const double ll = unit_log_likelihood(work.y.row(pi), work.x[p], cl.betas[label], st.w.row(pi), st.sigma2);
      if (!std::isfinite(ll)) throw NumericalError("iteration " + std::to_string(iter) + ": non-finite log-likelihood");
      out.loglik(m, ui) = ll;
    }
    out.allocations.push_back(canonicalize(s));
    out.beta.push_back(std::move(beta));
    out.xi.push_back(std::move(xi));
    out.w.push_back(std::move(w));
    out.sigma2.push_back(st.sigma2);
    out.tau2.push_back(st.tau2);
    out.rho.push_back(st.rho);
    out.alpha.push_back(cl.alpha);
    out.k.push_back(cl.k());
  }
  out.acceptance_xi = sampler.tally_xi().rate();
  out.acceptance_rho = sampler.tally_rho().rate();
  out.final_step_xi = sampler.step_xi();
  out.final_step_rho = sampler.step_rho();
  return out;
}

ChainOutput run_conditional_on_partition(const PanelData& data, const AdjacencyGraph& graph,
                                         const ChainConfig& config) {
  if (!config.fixed_partition) throw InputError("run_conditional_on_partition needs a fixed partition");
  return run_chain(data, graph, config);
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("BSTC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ChainOutput> run_chains(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config) {
  check_inputs(data, graph, config);
  const auto n = config.n_chains;
  std::vector<ChainOutput> outputs(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n; c = next++) {
      try {
        outputs[c] = run_chain(data, graph, config, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const auto workers = std::min(n, worker_threads());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outputs;
}

}  // namespace bstc
