#include "bstc/dp_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bstc/errors.hpp"

namespace bstc {

double polya_urn_log_prior(const Labels& s, double alpha) {
  if (!is_canonical(s)) throw InputError("allocation labels are not canonical");
  if (!(alpha > 0.0)) throw InputError("alpha must be positive");
  std::vector<std::size_t> counts;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto label = static_cast<std::size_t>(s[i]);
    const double denom = static_cast<double>(i) + alpha;
    if (i > 0) {
      if (label < counts.size()) acc += std::log(static_cast<double>(counts[label]) / denom);
      else acc += std::log(alpha / denom);
    }
    if (label == counts.size()) counts.push_back(0);
    ++counts[label];
  }
  return acc;
}

namespace {

std::size_t sample_log_weights(const std::vector<double>& logw, Rng& rng) {
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  std::vector<double> w(logw.size());
  for (std::size_t k = 0; k < logw.size(); ++k) {
    w[k] = std::exp(logw[k] - mx);
    total += w[k];
  }
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < w.size(); ++k) {
    u -= w[k];
    if (u <= 0.0) return k;
  }
  // Rounding fallback: last positive weight.
  for (std::size_t k = w.size(); k-- > 0;)
    if (w[k] > 0.0) return k;
  return 0;
}

/// Residual sum of squares of unit i under beta, divided by -2 sigma2.
double data_term(const Eigen::RowVectorXd& resid, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                 double sigma2) {
  return -0.5 * (resid - (x * beta).transpose()).squaredNorm() / sigma2;
}

/// Drop empty clusters and relabel by first occurrence.
void compact(ClusterState& cl) {
  std::vector<int> map(cl.betas.size(), -1);
  int next = 0;
  std::vector<Eigen::VectorXd> betas;
  std::vector<double> xis;
  for (auto& l : cl.s) {
    if (map[l] < 0) {
      map[l] = next++;
      betas.push_back(std::move(cl.betas[l]));
      xis.push_back(cl.xis[l]);
    }
    l = map[l];
  }
  cl.betas = std::move(betas);
  cl.xis = std::move(xis);
}

}  // namespace

void gibbs_allocations(ModelState& state, const PanelData& data, const BandedSPD& Q, const BaseMeasure& base,
                       const AllocationOptions& options, Rng& rng) {
  if (options.n_aux == 0) throw InputError("n_aux must be at least 1");
  auto& cl = state.cluster;
  const auto I = data.units();
  if (cl.s.size() != I) throw InputError("dimension mismatch: allocations vs units");
  if (I == 0) return;

  const auto n_aux = options.n_aux;
  std::vector<Eigen::VectorXd> aux_beta(n_aux);
  std::vector<double> aux_xi(n_aux);
  for (std::size_t l = 0; l < n_aux; ++l) {
    aux_beta[l] = base.draw_beta(rng);
    aux_xi[l] = base.draw_xi(rng);
  }
  const double log_new = std::log(cl.alpha / static_cast<double>(n_aux));

  auto sizes = cl.cluster_sizes();
  Eigen::VectorXd unit_xis = cl.unit_xis();
  std::vector<double> logw;
  std::vector<int> candidates;  // >= 0: existing cluster; < 0: aux slot -(l+1)

  for (std::size_t i = 0; i < I; ++i) {
    const int old = cl.s[i];
    if (--sizes[old] == 0) {
      const auto l = rng.uniform_index(n_aux);
      aux_beta[l] = cl.betas[old];
      aux_xi[l] = cl.xis[old];
    }

    logw.clear();
    candidates.clear();
    if (options.prior_only) {
      for (std::size_t k = 0; k < sizes.size(); ++k)
        if (sizes[k] > 0) {
          logw.push_back(std::log(static_cast<double>(sizes[k])));
          candidates.push_back(static_cast<int>(k));
        }
      for (std::size_t l = 0; l < n_aux; ++l) {
        logw.push_back(log_new);
        candidates.push_back(-static_cast<int>(l) - 1);
      }
    } else {
      const SiteConditional site = site_conditional(i, state.w, unit_xis, state.tau2, Q);
      const Eigen::RowVectorXd resid = data.y.row(i) - state.w.row(i);
      const auto w_row = state.w.row(i);
      for (std::size_t k = 0; k < sizes.size(); ++k)
        if (sizes[k] > 0) {
          logw.push_back(std::log(static_cast<double>(sizes[k])) +
                         data_term(resid, data.x[i], cl.betas[k], state.sigma2) +
                         site.log_density(w_row, cl.xis[k]));
          candidates.push_back(static_cast<int>(k));
        }
      for (std::size_t l = 0; l < n_aux; ++l) {
        logw.push_back(log_new + data_term(resid, data.x[i], aux_beta[l], state.sigma2) +
                       site.log_density(w_row, aux_xi[l]));
        candidates.push_back(-static_cast<int>(l) - 1);
      }
    }

    const int pick = candidates[sample_log_weights(logw, rng)];
    int label;
    if (pick >= 0) {
      label = pick;
    } else {
      const auto l = static_cast<std::size_t>(-pick - 1);
      // Re-use an emptied slot if one exists, otherwise append.
      auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
      if (empty != sizes.end()) {
        label = static_cast<int>(empty - sizes.begin());
        cl.betas[label] = aux_beta[l];
        cl.xis[label] = aux_xi[l];
      } else {
        label = static_cast<int>(sizes.size());
        cl.betas.push_back(aux_beta[l]);
        cl.xis.push_back(aux_xi[l]);
        sizes.push_back(0);
      }
      aux_beta[l] = base.draw_beta(rng);
      aux_xi[l] = base.draw_xi(rng);
    }
    cl.s[i] = label;
    ++sizes[label];
    unit_xis[i] = cl.xis[label];
  }
  compact(cl);
}

GaussianPosterior cluster_beta_posterior(std::span<const std::size_t> members, const PanelData& data,
                                         const RandomEffects& w, double sigma2, const BaseMeasure& base) {
  const auto P = static_cast<Eigen::Index>(base.coefficients());
  Eigen::MatrixXd precision = base.precision();
  Eigen::VectorXd shift = base.precision() * base.mu0();
  for (auto i : members) {
    const auto& x = data.x[i];
    precision.noalias() += x.transpose() * x / sigma2;
    shift.noalias() += x.transpose() * (data.y.row(i) - w.row(i)).transpose() / sigma2;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("beta posterior precision is not positive definite");
  GaussianPosterior out;
  out.mean = llt.solve(shift);
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(P, P));
  return out;
}

void update_cluster_betas(ClusterState& cluster, const PanelData& data, const RandomEffects& w, double sigma2,
                          const BaseMeasure& base, Rng& rng) {
  std::vector<std::vector<std::size_t>> members(cluster.betas.size());
  for (std::size_t i = 0; i < cluster.s.size(); ++i) members[cluster.s[i]].push_back(i);
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].empty()) throw NumericalError("empty cluster during beta update");
    const auto post = cluster_beta_posterior(members[j], data, w, sigma2, base);
    Eigen::LLT<Eigen::MatrixXd> llt(post.covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("beta posterior covariance is not positive definite");
    Eigen::VectorXd z(post.mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    cluster.betas[j] = post.mean + llt.matrixL() * z;
  }
}

XiLikelihoodTerms xi_likelihood_terms(int cluster, const ClusterState& state, const RandomEffects& w,
                                      const BandedSPD& Q) {
  const auto I = static_cast<Eigen::Index>(state.s.size());
  const auto T = w.cols();
  Eigen::VectorXd xis = state.unit_xis();
  for (Eigen::Index i = 0; i < I; ++i)
    if (state.s[i] == cluster) xis[i] = 0.0;
  XiLikelihoodTerms terms;
  Eigen::VectorXd e(I);
  for (Eigen::Index t = 1; t < T; ++t) {
    const Eigen::VectorXd r0 = w.col(t) - xis.cwiseProduct(w.col(t - 1));
    for (Eigen::Index i = 0; i < I; ++i) e[i] = state.s[i] == cluster ? w(i, t - 1) : 0.0;
    terms.linear += e.dot(Q.multiply(r0));
    terms.quadratic += Q.quadratic_form(e);
  }
  return terms;
}

double xi_log_target(double xi, const XiLikelihoodTerms& terms, double tau2, const BaseMeasure& base) {
  if (!(xi > -1.0 && xi < 1.0)) return -std::numeric_limits<double>::infinity();
  return base.xi_log_density(xi) - 0.5 / tau2 * (xi * xi * terms.quadratic - 2.0 * xi * terms.linear);
}

MhTally update_cluster_xis(ClusterState& cluster, const RandomEffects& w, double tau2, const BandedSPD& Q,
                           const BaseMeasure& base, double step, Rng& rng, bool prior_only) {
  if (!(step > 0.0)) throw InputError("xi proposal step must be positive");
  MhTally tally;
  for (int j = 0; j < cluster.k(); ++j) {
    const XiLikelihoodTerms terms = prior_only ? XiLikelihoodTerms{} : xi_likelihood_terms(j, cluster, w, Q);
    const double xi = cluster.xis[j];
    const double z = std::atanh(xi);
    const double z_new = z + step * rng.normal();
    const double xi_new = std::tanh(z_new);
    ++tally.proposed;
    if (!(xi_new > -1.0 && xi_new < 1.0)) continue;
    // d xi / d z = 1 - xi^2
    const double log_ratio = xi_log_target(xi_new, terms, tau2, base) + std::log1p(-xi_new * xi_new) -
                             xi_log_target(xi, terms, tau2, base) - std::log1p(-xi * xi);
    if (std::log(rng.uniform()) < log_ratio) {
      cluster.xis[j] = xi_new;
      ++tally.accepted;
    }
  }
  return tally;
}

double update_concentration(double alpha, int clusters, std::size_t n, double shape, double rate, Rng& rng) {
  if (clusters < 1 || n < 1) throw InputError("concentration update needs K >= 1 and n >= 1");
  const double x = rng.beta(alpha + 1.0, static_cast<double>(n));
  const double post_rate = rate - std::log(x);
  const double k = static_cast<double>(clusters);
  const double odds = (shape + k - 1.0) / (static_cast<double>(n) * post_rate);
  const double pi = odds / (1.0 + odds);
  const double post_shape = rng.uniform() < pi ? shape + k : shape + k - 1.0;
  return rng.gamma(post_shape, post_rate);
}

}  // namespace bstc
