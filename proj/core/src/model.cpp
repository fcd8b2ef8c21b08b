#include "bstc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bstc/errors.hpp"

namespace bstc {

Labels canonicalize(const Labels& labels) {
  std::vector<int> map;
  int next = 0;
  Labels out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0) throw InputError("negative cluster label");
    if (static_cast<std::size_t>(l) >= map.size()) map.resize(l + 1, -1);
    if (map[l] < 0) map[l] = next++;
    out[i] = map[l];
  }
  return out;
}

bool is_canonical(const Labels& labels) {
  int next = 0;
  for (int l : labels) {
    if (l < 0 || l > next) return false;
    if (l == next) ++next;
  }
  return true;
}

int cluster_count(const Labels& labels) {
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  return k;
}

Eigen::VectorXd ClusterState::unit_xis() const {
  Eigen::VectorXd out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = xis[s[i]];
  return out;
}

std::vector<std::size_t> ClusterState::cluster_sizes() const {
  std::vector<std::size_t> n(betas.size(), 0);
  for (int l : s) ++n[l];
  return n;
}

void ClusterState::check_invariants() const {
  if (!is_canonical(s)) throw std::logic_error("allocation labels not canonical");
  if (cluster_count(s) != k() || xis.size() != betas.size())
    throw std::logic_error("cluster parameters do not match occupied labels");
  for (double xi : xis)
    if (!(xi > -1.0 && xi < 1.0)) throw std::logic_error("xi outside (-1, 1)");
  if (!(alpha > 0.0)) throw std::logic_error("alpha must be positive");
}

BaseMeasure::BaseMeasure(Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0, double a_xi, double b_xi)
    : mu0_(std::move(mu0)), sigma0_(std::move(Sigma0)), a_xi_(a_xi), b_xi_(b_xi) {
  if (sigma0_.rows() != mu0_.size() || sigma0_.cols() != mu0_.size())
    throw InputError("base measure: Sigma0 must be (p+1) x (p+1)");
  if (!(a_xi_ > 0.0 && b_xi_ > 0.0)) throw InputError("base measure: a_xi and b_xi must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma0_);
  if (llt.info() != Eigen::Success || !sigma0_.isApprox(sigma0_.transpose()))
    throw InputError("base measure: Sigma0 must be symmetric positive definite");
  sigma0_factor_ = llt.matrixL();
  precision_ = llt.solve(Eigen::MatrixXd::Identity(mu0_.size(), mu0_.size()));
}

BaseMeasure BaseMeasure::standard(std::size_t coefficients) {
  const auto p1 = static_cast<Eigen::Index>(coefficients);
  return BaseMeasure(Eigen::VectorXd::Zero(p1), Eigen::MatrixXd::Identity(p1, p1), 1.0, 1.0);
}

Eigen::VectorXd BaseMeasure::draw_beta(Rng& rng) const {
  Eigen::VectorXd z(mu0_.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
  return mu0_ + sigma0_factor_ * z;
}

double BaseMeasure::draw_xi(Rng& rng) const {
  // Keep strictly inside (-1, 1) even when the Beta draw rounds to 0 or 1.
  for (;;) {
    const double xi = 2.0 * rng.beta(a_xi_, b_xi_) - 1.0;
    if (xi > -1.0 && xi < 1.0) return xi;
  }
}

double BaseMeasure::xi_log_density(double xi) const {
  if (!(xi > -1.0 && xi < 1.0)) return -INFINITY;
  const double u = 0.5 * (xi + 1.0);
  return (a_xi_ - 1.0) * std::log(u) + (b_xi_ - 1.0) * std::log1p(-u) - std::log(2.0) -
         (std::lgamma(a_xi_) + std::lgamma(b_xi_) - std::lgamma(a_xi_ + b_xi_));
}

void ModelState::check_invariants() const {
  cluster.check_invariants();
  if (static_cast<std::size_t>(w.rows()) != cluster.s.size()) throw std::logic_error("w has wrong unit count");
  if (!w.allFinite()) throw std::logic_error("non-finite random effect");
  if (!(sigma2 > 0.0) || !(tau2 > 0.0)) throw std::logic_error("variances must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::logic_error("rho outside (0, 1)");
}

}  // namespace bstc
