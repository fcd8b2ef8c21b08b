#include "bstc/gmrf.hpp"

#include <cmath>
#include <optional>

#include "bstc/errors.hpp"

namespace bstc {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InputError(std::string("dimension mismatch: ") + what);
}

/// Lower triangular factor of one time block: band storage until fill-in
/// forces a dense factor.
class BlockFactor {
 public:
  explicit BlockFactor(BandedSPD band) : band_(std::move(band)) {}
  explicit BlockFactor(Eigen::MatrixXd dense) : dense_(std::move(dense)) {}

  void solve_lower(Eigen::Ref<Eigen::VectorXd> x) const {
    if (band_) solve_lower_in_place(*band_, x);
    else dense_.triangularView<Eigen::Lower>().solveInPlace(x);
  }
  void solve_lower_columns(Eigen::Ref<Eigen::MatrixXd> x) const {
    if (band_) solve_lower_columns_in_place(*band_, x);
    else dense_.triangularView<Eigen::Lower>().solveInPlace(x);
  }
  void solve_upper(Eigen::Ref<Eigen::VectorXd> x) const {
    if (band_) solve_upper_in_place(*band_, x);
    else dense_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  }

 private:
  std::optional<BandedSPD> band_;
  Eigen::MatrixXd dense_;
};

struct ForwardPass {
  std::vector<BlockFactor> factors;
  std::vector<Eigen::VectorXd> means;  // m_t
};

ForwardPass forward_pass(const BlockTridiagonal& psi, const Eigen::MatrixXd& c) {
  const auto T = psi.periods();
  const auto I = psi.block_size();
  if (T == 0) throw InputError("block-tridiagonal matrix has no blocks");
  require_same_size(psi.off_blocks.size() + 1, T, "off-diagonal block count");
  require_same_size(static_cast<std::size_t>(c.rows()), I, "c rows");
  require_same_size(static_cast<std::size_t>(c.cols()), T, "c columns");

  ForwardPass out;
  out.factors.reserve(T);
  out.means.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::VectorXd rhs = c.col(t);
    const bool coupled = t > 0 && !psi.off_blocks[t - 1].is_zero();
    if (t > 0 && coupled) rhs -= psi.off_blocks[t - 1].multiply_transpose(out.means[t - 1]);

    if (!coupled) {
      out.factors.emplace_back(band_cholesky(psi.diag_blocks[t]));
    } else {
      // Schur complement Psi_tt - B' Sigma_{t-1} B with A = L_{t-1}^{-1} B.
      Eigen::MatrixXd a = psi.off_blocks[t - 1].to_dense();
      out.factors[t - 1].solve_lower_columns(a);
      Eigen::MatrixXd p = psi.diag_blocks[t].to_dense();
      p.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose(), -1.0);
      Eigen::LLT<Eigen::MatrixXd> llt(p);
      if (llt.info() != Eigen::Success)
        throw NumericalError("not positive definite (time block " + std::to_string(t) + ")");
      out.factors.emplace_back(Eigen::MatrixXd(llt.matrixL()));
    }
    out.factors[t].solve_lower(rhs);
    out.factors[t].solve_upper(rhs);
    out.means.push_back(std::move(rhs));
  }
  return out;
}

}  // namespace

Eigen::MatrixXd BlockTridiagonal::to_dense() const {
  const auto T = periods();
  const auto I = static_cast<Eigen::Index>(block_size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(I * T, I * T);
  for (std::size_t t = 0; t < T; ++t) {
    m.block(t * I, t * I, I, I) = diag_blocks[t].to_dense();
    if (t + 1 < T) {
      const Eigen::MatrixXd off = off_blocks[t].to_dense();
      m.block(t * I, (t + 1) * I, I, I) = off;
      m.block((t + 1) * I, t * I, I, I) = off.transpose();
    }
  }
  return m;
}

BandedSPD diagonal_sandwich(const BandedSPD& Q, const Eigen::VectorXd& xi) {
  require_same_size(Q.size(), static_cast<std::size_t>(xi.size()), "xi length");
  BandedSPD out(Q.size(), Q.bandwidth());
  for (std::size_t i = 0; i < Q.size(); ++i)
    for (std::size_t j = Q.first_in_row(i); j <= i; ++j) out.lower(i, j) = xi[i] * Q.lower(i, j) * xi[j];
  return out;
}

BandMatrix scaled_left_diagonal(const BandedSPD& Q, const Eigen::VectorXd& xi, double scale) {
  require_same_size(Q.size(), static_cast<std::size_t>(xi.size()), "xi length");
  BandMatrix out(Q.size(), Q.bandwidth());
  for (std::size_t i = 0; i < Q.size(); ++i)
    for (std::size_t j = out.first_in_row(i); j <= out.last_in_row(i); ++j) out.at(i, j) = scale * xi[i] * Q(i, j);
  return out;
}

namespace {

BandedSPD add(const BandedSPD& a, const BandedSPD& b, double scale, double diagonal) {
  BandedSPD out(a.size(), a.bandwidth());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = a.first_in_row(i); j <= i; ++j) out.lower(i, j) = scale * (a.lower(i, j) + b.lower(i, j));
    out.lower(i, i) += diagonal;
  }
  return out;
}

BlockTridiagonal build_precision(const Eigen::VectorXd& xi, double tau2, const BandedSPD& Q, std::size_t T,
                                 double diagonal) {
  if (!(tau2 > 0.0)) throw InputError("tau2 must be positive");
  if (T == 0) throw InputError("at least one period required");
  require_same_size(Q.size(), static_cast<std::size_t>(xi.size()), "xi length");
  const double prec = 1.0 / tau2;
  BlockTridiagonal out;
  const BandedSPD sandwich = diagonal_sandwich(Q, xi);
  const BandedSPD zero(Q.size(), Q.bandwidth());
  const BandedSPD inner = add(Q, sandwich, prec, diagonal);
  const BandedSPD last = add(Q, zero, prec, diagonal);
  for (std::size_t t = 0; t < T; ++t) out.diag_blocks.push_back(t + 1 < T ? inner : last);
  // Block (t, t+1); block (t+1, t) is its transpose -Q diag(xi) / tau2.
  const BandMatrix off = scaled_left_diagonal(Q, xi, -prec);
  for (std::size_t t = 0; t + 1 < T; ++t) out.off_blocks.push_back(off);
  return out;
}

}  // namespace

BlockTridiagonal joint_precision_omega(const Eigen::VectorXd& xi, double tau2, const BandedSPD& Q,
                                       std::size_t periods) {
  return build_precision(xi, tau2, Q, periods, 0.0);
}

Eigen::MatrixXd fitted_values(const ClusterState& cluster, const PanelData& data) {
  require_same_size(cluster.s.size(), data.units(), "allocations vs units");
  Eigen::MatrixXd f(data.units(), data.periods());
  for (std::size_t i = 0; i < data.units(); ++i) f.row(i) = (data.x[i] * cluster.betas[cluster.s[i]]).transpose();
  return f;
}

RandomEffectsConditional random_effects_full_conditional(const ModelState& state, const PanelData& data,
                                                         const BandedSPD& Q) {
  require_same_size(Q.size(), data.units(), "Q vs units");
  if (!(state.sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  RandomEffectsConditional out;
  out.psi = build_precision(state.cluster.unit_xis(), state.tau2, Q, data.periods(), 1.0 / state.sigma2);
  out.c = (data.y - fitted_values(state.cluster, data)) / state.sigma2;
  return out;
}

RandomEffects sample_block_tridiagonal(const BlockTridiagonal& psi, const Eigen::MatrixXd& c, Rng& rng) {
  const auto fw = forward_pass(psi, c);
  const auto T = psi.periods();
  const auto I = static_cast<Eigen::Index>(psi.block_size());
  RandomEffects w(I, T);
  Eigen::VectorXd z(I);
  for (std::size_t tt = T; tt-- > 0;) {
    for (Eigen::Index i = 0; i < I; ++i) z[i] = rng.normal();
    if (tt + 1 < T && !psi.off_blocks[tt].is_zero()) {
      // z - L_t^{-1} Psi_{t,t+1} w_{t+1}
      Eigen::VectorXd coupling = psi.off_blocks[tt].multiply(w.col(tt + 1));
      fw.factors[tt].solve_lower(coupling);
      z -= coupling;
    }
    fw.factors[tt].solve_upper(z);
    w.col(tt) = fw.means[tt] + z;
  }
  return w;
}

Eigen::MatrixXd block_tridiagonal_mean(const BlockTridiagonal& psi, const Eigen::MatrixXd& c) {
  const auto fw = forward_pass(psi, c);
  const auto T = psi.periods();
  Eigen::MatrixXd mean(psi.block_size(), T);
  for (std::size_t tt = T; tt-- > 0;) {
    Eigen::VectorXd v = fw.means[tt];
    if (tt + 1 < T && !psi.off_blocks[tt].is_zero()) {
      Eigen::VectorXd coupling = psi.off_blocks[tt].multiply(mean.col(tt + 1));
      fw.factors[tt].solve_lower(coupling);
      fw.factors[tt].solve_upper(coupling);
      v -= coupling;
    }
    mean.col(tt) = v;
  }
  return mean;
}

double SiteConditional::log_density(const Eigen::Ref<const Eigen::RowVectorXd>& w_row, double xi_i) const {
  double acc = 0.0;
  double prev = 0.0;
  for (Eigen::Index t = 0; t < w_row.size(); ++t) {
    const double r = w_row[t] - xi_i * prev - offset[t];
    acc += r * r;
    prev = w_row[t];
  }
  const auto T = static_cast<double>(w_row.size());
  return -0.5 * (T * (kLogTwoPi + std::log(variance)) + acc / variance);
}

SiteConditional site_conditional(std::size_t i, const RandomEffects& w, const Eigen::VectorXd& unit_xis,
                                 double tau2, const BandedSPD& Q) {
  const auto I = Q.size();
  const auto T = static_cast<std::size_t>(w.cols());
  SiteConditional sc;
  const double qii = Q.lower(i, i);
  sc.variance = tau2 / qii;
  sc.offset = Eigen::VectorXd::Zero(T);
  const auto lo = Q.first_in_row(i);
  const auto hi = Q.last_in_column(i);
  for (std::size_t k = lo; k <= hi && k < I; ++k) {
    if (k == i) continue;
    const double qik = Q(i, k);
    if (qik == 0.0) continue;
    const double xk = unit_xis[k];
    for (std::size_t t = 0; t < T; ++t) {
      const double r = w(k, t) - (t > 0 ? xk * w(k, t - 1) : 0.0);
      sc.offset[t] -= qik * r;
    }
  }
  sc.offset /= qii;
  return sc;
}

double conditional_site_density(std::size_t i, const RandomEffects& w, double xi_i,
                                const Eigen::VectorXd& unit_xis, double tau2, const BandedSPD& Q) {
  return site_conditional(i, w, unit_xis, tau2, Q).log_density(w.row(i), xi_i);
}

Eigen::MatrixXd ar_innovations(const RandomEffects& w, const Eigen::VectorXd& unit_xis) {
  Eigen::MatrixXd r = w;
  for (Eigen::Index t = w.cols() - 1; t >= 1; --t) r.col(t) -= unit_xis.cwiseProduct(w.col(t - 1));
  return r;
}

double ar_quadratic_form(const RandomEffects& w, const Eigen::VectorXd& unit_xis, const BandedSPD& Q) {
  const Eigen::MatrixXd r = ar_innovations(w, unit_xis);
  double acc = 0.0;
  for (Eigen::Index t = 0; t < r.cols(); ++t) acc += Q.quadratic_form(r.col(t));
  return acc;
}

double unit_log_likelihood(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& beta, const Eigen::Ref<const Eigen::RowVectorXd>& w,
                           double sigma2) {
  const Eigen::RowVectorXd resid = y - (x * beta).transpose() - w;
  const auto T = static_cast<double>(y.size());
  return -0.5 * (T * (kLogTwoPi + std::log(sigma2)) + resid.squaredNorm() / sigma2);
}

}  // namespace bstc
