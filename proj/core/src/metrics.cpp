#include "bstc/metrics.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>

#include "bstc/config.hpp"
#include "bstc/errors.hpp"
#include "bstc/spatial.hpp"
#include "csv.hpp"

namespace bstc {

double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw InputError("log_mean_exp of an empty vector");
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum() / static_cast<double>(v.size()));
}

WaicResult waic(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() == 0 || loglik.cols() == 0) throw InputError("waic needs at least one draw and one unit");
  if (!loglik.allFinite()) throw InputError("waic: non-finite log-likelihood");
  WaicResult r;
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    const double lme = log_mean_exp(loglik.col(i));
    r.lppd += lme;
    r.p_waic += 2.0 * (lme - loglik.col(i).mean());
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

MarginalDensity::MarginalDensity(const AdjacencyGraph& graph) {
  const AdjacencyGraph ordered = with_rcm_ordering(AdjacencyGraph(graph.size(), graph.edges()));
  order_ = ordered.permutation();
  laplacian_ = graph_laplacian(ordered);
}

double MarginalDensity::log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, double sigma2,
                                    double tau2, double rho) const {
  const auto n = order_.size();
  if (static_cast<std::size_t>(y.size()) != n || static_cast<std::size_t>(mean.size()) != n)
    throw InputError("dimension mismatch: areal vector vs graph");
  // C = sigma2 I + tau2 Q^-1 = Q^-1 A with A = sigma2 Q + tau2 I; Q and A commute.
  const BandedSPD Q = laplacian_.scaled_plus_identity(rho, 1.0 - rho);
  const BandedSPD A = laplacian_.scaled_plus_identity(sigma2 * rho, sigma2 * (1.0 - rho) + tau2);
  const BandedSPD LQ = band_cholesky(Q);
  const BandedSPD LA = band_cholesky(A);
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) r[static_cast<Eigen::Index>(k)] = y[order_[k]] - mean[order_[k]];
  const Eigen::VectorXd x = band_solve(LA, Q.multiply(r));
  const double logdet = log_determinant(LA) - log_determinant(LQ);
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + r.dot(x));
}

namespace {

void check_fit(const ChainOutput& fit, const PanelData& data, std::size_t period) {
  if (fit.draws() == 0) throw InputError("fit has no stored draws");
  if (period == 0 || period >= data.periods()) throw InputError("evaluated period out of range");
  if (fit.periods() != period) throw InputError("fit must cover exactly the periods before the evaluated one");
  if (fit.units() != data.units()) throw InputError("dimension mismatch: fit vs data units");
}

/// fitted_t + diag(xi) w_{t-1} under draw m.
Eigen::VectorXd predictive_mean(const ChainOutput& fit, const PanelData& data, std::size_t period, std::size_t m) {
  const auto I = static_cast<Eigen::Index>(data.units());
  const auto last = static_cast<Eigen::Index>(period) - 1;
  Eigen::VectorXd mu(I);
  for (Eigen::Index i = 0; i < I; ++i)
    mu[i] = data.x[i].row(static_cast<Eigen::Index>(period)).dot(fit.beta[m].row(i)) + fit.xi[m][i] * fit.w[m](i, last);
  return mu;
}

}  // namespace

double one_step_log_density(const ChainOutput& fit, const PanelData& data, const AdjacencyGraph& graph,
                            std::size_t period) {
  check_fit(fit, data, period);
  if (graph.size() != data.units()) throw InputError("dimension mismatch: graph vs data units");
  const MarginalDensity density(graph);
  const Eigen::VectorXd y = data.y.col(static_cast<Eigen::Index>(period));
  Eigen::VectorXd logs(static_cast<Eigen::Index>(fit.draws()));
  for (std::size_t m = 0; m < fit.draws(); ++m)
    logs[static_cast<Eigen::Index>(m)] =
        density.log_density(y, predictive_mean(fit, data, period, m), fit.sigma2[m], fit.tau2[m], fit.rho[m]);
  return log_mean_exp(logs);
}

Eigen::VectorXd one_step_forecast(const ChainOutput& fit, const PanelData& data, std::size_t period) {
  check_fit(fit, data, period);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.units()));
  for (std::size_t m = 0; m < fit.draws(); ++m) acc += predictive_mean(fit, data, period, m);
  return acc / static_cast<double>(fit.draws());
}

ErrorSummary forecast_errors(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() == 0) throw InputError("forecast error needs equal, non-empty vectors");
  const Eigen::ArrayXd e = (y - yhat).array();
  const double n = static_cast<double>(y.size());
  return {std::sqrt(e.square().sum() / n), e.abs().sum() / n};
}

MetricReport one_step_evaluation(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config,
                                 std::size_t t0) {
  const auto T = data.periods();
  if (t0 < 2 || t0 > T) throw InputError("t0 out of range: must satisfy 2 <= t0 <= " + std::to_string(T));
  const std::size_t years = T - t0 + 1;
  MetricReport report;
  report.predictive.assign(years, 0.0);
  report.rmse.assign(years, 0.0);
  report.mae.assign(years, 0.0);
  std::vector<std::exception_ptr> errors(years);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t y = next++; y < years; y = next++) {
      try {
        const std::size_t period = t0 - 1 + y;  // 0-based
        const PanelData past = data.slice_periods(0, period);
        std::vector<ChainOutput> chains;
        for (std::size_t c = 0; c < config.n_chains; ++c) chains.push_back(run_chain(past, graph, config, c));
        const ChainOutput fit = merge_chains(chains);
        report.predictive[y] = one_step_log_density(fit, data, graph, period);
        const auto err = forecast_errors(data.y.col(static_cast<Eigen::Index>(period)),
                                         one_step_forecast(fit, data, period));
        report.rmse[y] = err.rmse;
        report.mae[y] = err.mae;
      } catch (...) {
        errors[y] = std::current_exception();
      }
    }
  };
  const auto workers = std::min(years, worker_threads());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t y = 0; y < years; ++y) {
    report.years.push_back(data.times[t0 - 1 + y]);
    report.lml_sum += report.predictive[y];
    report.average_rmse += report.rmse[y] / static_cast<double>(years);
    report.average_mae += report.mae[y] / static_cast<double>(years);
  }
  return report;
}

void write_metrics_csv(const std::filesystem::path& path, const MetricReport& r) {
  auto out = detail::open_output(path);
  out << "metric,year,value\n";
  if (r.waic) {
    out << "waic,all," << format_double(r.waic->waic) << '\n';
    out << "lppd,all," << format_double(r.waic->lppd) << '\n';
    out << "p_waic,all," << format_double(r.waic->p_waic) << '\n';
  }
  for (std::size_t y = 0; y < r.years.size(); ++y) {
    out << "predictive_loglik," << r.years[y] << ',' << format_double(r.predictive[y]) << '\n';
    out << "rmse," << r.years[y] << ',' << format_double(r.rmse[y]) << '\n';
    out << "mae," << r.years[y] << ',' << format_double(r.mae[y]) << '\n';
  }
  if (!r.years.empty()) {
    out << "lml_sum,all," << format_double(r.lml_sum) << '\n';
    out << "rmse_average,all," << format_double(r.average_rmse) << '\n';
    out << "mae_average,all," << format_double(r.average_mae) << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

std::string format_metric_report(const MetricReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3);
  if (r.waic) s << "WAIC " << r.waic->waic << "  (lppd " << r.waic->lppd << ", p_waic " << r.waic->p_waic << ")\n";
  if (!r.years.empty()) {
    s << std::left << std::setw(12) << "year" << std::right << std::setw(14) << "pred.loglik" << std::setw(10)
      << "rmse" << std::setw(10) << "mae" << '\n';
    for (std::size_t y = 0; y < r.years.size(); ++y)
      s << std::left << std::setw(12) << r.years[y] << std::right << std::setw(14) << r.predictive[y]
        << std::setw(10) << r.rmse[y] << std::setw(10) << r.mae[y] << '\n';
    s << std::left << std::setw(12) << "sum/avg" << std::right << std::setw(14) << r.lml_sum << std::setw(10)
      << r.average_rmse << std::setw(10) << r.average_mae << '\n';
  }
  return s.str();
}

}  // namespace bstc
