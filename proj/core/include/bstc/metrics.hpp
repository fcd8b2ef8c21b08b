#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bstc/data.hpp"
#include "bstc/sampler.hpp"

namespace bstc {

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
};

/// From a draws x units matrix of log p(y_i | theta^m):
///   lppd = sum_i log mean_m exp(l_mi), p_waic = 2 sum_i (log mean exp - mean),
///   waic = -2 (lppd - p_waic).
WaicResult waic(const Eigen::MatrixXd& loglik);

/// log mean exp of the values, computed stably.
double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Gaussian density N(mean, sigma2 I + tau2 Q(rho)^-1) for an areal vector,
/// evaluated through band factorizations of Q and sigma2 Q + tau2 I.
class MarginalDensity {
 public:
  explicit MarginalDensity(const AdjacencyGraph& graph);
  double log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, double sigma2, double tau2,
                     double rho) const;

 private:
  std::vector<std::size_t> order_;  // band position -> unit
  BandedSPD laplacian_;
};

/// log p(Y_t | Y_1..t-1) estimated from draws of a fit to the first `period`
/// periods: log mean_m N(y_t | fitted_t + diag(xi) w_{t-1}, sigma2 I + tau2 Q^-1),
/// with w_t integrated out. `period` is the 0-based index of the evaluated
/// period in `data` and must equal fit.periods().
double one_step_log_density(const ChainOutput& fit, const PanelData& data, const AdjacencyGraph& graph,
                            std::size_t period);

/// Posterior-mean point forecast of y at `period` from the same draws.
Eigen::VectorXd one_step_forecast(const ChainOutput& fit, const PanelData& data, std::size_t period);

struct ErrorSummary {
  double rmse = 0.0;
  double mae = 0.0;
};
ErrorSummary forecast_errors(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

struct MetricReport {
  std::optional<WaicResult> waic;
  std::vector<std::string> years;  // evaluated period labels
  std::vector<double> predictive;  // log p(Y_t | Y_1..t-1)
  double lml_sum = 0.0;
  std::vector<double> rmse;
  std::vector<double> mae;
  double average_rmse = 0.0;
  double average_mae = 0.0;
};

/// Refits the chain on periods 1..t-1 for every t in [t0, T] (1-based, t0 >= 2)
/// and records the one-step predictive log-likelihood and forecast errors of
/// period t. Years are fitted on worker threads.
MetricReport one_step_evaluation(const PanelData& data, const AdjacencyGraph& graph, const ChainConfig& config,
                                 std::size_t t0);

/// Rows `metric,year,value`; WAIC rows use year "all".
void write_metrics_csv(const std::filesystem::path& path, const MetricReport& report);
/// Aligned text table of the same numbers.
std::string format_metric_report(const MetricReport& report);

}  // namespace bstc
