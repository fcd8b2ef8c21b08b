#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "bstc/errors.hpp"
#include "bstc/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bstc;
using namespace bstc::testing;

namespace {

/// Fit skeleton covering the first `periods` periods of `data`.
ChainOutput empty_fit(const PanelData& data, std::size_t periods) {
  ChainOutput fit;
  fit.unit_ids = data.unit_ids;
  fit.times.assign(data.times.begin(), data.times.begin() + static_cast<std::ptrdiff_t>(periods));
  fit.coefficients = data.coefficients();
  return fit;
}

void push_draw(ChainOutput& fit, const Eigen::MatrixXd& beta, const Eigen::VectorXd& xi, const Eigen::MatrixXd& w,
               double sigma2, double tau2, double rho) {
  fit.beta.push_back(beta);
  fit.xi.push_back(xi);
  fit.w.push_back(w);
  fit.sigma2.push_back(sigma2);
  fit.tau2.push_back(tau2);
  fit.rho.push_back(rho);
  fit.allocations.emplace_back(beta.rows(), 0);
  fit.alpha.push_back(1.0);
  fit.k.push_back(1);
}

}  // namespace

TEST(Waic, TwoDrawHandCase) {
  Eigen::MatrixXd ll(2, 1);
  ll << -1.0, -3.0;
  const auto r = waic(ll);
  const double lppd = std::log((std::exp(-1.0) + std::exp(-3.0)) / 2.0);
  EXPECT_NEAR(r.lppd, lppd, 1e-14);
  EXPECT_NEAR(r.p_waic, 2.0 * (lppd - (-2.0)), 1e-14);
  EXPECT_NEAR(r.waic, -2.0 * (r.lppd - r.p_waic), 1e-14);
}

TEST(Waic, SingleDrawHasNoPenalty) {
  Eigen::MatrixXd ll(1, 3);
  ll << -1.5, -0.25, -4.0;
  const auto r = waic(ll);
  EXPECT_EQ(r.p_waic, 0.0);
  EXPECT_NEAR(r.waic, -2.0 * ll.sum(), 1e-14);
}

TEST(Waic, InvariancesAndJensen) {
  Rng rng(1);
  Eigen::MatrixXd ll(50, 6);
  for (auto& v : ll.reshaped()) v = -2.0 + rng.normal();
  const auto r = waic(ll);
  EXPECT_GE(r.p_waic, -1e-8);
  const Eigen::MatrixXd flipped = ll.colwise().reverse().rowwise().reverse();
  const auto s = waic(flipped);
  EXPECT_NEAR(s.waic, r.waic, 1e-10);
  EXPECT_THROW(waic(Eigen::MatrixXd(0, 3)), InputError);
}

TEST(LogMeanExp, MatchesNaiveAndSurvivesUnderflow) {
  const Eigen::Vector3d v(-1.0, -2.5, 0.3);
  EXPECT_NEAR(log_mean_exp(v), std::log(v.array().exp().mean()), 1e-14);
  const Eigen::Vector2d tiny(-1000.0, -1001.0);
  EXPECT_NEAR(log_mean_exp(tiny), -1000.0 + std::log((1.0 + std::exp(-1.0)) / 2.0), 1e-12);
}

TEST(MarginalDensity, MatchesDenseGaussian) {
  Rng rng(2);
  const AdjacencyGraph g = rook_grid(3, 4);
  const MarginalDensity density(g);
  for (int rep = 0; rep < 20; ++rep) {
    const double s2 = 0.2 + rng.uniform(), t2 = 0.2 + rng.uniform(), rho = 0.98 * rng.uniform();
    Eigen::VectorXd y(12), mu(12);
    for (auto& v : y) v = rng.normal();
    for (auto& v : mu) v = rng.normal();
    const Eigen::MatrixXd cov =
        s2 * Eigen::MatrixXd::Identity(12, 12) + t2 * dense_leroux(rho, g).inverse();
    EXPECT_NEAR(density.log_density(y, mu, s2, t2, rho), dense_log_normal(y, mu, cov), 1e-10);
  }
}

TEST(Predictive, SingleUnitSmallTau2LimitIsObservationDensity) {
  Rng rng(3);
  PanelData d = random_panel(1, 3, 1, rng);
  const AdjacencyGraph g(1, std::vector<std::pair<std::size_t, std::size_t>>{});
  ChainOutput fit = empty_fit(d, 2);
  Eigen::MatrixXd beta(1, 2);
  beta << 0.4, -0.7;
  Eigen::MatrixXd w(1, 2);
  w << 0.3, -0.6;
  push_draw(fit, beta, Eigen::VectorXd::Constant(1, 0.5), w, 0.8, 1e-14, 0.5);
  const double mean = d.x[0].row(2).dot(beta.row(0)) + 0.5 * -0.6;
  const double y = d.y(0, 2);
  const double expect = -0.5 * std::log(2.0 * std::numbers::pi * 0.8) - (y - mean) * (y - mean) / 1.6;
  EXPECT_NEAR(one_step_log_density(fit, d, g, 2), expect, 1e-9);
}

TEST(Predictive, MonteCarloMixtureMatchesDenseOracle) {
  // Only beta varies across draws: beta ~ N(m, V) makes the mixture exactly
  // N(X m + D w, C + X V X') per unit block.
  Rng rng(4);
  PanelData d = random_panel(2, 3, 1, rng);
  const AdjacencyGraph g = path_graph(2);
  const double s2 = 0.5, t2 = 0.7, rho = 0.6;
  const Eigen::Vector2d xi(0.3, -0.5);
  Eigen::MatrixXd w(2, 2);
  w << 0.2, 0.9, -0.4, 0.1;
  const Eigen::Vector2d m(0.1, 0.3);
  const double v = 0.2;

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 4);  // stacked design for (beta_unit0, beta_unit1)
  X.block(0, 0, 1, 2) = d.x[0].row(2);
  X.block(1, 2, 1, 2) = d.x[1].row(2);
  Eigen::Vector4d mstack;
  mstack << m, m;
  // Both units share one cluster: beta_unit0 = beta_unit1.
  Eigen::Matrix4d V = Eigen::Matrix4d::Zero();
  V.block(0, 0, 2, 2) = V.block(0, 2, 2, 2) = V.block(2, 0, 2, 2) = V.block(2, 2, 2, 2) = v * Eigen::Matrix2d::Identity();
  const Eigen::MatrixXd C = s2 * Eigen::Matrix2d::Identity() + t2 * dense_leroux(rho, g).inverse();
  const Eigen::VectorXd mean = X * mstack + xi.cwiseProduct(w.col(1));
  const double exact = dense_log_normal(d.y.col(2), mean, C + X * V * X.transpose());

  ChainOutput fit = empty_fit(d, 2);
  const int M = 10000;
  std::vector<double> dens;
  const MarginalDensity md(g);
  for (int k = 0; k < M; ++k) {
    Eigen::Vector2d b(m[0] + std::sqrt(v) * rng.normal(), m[1] + std::sqrt(v) * rng.normal());
    Eigen::MatrixXd beta(2, 2);
    beta.row(0) = b;
    beta.row(1) = b;
    push_draw(fit, beta, xi, w, s2, t2, rho);
    Eigen::VectorXd mu(2);
    for (int i = 0; i < 2; ++i) mu[i] = d.x[i].row(2).dot(b) + xi[i] * w(i, 1);
    dens.push_back(std::exp(md.log_density(d.y.col(2), mu, s2, t2, rho)));
  }
  double mean_dens = 0.0, sq = 0.0;
  for (double x : dens) mean_dens += x / M;
  for (double x : dens) sq += (x - mean_dens) * (x - mean_dens) / (M - 1);
  const double se_log = std::sqrt(sq / M) / mean_dens;
  const double estimate = one_step_log_density(fit, d, g, 2);
  EXPECT_NEAR(estimate, std::log(mean_dens), 1e-10);
  EXPECT_LT(std::abs(estimate - exact), 3.0 * se_log) << estimate << " vs " << exact << " se " << se_log;
}

TEST(Predictive, ForecastIsPosteriorMeanOfConditionalMean) {
  Rng rng(5);
  PanelData d = random_panel(2, 2, 1, rng);
  ChainOutput fit = empty_fit(d, 1);
  Eigen::MatrixXd b1(2, 2), b2(2, 2);
  b1 << 1, 0, 1, 0;
  b2 << 3, 0, 3, 0;
  push_draw(fit, b1, Eigen::Vector2d(0.0, 0.5), Eigen::MatrixXd::Constant(2, 1, 2.0), 1, 1, 0.5);
  push_draw(fit, b2, Eigen::Vector2d(0.0, 0.5), Eigen::MatrixXd::Constant(2, 1, 2.0), 1, 1, 0.5);
  const auto f = one_step_forecast(fit, d, 1);
  EXPECT_NEAR(f[0], 2.0, 1e-14);
  EXPECT_NEAR(f[1], 3.0, 1e-14);
  EXPECT_THROW(one_step_forecast(fit, d, 0), InputError);
}

TEST(ForecastErrors, HandValues) {
  auto e = forecast_errors(Eigen::Vector2d(1.0, -1.0), Eigen::Vector2d::Zero());
  EXPECT_NEAR(e.rmse, 1.0, 1e-15);
  EXPECT_NEAR(e.mae, 1.0, 1e-15);
  e = forecast_errors(Eigen::Vector2d(2.0, 0.0), Eigen::Vector2d::Zero());
  EXPECT_NEAR(e.rmse, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(e.mae, 1.0, 1e-15);
  e = forecast_errors(Eigen::Vector2d(2.0, 0.5), Eigen::Vector2d(2.0, 0.5));
  EXPECT_EQ(e.rmse, 0.0);
  EXPECT_EQ(e.mae, 0.0);
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd y(7), yh(7);
    for (auto& v : y) v = rng.normal();
    for (auto& v : yh) v = rng.normal();
    const auto s = forecast_errors(y, yh);
    EXPECT_GE(s.rmse, s.mae);
    EXPECT_GE(s.mae, 0.0);
  }
}

TEST(OneStepEvaluation, ReportsEveryYearWithConsistentAverages) {
  Rng rng(7);
  const PanelData d = random_panel(4, 5, 1, rng);
  const AdjacencyGraph g = rook_grid(2, 2);
  ChainConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 100;
  cfg.thin = 2;
  const auto r = one_step_evaluation(d, g, cfg, 3);
  ASSERT_EQ(r.years, (std::vector<std::string>{"2002", "2003", "2004"}));
  double sum = 0.0, rm = 0.0, ma = 0.0;
  for (std::size_t y = 0; y < 3; ++y) {
    EXPECT_TRUE(std::isfinite(r.predictive[y]));
    EXPECT_GE(r.rmse[y], r.mae[y]);
    sum += r.predictive[y];
    rm += r.rmse[y] / 3.0;
    ma += r.mae[y] / 3.0;
  }
  EXPECT_NEAR(r.lml_sum, sum, 1e-12);
  EXPECT_NEAR(r.average_rmse, rm, 1e-12);
  EXPECT_NEAR(r.average_mae, ma, 1e-12);
  EXPECT_THROW(one_step_evaluation(d, g, cfg, 1), InputError);
  EXPECT_THROW(one_step_evaluation(d, g, cfg, 6), InputError);

  // Same seed, same report.
  const auto again = one_step_evaluation(d, g, cfg, 3);
  EXPECT_EQ(again.predictive, r.predictive);

  const auto path = std::filesystem::temp_directory_path() / "bstc_metrics.csv";
  MetricReport withw = r;
  withw.waic = WaicResult{1.0, -0.25, 0.25};
  write_metrics_csv(path, withw);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "metric,year,value");
  std::getline(in, line);
  EXPECT_EQ(line, "waic,all,1");
  EXPECT_NE(format_metric_report(withw).find("WAIC"), std::string::npos);
}
