#include "bstc/simulate.hpp"

#include <cmath>
#include <string>

#include "bstc/config.hpp"
#include "bstc/errors.hpp"
#include "bstc/spatial.hpp"
#include "csv.hpp"

namespace bstc {

Labels grid10_tiling() {
  // Three bands of rows, each split at a different column.
  Labels s(100);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      int region;
      if (r <= 2) region = c <= 4 ? 0 : 1;
      else if (r <= 5) region = c <= 3 ? 2 : 3;
      else region = c <= 2 ? 4 : (c <= 6 ? 5 : 6);
      s[r * 10 + c] = region;
    }
  return s;
}

Labels load_tiling(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  const auto t = detail::read_csv(path);
  const auto cr = t.column("row", path), cc = t.column("col", path), cg = t.column("region", path);
  Labels raw(rows * cols, -1);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto where = path.string() + ":" + std::to_string(t.line_numbers[k]);
    const auto r = detail::parse_int(t.rows[k][cr]);
    const auto c = detail::parse_int(t.rows[k][cc]);
    const auto g = detail::parse_int(t.rows[k][cg]);
    if (!r || !c || !g || *r < 1 || *c < 1 || *g < 0 || static_cast<std::size_t>(*r) > rows ||
        static_cast<std::size_t>(*c) > cols)
      throw InputError(where + ": invalid tiling row");
    auto& cell = raw[(static_cast<std::size_t>(*r) - 1) * cols + static_cast<std::size_t>(*c) - 1];
    if (cell >= 0) throw InputError(where + ": cell listed twice");
    cell = static_cast<int>(*g);
  }
  for (int l : raw)
    if (l < 0) throw InputError(path.string() + ": tiling does not cover the grid");
  return canonicalize(raw);
}

void SimulationSpec::validate() const {
  if (grid_rows == 0 || grid_cols == 0) throw InputError("grid dimensions must be positive");
  if (periods == 0) throw InputError("periods must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
  if (!(sigma2 >= 0.0) || !(tau2 > 0.0)) throw InputError("sigma2 must be non-negative and tau2 positive");
  if (!(coefficient_sd >= 0.0) || !(covariate_sd >= 0.0)) throw InputError("scales must be non-negative");
  if (!(xi_low > -1.0 && xi_low <= xi_high && xi_high <= 1.0))
    throw InputError("xi range must lie within (-1, 1]");
  const auto p = partition();
  if (p.size() != grid_rows * grid_cols) throw InputError("partition does not cover the grid");
}

Labels SimulationSpec::partition() const {
  if (!true_partition.empty()) return canonicalize(true_partition);
  if (grid_rows != 10 || grid_cols != 10) throw InputError("the built-in tiling needs a 10 x 10 grid");
  return grid10_tiling();
}

SimulatedData simulate_dataset(const SimulationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto I = spec.grid_rows * spec.grid_cols;
  const auto T = spec.periods;
  const auto P = spec.predictors + 1;
  const auto Ii = static_cast<Eigen::Index>(I);
  const auto Ti = static_cast<Eigen::Index>(T);

  SimulatedData out;
  out.graph = rook_grid(spec.grid_rows, spec.grid_cols);

  auto& cl = out.truth.cluster;
  cl.s = spec.partition();
  const int K = cluster_count(cl.s);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(P));
    for (auto& v : b) v = spec.coefficient_sd * rng.normal();
    cl.betas.push_back(std::move(b));
  }
  for (int k = 0; k < K; ++k) {
    // Uniform draws stay strictly inside (-1, 1) even when xi_high = 1.
    cl.xis.push_back(spec.xi_low + (spec.xi_high - spec.xi_low) * rng.uniform());
  }
  cl.alpha = 1.0;
  out.truth.sigma2 = spec.sigma2;
  out.truth.tau2 = spec.tau2;
  out.truth.rho = spec.rho;

  auto& d = out.data;
  for (std::size_t i = 0; i < I; ++i) d.unit_ids.push_back(std::to_string(i + 1));
  for (std::size_t t = 0; t < T; ++t) d.times.push_back(std::to_string(t + 1));
  for (std::size_t k = 1; k < P; ++k) d.predictor_names.push_back("x" + std::to_string(k));
  d.x.resize(I);
  for (std::size_t i = 0; i < I; ++i) {
    d.x[i].resize(Ti, static_cast<Eigen::Index>(P));
    d.x[i].col(0).setOnes();
    for (Eigen::Index t = 0; t < Ti; ++t)
      for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(P); ++k) d.x[i](t, k) = spec.covariate_sd * rng.normal();
  }

  // Innovations tau * L^-T z have covariance tau2 Q^-1 for Q = L L'.
  const BandedSPD L = band_cholesky(leroux_precision(spec.rho, out.graph));
  const Eigen::VectorXd xi = cl.unit_xis();
  auto& w = out.truth.w;
  w.resize(Ii, Ti);
  for (Eigen::Index t = 0; t < Ti; ++t) {
    Eigen::VectorXd z(Ii);
    for (auto& v : z) v = rng.normal();
    solve_upper_in_place(L, z);
    w.col(t) = std::sqrt(spec.tau2) * z;
    if (t > 0) w.col(t) += xi.cwiseProduct(w.col(t - 1));
  }

  d.y.resize(Ii, Ti);
  const double sd = std::sqrt(spec.sigma2);
  for (Eigen::Index i = 0; i < Ii; ++i)
    for (Eigen::Index t = 0; t < Ti; ++t) {
      const double eps = sd * rng.normal();
      d.y(i, t) = d.x[i].row(t).dot(cl.betas[cl.s[i]]) + w(i, t) + eps;
    }
  return out;
}

void write_simulation(const std::filesystem::path& dir, const SimulatedData& sim) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
  write_panel(dir / "panel.csv", sim.data);
  write_adjacency(dir / "adjacency.csv", sim.graph, sim.data.unit_ids);

  const auto& tr = sim.truth;
  auto out = detail::open_output(dir / "truth.csv");
  out << "parameter,unit,value\n";
  out << "sigma2,," << format_double(tr.sigma2) << '\n';
  out << "tau2,," << format_double(tr.tau2) << '\n';
  out << "rho,," << format_double(tr.rho) << '\n';
  for (std::size_t i = 0; i < sim.data.units(); ++i) {
    const auto& id = sim.data.unit_ids[i];
    const int s = tr.cluster.s[i];
    out << "cluster," << id << ',' << s + 1 << '\n';
    out << "xi," << id << ',' << format_double(tr.cluster.xis[s]) << '\n';
    const auto& b = tr.cluster.betas[s];
    for (Eigen::Index k = 0; k < b.size(); ++k) out << "beta_" << k << ',' << id << ',' << format_double(b[k]) << '\n';
  }
  if (!out) throw InputError("failed writing truth.csv");

  auto part = detail::open_output(dir / "truth_partition.csv");
  part << "unit,cluster\n";
  for (std::size_t i = 0; i < sim.data.units(); ++i) part << sim.data.unit_ids[i] << ',' << tr.cluster.s[i] + 1 << '\n';
  if (!part) throw InputError("failed writing truth_partition.csv");
}

}  // namespace bstc
