#include <benchmark/benchmark.h>

#include "bstc/banded.hpp"
#include "bstc/gmrf.hpp"
#include "bstc/sampler.hpp"
#include "bstc/simulate.hpp"
#include "bstc/spatial.hpp"

using namespace bstc;

namespace {

AdjacencyGraph ordered_grid(std::size_t side) { return with_rcm_ordering(rook_grid(side, side)).relabeled(); }

void BM_BandCholesky(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const BandedSPD Q = leroux_precision(0.9, ordered_grid(side));
  for (auto _ : state) benchmark::DoNotOptimize(band_cholesky(Q));
}
BENCHMARK(BM_BandCholesky)->Arg(10)->Arg(20)->Arg(40);

void BM_SampleRandomEffects(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto periods = static_cast<std::size_t>(state.range(1));
  const AdjacencyGraph g = ordered_grid(side);
  const BandedSPD Q = leroux_precision(0.9, g);
  const Eigen::VectorXd xi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), 0.5);
  BlockTridiagonal psi = joint_precision_omega(xi, 1.0, Q, periods);
  for (auto& b : psi.diag_blocks) b = b.scaled_plus_identity(1.0, 1.0);
  const Eigen::MatrixXd c = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(periods));
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_block_tridiagonal(psi, c, rng));
}
BENCHMARK(BM_SampleRandomEffects)->Args({10, 13})->Args({20, 13});

void BM_FullSweep(benchmark::State& state) {
  SimulationSpec spec;
  spec.seed = 3;
  const auto sim = simulate_dataset(spec);
  const AdjacencyGraph ordered = with_rcm_ordering(sim.graph);
  const PanelData data = sim.data.reorder_units(ordered.permutation());
  ChainConfig cfg;
  GibbsSampler sampler(ordered.relabeled(), cfg, data.coefficients());
  Rng rng(2);
  ModelState st = sampler.initial_state(data, rng);
  for (int it = 0; it < 50; ++it) sampler.sweep(st, data, rng, false);
  for (auto _ : state) sampler.sweep(st, data, rng, false);
}
BENCHMARK(BM_FullSweep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
