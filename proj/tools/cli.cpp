#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bstc/chain_io.hpp"
#include "bstc/config.hpp"
#include "bstc/data.hpp"
#include "bstc/errors.hpp"
#include "bstc/metrics.hpp"
#include "bstc/partition.hpp"
#include "bstc/sampler.hpp"
#include "bstc/simulate.hpp"
#include "bstc/version.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace bstc::cli {

namespace {

struct PanelOptions {
  std::string panel;
  std::string adjacency;
  std::string unit_column = "unit";
  std::string time_column = "time";
  std::string response_column = "y";
  std::vector<std::string> predictors;
  bool standardize = false;

  void add_to(CLI::App& cmd, bool adjacency_required = true) {
    cmd.add_option("--panel", panel, "Panel CSV (unit, time, response, predictors)")->required()->check(CLI::ExistingFile);
    auto* adj = cmd.add_option("--adj", adjacency, "Adjacency edge list CSV")->check(CLI::ExistingFile);
    if (adjacency_required) adj->required();
    cmd.add_option("--unit-col", unit_column, "Unit id column");
    cmd.add_option("--time-col", time_column, "Time column");
    cmd.add_option("--response", response_column, "Response column");
    cmd.add_option("--predictors", predictors, "Predictor columns (default: all remaining)")->delimiter(',');
    cmd.add_flag("--standardize", standardize, "Standardize response and predictors over all cells");
  }

  PanelData load() const {
    PanelSchema schema{unit_column, time_column, response_column, predictors};
    PanelData data = load_panel(panel, schema);
    if (standardize) data = bstc::standardize(data).first;
    return data;
  }

  AdjacencyGraph load_graph(const PanelData& data, std::ostream& err) const {
    std::vector<std::string> warnings;
    AdjacencyGraph g = load_adjacency(adjacency, data.unit_ids, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    return g;
  }

  void record(Manifest& m) const {
    m.add_input("panel", panel);
    if (!adjacency.empty()) m.add_input("adjacency", adjacency);
  }
};

struct ConfigOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations, burn_in, thin, chains;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "Config file (key = value)")->check(CLI::ExistingFile);
    cmd.add_option("--set", overrides, "Override a config entry, key=value (repeatable)");
    cmd.add_option("--seed", seed, "Random seed");
    cmd.add_option("--iterations", iterations, "Total iterations");
    cmd.add_option("--burn-in", burn_in, "Burn-in iterations");
    cmd.add_option("--thin", thin, "Keep every n-th post burn-in draw");
    cmd.add_option("--chains", chains, "Independent chains run in parallel");
  }

  ChainConfig resolve(ChainConfig base = {}) const {
    ChainConfig c = config_file.empty() ? base : read_config(config_file, base);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InputError("invalid --set '" + kv + "': expected key=value");
      apply_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) c.seed = *seed;
    if (iterations) c.iterations = *iterations;
    if (burn_in) c.burn_in = *burn_in;
    if (thin) c.thin = *thin;
    if (chains) c.n_chains = *chains;
    c.validate();
    return c;
  }

  void record(Manifest& m) const {
    if (!config_file.empty()) m.add_input("config", config_file);
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_resolved_config(const fs::path& path, const ChainConfig& c) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& [k, v] : config_entries(c)) out << k << " = " << v << '\n';
}

fs::path sibling_manifest(const fs::path& output) {
  fs::path m = output;
  m += ".manifest.json";
  return m;
}

// fit ----------------------------------------------------------------------

struct FitCommand {
  PanelOptions panel;
  ConfigOptions config;
  std::string fixed_partition;
  std::string out_dir;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "Run the MCMC sampler and store the draws");
    panel.add_to(*cmd);
    config.add_to(*cmd);
    cmd->add_option("--fixed-partition", fixed_partition, "Pin the allocations to a unit,cluster CSV")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "Output directory")->required();
  }

  void run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) const {
    Manifest manifest("fit", args);
    const PanelData data = panel.load();
    const AdjacencyGraph graph = panel.load_graph(data, err);
    ChainConfig cfg = config.resolve();
    if (!fixed_partition.empty()) cfg.fixed_partition = read_partition_csv(fixed_partition, data.unit_ids);

    const auto chains = run_chains(data, graph, cfg);
    ensure_dir(out_dir);
    write_chain_output(out_dir, chains);
    write_resolved_config(fs::path(out_dir) / "config.resolved", cfg);

    panel.record(manifest);
    config.record(manifest);
    if (!fixed_partition.empty()) manifest.add_input("fixed_partition", fixed_partition);
    manifest.set_config(config_entries(cfg));
    manifest.set_seed(cfg.seed);
    manifest.write(fs::path(out_dir) / "manifest.json");

    const ChainOutput all = merge_chains(chains);
    std::map<int, std::size_t> k_counts;
    for (int k : all.k) ++k_counts[k];
    const auto mode = std::max_element(k_counts.begin(), k_counts.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    out << "stored draws: " << all.draws() << " (" << chains.size() << " chain" << (chains.size() > 1 ? "s" : "")
        << ")\n";
    out << std::fixed << std::setprecision(3);
    out << "posterior mode of K: " << mode->first << " (mass "
        << static_cast<double>(mode->second) / static_cast<double>(all.draws()) << ")\n";
    out << "acceptance xi: " << all.acceptance_xi << ", rho: " << all.acceptance_rho << '\n';
    out << "draws written to " << out_dir << '\n';
  }
};

// simulate -----------------------------------------------------------------

struct SimulateCommand {
  std::string preset = "grid10";
  std::uint64_t seed = 1;
  std::size_t periods = 13;
  std::string tiling;
  std::string out_dir;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Generate a synthetic panel from the model");
    cmd->add_option("--preset", preset, "Design preset: grid10 (alias appendix-e), the 10x10 rook grid with seven regions")->check(CLI::IsMember({"grid10", "appendix-e"}));
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--periods", periods, "Number of time periods")->check(CLI::PositiveNumber);
    cmd->add_option("--tiling", tiling, "row,col,region CSV replacing the built-in 10x10 tiling")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "Output directory")->required();
  }

  void run(const std::vector<std::string>& args, std::ostream& out) const {
    Manifest manifest("simulate", args);
    SimulationSpec spec;
    spec.seed = seed;
    spec.periods = periods;
    if (!tiling.empty()) {
      spec.true_partition = load_tiling(tiling, spec.grid_rows, spec.grid_cols);
      manifest.add_input("tiling", tiling);
    }
    const SimulatedData sim = simulate_dataset(spec);
    write_simulation(out_dir, sim);
    manifest.set_config({{"preset", preset},
                         {"grid", std::to_string(spec.grid_rows) + "x" + std::to_string(spec.grid_cols)},
                         {"periods", std::to_string(spec.periods)},
                         {"predictors", std::to_string(spec.predictors)},
                         {"rho", format_double(spec.rho)},
                         {"sigma2", format_double(spec.sigma2)},
                         {"tau2", format_double(spec.tau2)}});
    manifest.set_seed(seed);
    manifest.write(fs::path(out_dir) / "manifest.json");
    out << "simulated " << sim.data.units() << " units x " << sim.data.periods() << " periods, "
        << cluster_count(sim.truth.cluster.s) << " clusters, written to " << out_dir << '\n';
  }
};

// summarize ----------------------------------------------------------------

struct SummarizeCommand {
  std::string draws;
  std::string loss = "binder";
  double a = 1.0;
  double b = 1.0;
  std::string gvi_scale = "sum";
  std::string out_file;
  std::string psm_file;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("summarize", "Point estimate of the partition from stored draws");
    cmd->add_option("--draws", draws, "Chain directory written by fit")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--loss", loss, "Loss function")->check(CLI::IsMember({"binder", "gvi"}));
    cmd->add_option("--a", a, "Cost of separating co-clustered units")->check(CLI::PositiveNumber);
    cmd->add_option("--b", b, "Cost of joining separate units")->check(CLI::PositiveNumber);
    cmd->add_option("--gvi-scale", gvi_scale, "Joint-entropy weight: sum = a+b, mean = (a+b)/2")
        ->check(CLI::IsMember({"sum", "mean"}));
    cmd->add_option("--out", out_file, "Partition CSV (default: <draws>/partition_<loss>.csv)");
    cmd->add_option("--psm", psm_file, "Also write the posterior similarity matrix as CSV");
  }

  void run(const std::vector<std::string>& args, std::ostream& out) const {
    Manifest manifest("summarize", args);
    const ChainOutput chain = read_chain_output(draws);
    if (chain.draws() == 0) throw InputError("no stored draws in " + draws);
    PartitionSearch search;
    search.gvi_scale = gvi_scale == "mean" ? GviJointScale::Mean : GviJointScale::Sum;
    const Eigen::MatrixXd S = posterior_similarity_matrix(chain.allocations);
    const Labels est = loss == "binder" ? minimize_binder(S, chain.allocations, a, b, search)
                                        : minimize_gvi(chain.allocations, a, b, search);
    const fs::path target = out_file.empty() ? fs::path(draws) / ("partition_" + loss + ".csv") : fs::path(out_file);
    write_partition_csv(target, chain.unit_ids, est);
    if (!psm_file.empty()) {
      std::ofstream p(psm_file);
      if (!p) throw InputError("cannot write " + psm_file);
      p << "unit";
      for (const auto& id : chain.unit_ids) p << ',' << id;
      p << '\n';
      for (Eigen::Index i = 0; i < S.rows(); ++i) {
        p << chain.unit_ids[i];
        for (Eigen::Index j = 0; j < S.cols(); ++j) p << ',' << format_double(S(i, j));
        p << '\n';
      }
    }
    for (const char* f : {"meta", "allocations.csv"}) manifest.add_input(f, fs::path(draws) / f);
    manifest.set_config({{"loss", loss}, {"a", format_double(a)}, {"b", format_double(b)}, {"gvi_scale", gvi_scale}});
    manifest.write(sibling_manifest(target));

    const auto sizes = [&] {
      std::vector<std::size_t> n(static_cast<std::size_t>(cluster_count(est)), 0);
      for (int l : est) ++n[static_cast<std::size_t>(l)];
      return n;
    }();
    out << "estimated clusters: " << sizes.size() << " (sizes";
    for (auto n : sizes) out << ' ' << n;
    out << ")\n";
    out << std::fixed << std::setprecision(3) << "partition entropy: " << partition_entropy(est) << " bits\n";
    out << "partition written to " << target.string() << '\n';
  }
};

// metrics ------------------------------------------------------------------

struct MetricsCommand {
  std::string draws;
  PanelOptions panel;
  ConfigOptions config;
  std::optional<std::size_t> t0;
  std::string out_file;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("metrics", "WAIC from stored draws and one-step-ahead predictive evaluation");
    cmd->add_option("--draws", draws, "Chain directory written by fit (for WAIC)")->check(CLI::ExistingDirectory);
    cmd->add_option("--panel", panel.panel, "Panel CSV (for one-step evaluation)")->check(CLI::ExistingFile);
    cmd->add_option("--adj", panel.adjacency, "Adjacency CSV (for one-step evaluation)")->check(CLI::ExistingFile);
    cmd->add_option("--unit-col", panel.unit_column, "Unit id column");
    cmd->add_option("--time-col", panel.time_column, "Time column");
    cmd->add_option("--response", panel.response_column, "Response column");
    cmd->add_option("--predictors", panel.predictors, "Predictor columns")->delimiter(',');
    cmd->add_flag("--standardize", panel.standardize, "Standardize response and predictors");
    config.add_to(*cmd);
    cmd->add_option("--t0", t0, "First evaluated period (1-based, >= 2)");
    cmd->add_option("--out", out_file, "metrics.csv path")->required();
  }

  void run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) const {
    if (draws.empty() && !t0) throw InputError("metrics needs --draws, --t0, or both");
    Manifest manifest("metrics", args);
    MetricReport report;
    ChainConfig base;
    if (!draws.empty()) {
      const ChainOutput chain = read_chain_output(draws);
      report.waic = waic(chain.loglik);
      base = chain.config;
      base.fixed_partition.reset();
      manifest.add_input("loglik", fs::path(draws) / "loglik.csv");
    }
    if (t0) {
      if (panel.panel.empty() || panel.adjacency.empty()) throw InputError("--t0 needs --panel and --adj");
      const PanelData data = panel.load();
      const AdjacencyGraph graph = panel.load_graph(data, err);
      const ChainConfig cfg = config.resolve(base);
      report = [&] {
        auto r = one_step_evaluation(data, graph, cfg, *t0);
        r.waic = report.waic;
        return r;
      }();
      panel.record(manifest);
      config.record(manifest);
      manifest.set_config(config_entries(cfg));
      manifest.set_seed(cfg.seed);
    }
    write_metrics_csv(out_file, report);
    manifest.write(sibling_manifest(out_file));
    out << format_metric_report(report);
  }
};

// explore ------------------------------------------------------------------

struct ExploreCommand {
  PanelOptions panel;
  std::string out_file;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("explore", "Moran's I and Geary's C of the response");
    panel.add_to(*cmd);
    cmd->add_option("--out", out_file, "CSV of statistic,period,value");
  }

  void run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) const {
    Manifest manifest("explore", args);
    const PanelData data = panel.load();
    const AdjacencyGraph graph = panel.load_graph(data, err);
    std::vector<std::tuple<std::string, std::string, double>> rows;
    const auto avg = time_average(data);
    rows.emplace_back("morans_i", "mean", morans_i(avg, graph));
    rows.emplace_back("gearys_c", "mean", gearys_c(avg, graph));
    for (std::size_t t = 0; t < data.periods(); ++t) {
      std::vector<double> col(data.units());
      for (std::size_t i = 0; i < data.units(); ++i) col[i] = data.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
      rows.emplace_back("morans_i", data.times[t], morans_i(col, graph));
      rows.emplace_back("gearys_c", data.times[t], gearys_c(col, graph));
    }
    out << std::fixed << std::setprecision(4);
    out << std::left << std::setw(12) << "period" << std::right << std::setw(12) << "Moran's I" << std::setw(12)
        << "Geary's C" << '\n';
    for (std::size_t r = 0; r < rows.size(); r += 2)
      out << std::left << std::setw(12) << std::get<1>(rows[r]) << std::right << std::setw(12)
          << std::get<2>(rows[r]) << std::setw(12) << std::get<2>(rows[r + 1]) << '\n';
    if (!out_file.empty()) {
      std::ofstream f(out_file);
      if (!f) throw InputError("cannot write " + out_file);
      f << "statistic,period,value\n";
      for (const auto& [s, p, v] : rows) f << s << ',' << p << ',' << format_double(v) << '\n';
      panel.record(manifest);
      manifest.write(sibling_manifest(out_file));
    }
  }
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian spatio-temporal clustering of areal panels"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  FitCommand fit;
  SimulateCommand simulate;
  SummarizeCommand summarize;
  MetricsCommand metrics;
  ExploreCommand explore;
  fit.add_to(app);
  simulate.add_to(app);
  summarize.add_to(app);
  metrics.add_to(app);
  explore.add_to(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "fit") fit.run(args, out, err);
    else if (name == "simulate") simulate.run(args, out);
    else if (name == "summarize") summarize.run(args, out);
    else if (name == "metrics") metrics.run(args, out, err);
    else explore.run(args, out, err);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace bstc::cli
