#include "bstc/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "bstc/errors.hpp"
#include "csv.hpp"

namespace bstc {

void PanelData::validate() const {
  const auto I = units();
  const auto T = periods();
  if (I == 0 || T == 0) throw InputError("panel must have at least one unit and one period");
  if (static_cast<std::size_t>(y.rows()) != I || static_cast<std::size_t>(y.cols()) != T)
    throw InputError("response matrix does not match unit/time labels");
  if (x.size() != I) throw InputError("one design matrix per unit required");
  for (std::size_t i = 0; i < I; ++i) {
    if (static_cast<std::size_t>(x[i].rows()) != T || static_cast<std::size_t>(x[i].cols()) != coefficients())
      throw InputError("design matrix of unit " + unit_ids[i] + " has wrong shape");
    if (!x[i].allFinite()) throw InputError("non-finite predictor for unit " + unit_ids[i]);
    if ((x[i].col(0).array() != 1.0).any()) throw InputError("intercept column must be all ones");
  }
  if (!y.allFinite()) throw InputError("non-finite response value");
}

PanelData PanelData::slice_periods(std::size_t first, std::size_t count) const {
  if (first + count > periods() || count == 0) throw InputError("period slice out of range");
  PanelData out;
  out.unit_ids = unit_ids;
  out.times.assign(times.begin() + first, times.begin() + first + count);
  out.predictor_names = predictor_names;
  out.y = y.middleCols(first, count);
  out.x.reserve(x.size());
  for (const auto& xi : x) out.x.emplace_back(xi.middleRows(first, count));
  return out;
}

PanelData PanelData::reorder_units(std::span<const std::size_t> order) const {
  if (order.size() != units()) throw InputError("unit order has wrong length");
  PanelData out;
  out.times = times;
  out.predictor_names = predictor_names;
  out.y.resize(y.rows(), y.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.unit_ids.push_back(unit_ids[order[k]]);
    out.y.row(k) = y.row(order[k]);
    out.x.push_back(x[order[k]]);
  }
  return out;
}

namespace {

bool all_numeric(const std::vector<std::string>& labels) {
  return std::all_of(labels.begin(), labels.end(), [](const auto& s) { return detail::parse_double(s).has_value(); });
}

}  // namespace

PanelData load_panel(const std::filesystem::path& path, const PanelSchema& schema) {
  const auto table = detail::read_csv(path);
  if (table.rows.empty()) throw InputError(path.string() + ": empty file");

  const auto unit_col = table.column(schema.unit_column, path);
  const auto time_col = table.column(schema.time_column, path);
  const auto y_col = table.column(schema.response_column, path);

  std::vector<std::size_t> pred_cols;
  std::vector<std::string> pred_names;
  if (schema.predictor_columns.empty()) {
    for (std::size_t k = 0; k < table.header.size(); ++k) {
      if (k == unit_col || k == time_col || k == y_col) continue;
      pred_cols.push_back(k);
      pred_names.push_back(table.header[k]);
    }
  } else {
    for (const auto& name : schema.predictor_columns) {
      pred_cols.push_back(table.column(name, path));
      pred_names.push_back(name);
    }
  }

  std::vector<std::string> units;
  std::unordered_map<std::string, std::size_t> unit_index;
  std::set<std::string> time_set;
  for (const auto& row : table.rows) {
    if (unit_index.emplace(row[unit_col], units.size()).second) units.push_back(row[unit_col]);
    time_set.insert(row[time_col]);
  }
  std::vector<std::string> times(time_set.begin(), time_set.end());
  if (all_numeric(times)) {
    std::stable_sort(times.begin(), times.end(), [](const auto& a, const auto& b) {
      return *detail::parse_double(a) < *detail::parse_double(b);
    });
  }
  std::unordered_map<std::string, std::size_t> time_index;
  for (std::size_t t = 0; t < times.size(); ++t) time_index[times[t]] = t;

  const auto I = units.size();
  const auto T = times.size();
  const auto P = pred_cols.size() + 1;

  PanelData data;
  data.unit_ids = units;
  data.times = times;
  data.predictor_names = pred_names;
  data.y = Eigen::MatrixXd::Zero(I, T);
  data.x.assign(I, Eigen::MatrixXd::Ones(T, P));
  std::vector<char> seen(I * T, 0);

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const auto i = unit_index.at(row[unit_col]);
    const auto t = time_index.at(row[time_col]);
    if (seen[i * T + t]) throw InputError(where + ": duplicate (unit,time) row " + row[unit_col] + "," + row[time_col]);
    seen[i * T + t] = 1;
    const auto yv = detail::parse_double(row[y_col]);
    if (!yv) throw InputError(where + ": non-numeric field '" + row[y_col] + "' in column " + table.header[y_col]);
    data.y(i, t) = *yv;
    for (std::size_t k = 0; k < pred_cols.size(); ++k) {
      const auto v = detail::parse_double(row[pred_cols[k]]);
      if (!v)
        throw InputError(where + ": non-numeric field '" + row[pred_cols[k]] + "' in column " +
                         table.header[pred_cols[k]]);
      data.x[i](t, k + 1) = *v;
    }
  }
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t t = 0; t < T; ++t)
      if (!seen[i * T + t])
        throw InputError(path.string() + ": incomplete panel, no row for unit " + units[i] + " at time " + times[t]);

  data.validate();
  return data;
}

void write_panel(const std::filesystem::path& path, const PanelData& data) {
  auto out = detail::open_output(path);
  out << "unit,time,y";
  for (const auto& name : data.predictor_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.units(); ++i) {
    for (std::size_t t = 0; t < data.periods(); ++t) {
      out << data.unit_ids[i] << ',' << data.times[t] << ',' << data.y(i, t);
      for (std::size_t k = 1; k < data.coefficients(); ++k) out << ',' << data.x[i](t, k);
      out << '\n';
    }
  }
}

AdjacencyGraph::AdjacencyGraph(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges)
    : neighbors_(n), permutation_(n) {
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw InputError("edge endpoint out of range");
    if (a == b) throw InputError("self-loop on unit " + std::to_string(a));
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    edge_count_ += nb.size();
  }
  edge_count_ /= 2;
}

std::vector<std::size_t> AdjacencyGraph::neighbor_counts() const {
  std::vector<std::size_t> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = neighbors_[i].size();
  return out;
}

bool AdjacencyGraph::adjacent(std::size_t i, std::size_t j) const {
  return std::binary_search(neighbors_[i].begin(), neighbors_[i].end(), j);
}

std::vector<std::pair<std::size_t, std::size_t>> AdjacencyGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < size(); ++i)
    for (auto j : neighbors_[i])
      if (i < j) out.emplace_back(i, j);
  return out;
}

std::vector<std::size_t> AdjacencyGraph::inverse_permutation() const {
  std::vector<std::size_t> inv(size());
  for (std::size_t k = 0; k < size(); ++k) inv[permutation_[k]] = k;
  return inv;
}

AdjacencyGraph AdjacencyGraph::with_permutation(std::vector<std::size_t> permutation) const {
  if (permutation.size() != size()) throw InputError("permutation has wrong length");
  std::vector<char> hit(size(), 0);
  for (auto k : permutation) {
    if (k >= size() || hit[k]) throw InputError("permutation is not a bijection");
    hit[k] = 1;
  }
  AdjacencyGraph g = *this;
  g.permutation_ = std::move(permutation);
  return g;
}

AdjacencyGraph AdjacencyGraph::relabeled() const {
  const auto pos = inverse_permutation();
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (const auto& [a, b] : edges()) e.emplace_back(pos[a], pos[b]);
  return AdjacencyGraph(size(), e);
}

std::size_t AdjacencyGraph::bandwidth() const {
  const auto pos = inverse_permutation();
  std::size_t bw = 0;
  for (std::size_t i = 0; i < size(); ++i)
    for (auto j : neighbors_[i]) {
      const auto d = pos[i] > pos[j] ? pos[i] - pos[j] : pos[j] - pos[i];
      bw = std::max(bw, d);
    }
  return bw;
}

AdjacencyGraph load_adjacency(const std::filesystem::path& path, std::span<const std::string> unit_ids,
                              std::vector<std::string>* warnings) {
  const auto table = detail::read_csv(path);
  const auto a_col = table.column("unit_a", path);
  const auto b_col = table.column("unit_b", path);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < unit_ids.size(); ++i) index.emplace(unit_ids[i], i);

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const auto ia = index.find(row[a_col]);
    const auto ib = index.find(row[b_col]);
    if (ia == index.end()) throw InputError(where + ": unknown unit id '" + row[a_col] + "'");
    if (ib == index.end()) throw InputError(where + ": unknown unit id '" + row[b_col] + "'");
    if (ia->second == ib->second) throw InputError(where + ": self-loop on unit '" + row[a_col] + "'");
    const auto key = std::minmax(ia->second, ib->second);
    if (!seen.insert(key).second) {
      if (warnings) warnings->push_back(where + ": duplicate edge " + row[a_col] + "-" + row[b_col] + " ignored");
      continue;
    }
    edges.emplace_back(key.first, key.second);
  }
  return AdjacencyGraph(unit_ids.size(), edges);
}

void write_adjacency(const std::filesystem::path& path, const AdjacencyGraph& graph,
                     std::span<const std::string> unit_ids) {
  auto out = detail::open_output(path);
  out << "unit_a,unit_b\n";
  for (const auto& [a, b] : graph.edges()) out << unit_ids[a] << ',' << unit_ids[b] << '\n';
}

AdjacencyGraph rook_grid(std::size_t rows, std::size_t cols) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const auto id = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, id + cols);
    }
  return AdjacencyGraph(rows * cols, edges);
}

namespace {

std::pair<double, double> mean_sd(const Eigen::Ref<const Eigen::ArrayXd>& v) {
  const double mean = v.mean();
  if (v.size() < 2) return {mean, 0.0};
  const double ss = (v - mean).square().sum();
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::pair<PanelData, Scaling> standardize(const PanelData& data) {
  data.validate();
  const auto I = data.units();
  const auto T = data.periods();
  PanelData out = data;
  Scaling scaling;
  scaling.means.assign(data.coefficients(), 0.0);
  scaling.sds.assign(data.coefficients(), 1.0);

  const Eigen::ArrayXd yv = Eigen::Map<const Eigen::ArrayXd>(data.y.data(), data.y.size());
  const auto [ym, ys] = mean_sd(yv);
  if (!(ys > 0.0)) throw InputError("zero variance in response y");
  out.y = (data.y.array() - ym) / ys;
  scaling.means[0] = ym;
  scaling.sds[0] = ys;

  for (std::size_t k = 1; k < data.coefficients(); ++k) {
    Eigen::ArrayXd col(I * T);
    for (std::size_t i = 0; i < I; ++i) col.segment(i * T, T) = data.x[i].col(k).array();
    const auto [m, s] = mean_sd(col);
    if (!(s > 0.0)) throw InputError("zero variance in predictor " + data.predictor_names[k - 1]);
    for (std::size_t i = 0; i < I; ++i) out.x[i].col(k) = (data.x[i].col(k).array() - m) / s;
    scaling.means[k] = m;
    scaling.sds[k] = s;
  }
  return {std::move(out), std::move(scaling)};
}

PanelData unstandardize(const PanelData& data, const Scaling& scaling) {
  if (scaling.means.size() != data.coefficients() || scaling.sds.size() != data.coefficients())
    throw InputError("scaling constants do not match panel");
  PanelData out = data;
  out.y = data.y.array() * scaling.sds[0] + scaling.means[0];
  for (auto& xi : out.x)
    for (std::size_t k = 1; k < data.coefficients(); ++k)
      xi.col(k) = xi.col(k).array() * scaling.sds[k] + scaling.means[k];
  return out;
}

namespace {

struct Centered {
  std::vector<double> dev;
  double ss = 0.0;
};

Centered center_checked(std::span<const double> values, const AdjacencyGraph& graph) {
  if (values.size() != graph.size()) throw InputError("value vector length does not match graph");
  if (values.size() < 2) throw InputError("spatial autocorrelation needs at least two units");
  if (graph.edge_count() == 0) throw InputError("spatial autocorrelation needs a graph with at least one edge");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  Centered c;
  c.dev.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    c.dev[i] = values[i] - mean;
    c.ss += c.dev[i] * c.dev[i];
  }
  const double scale = std::max(1.0, std::abs(mean));
  if (!(c.ss > 1e-24 * scale * scale * static_cast<double>(values.size())))
    throw InputError("spatial autocorrelation undefined for a constant vector");
  return c;
}

}  // namespace

double morans_i(std::span<const double> values, const AdjacencyGraph& graph) {
  const auto c = center_checked(values, graph);
  double cross = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (auto j : graph.neighbors(i)) cross += c.dev[i] * c.dev[j];
  const double s0 = 2.0 * static_cast<double>(graph.edge_count());
  return static_cast<double>(values.size()) / s0 * cross / c.ss;
}

double gearys_c(std::span<const double> values, const AdjacencyGraph& graph) {
  const auto c = center_checked(values, graph);
  double diff = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (auto j : graph.neighbors(i)) diff += (values[i] - values[j]) * (values[i] - values[j]);
  const double s0 = 2.0 * static_cast<double>(graph.edge_count());
  return static_cast<double>(values.size() - 1) / (2.0 * s0) * diff / c.ss;
}

std::vector<double> time_average(const PanelData& data) {
  std::vector<double> out(data.units());
  for (std::size_t i = 0; i < data.units(); ++i) out[i] = data.y.row(i).mean();
  return out;
}

}  // namespace bstc
