#include "bstc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "bstc/errors.hpp"
#include "csv.hpp"

namespace bstc {

namespace {

void check_draws(const std::vector<Labels>& draws) {
  if (draws.empty()) throw InputError("empty draw list");
  const auto n = draws.front().size();
  for (const auto& d : draws)
    if (d.size() != n) throw InputError("draws have inconsistent lengths");
}

void check_costs(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("loss costs a and b must be positive");
}

double entropy_of_counts(const std::vector<std::size_t>& counts, double n) {
  double h = 0.0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  return h;
}

std::vector<std::size_t> counts_of(const Labels& p) {
  std::vector<std::size_t> c;
  for (int l : p) {
    if (l < 0) throw InputError("negative cluster label");
    if (static_cast<std::size_t>(l) >= c.size()) c.resize(l + 1, 0);
    ++c[l];
  }
  return c;
}

/// Higher value wins; ties go to fewer clusters, then smaller labels.
bool better(double v1, const Labels& p1, double v2, const Labels& p2) {
  const double tol = 1e-12 * std::max({1.0, std::abs(v1), std::abs(v2)});
  if (v1 > v2 + tol) return true;
  if (v2 > v1 + tol) return false;
  const int k1 = cluster_count(p1), k2 = cluster_count(p2);
  if (k1 != k2) return k1 < k2;
  return p1 < p2;
}

Labels search(std::size_t n, const std::vector<Labels>& draws, const std::function<double(const Labels&)>& objective,
              const PartitionSearch& opts) {
  Labels best;
  double best_v = -INFINITY;
  auto offer = [&](const Labels& p) {
    const double v = objective(p);
    if (best.empty() || better(v, p, best_v, best)) {
      best = p;
      best_v = v;
    }
  };
  if (n <= opts.exhaustive_limit) {
    for_each_partition(n, offer);
    return best;
  }

  std::map<Labels, int> seen;
  for (const auto& d : draws) seen.emplace(canonicalize(d), 0);
  for (const auto& [p, _] : seen) offer(p);

  // Single-unit reassignment hill climbing; only strict improvements move.
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int k = cluster_count(best);
      Labels trial = best;
      Labels step_best;
      double step_v = best_v;
      for (int target = 0; target <= k; ++target) {
        if (target == best[i]) continue;
        trial[i] = target;
        Labels cand = canonicalize(trial);
        const double v = objective(cand);
        const double tol = 1e-12 * std::max({1.0, std::abs(v), std::abs(step_v)});
        if (v > step_v + tol) {
          step_v = v;
          step_best = std::move(cand);
        }
      }
      if (!step_best.empty()) {
        best = std::move(step_best);
        best_v = step_v;
        improved = true;
      }
    }
  }
  return best;
}

}  // namespace

Eigen::MatrixXd posterior_similarity_matrix(const std::vector<Labels>& draws) {
  check_draws(draws);
  const auto n = static_cast<Eigen::Index>(draws.front().size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (const auto& d : draws)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (d[i] == d[j]) S(i, j) += 1.0;
  S /= static_cast<double>(draws.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    S(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) S(j, i) = S(i, j);
  }
  return S;
}

double binder_score(const Labels& p, const Eigen::MatrixXd& S, double a, double b) {
  check_costs(a, b);
  const auto n = static_cast<Eigen::Index>(p.size());
  if (S.rows() != n || S.cols() != n) throw InputError("dimension mismatch: similarity matrix vs partition");
  const double threshold = b / (a + b);
  double f = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (p[i] == p[j]) f += S(i, j) - threshold;
  return f;
}

double partition_entropy(const Labels& p) {
  if (p.empty()) return 0.0;
  return entropy_of_counts(counts_of(p), static_cast<double>(p.size()));
}

double joint_entropy(const Labels& p1, const Labels& p2) {
  if (p1.size() != p2.size()) throw InputError("partitions have different lengths");
  if (p1.empty()) return 0.0;
  const auto k2 = counts_of(p2).size();
  const auto k1 = counts_of(p1).size();
  std::vector<std::size_t> table(k1 * k2, 0);
  for (std::size_t i = 0; i < p1.size(); ++i) ++table[static_cast<std::size_t>(p1[i]) * k2 + p2[i]];
  return entropy_of_counts(table, static_cast<double>(p1.size()));
}

double gvi_loss(const Labels& truth, const Labels& estimate, double a, double b, GviJointScale scale) {
  check_costs(a, b);
  const double w = scale == GviJointScale::Sum ? a + b : 0.5 * (a + b);
  return -a * partition_entropy(truth) - b * partition_entropy(estimate) + w * joint_entropy(truth, estimate);
}

double expected_gvi_loss(const Labels& estimate, const std::vector<Labels>& draws, double a, double b,
                         GviJointScale scale) {
  check_draws(draws);
  double acc = 0.0;
  for (const auto& d : draws) acc += gvi_loss(d, estimate, a, b, scale);
  return acc / static_cast<double>(draws.size());
}

Labels minimize_binder(const Eigen::MatrixXd& S, const std::vector<Labels>& draws, double a, double b,
                       const PartitionSearch& opts) {
  check_draws(draws);
  check_costs(a, b);
  const auto n = draws.front().size();
  if (static_cast<std::size_t>(S.rows()) != n) throw InputError("dimension mismatch: similarity matrix vs draws");
  return search(n, draws, [&](const Labels& p) { return binder_score(p, S, a, b); }, opts);
}

Labels minimize_gvi(const std::vector<Labels>& draws, double a, double b, const PartitionSearch& opts) {
  check_draws(draws);
  check_costs(a, b);
  // Collapse repeated draws; the expected loss only needs their frequencies.
  std::map<Labels, std::size_t> freq;
  for (const auto& d : draws) ++freq[canonicalize(d)];
  std::vector<std::pair<Labels, double>> unique;
  for (auto& [p, c] : freq) unique.emplace_back(p, static_cast<double>(c) / static_cast<double>(draws.size()));
  const double w = opts.gvi_scale == GviJointScale::Sum ? a + b : 0.5 * (a + b);
  double truth_term = 0.0;
  for (const auto& [p, f] : unique) truth_term -= f * a * partition_entropy(p);
  auto objective = [&](const Labels& est) {
    double joint = 0.0;
    for (const auto& [p, f] : unique) joint += f * joint_entropy(p, est);
    return -(truth_term - b * partition_entropy(est) + w * joint);
  };
  return search(draws.front().size(), draws, objective, opts);
}

void for_each_partition(std::size_t n, const std::function<void(const Labels&)>& f) {
  if (n == 0) {
    f(Labels{});
    return;
  }
  // Restricted growth strings: p[0] = 0, p[i] <= 1 + max(p[0..i-1]).
  Labels p(n, 0);
  std::vector<int> prefix_max(n, 0);
  for (;;) {
    f(p);
    std::size_t i = n - 1;
    while (i > 0 && p[i] > prefix_max[i - 1]) --i;
    if (i == 0) return;
    ++p[i];
    prefix_max[i] = std::max(prefix_max[i - 1], p[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      p[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
}

double rand_index(const Labels& p1, const Labels& p2) {
  if (p1.size() != p2.size()) throw InputError("partitions have different lengths");
  const auto n = p1.size();
  if (n < 2) return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((p1[i] == p1[j]) == (p2[i] == p2[j])) ++agree;
  return static_cast<double>(agree) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

void write_partition_csv(const std::filesystem::path& path, std::span<const std::string> unit_ids, const Labels& p) {
  if (unit_ids.size() != p.size()) throw InputError("dimension mismatch: partition vs units");
  auto out = detail::open_output(path);
  out << "unit,cluster\n";
  for (std::size_t i = 0; i < p.size(); ++i) out << unit_ids[i] << ',' << p[i] + 1 << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

Labels read_partition_csv(const std::filesystem::path& path, std::span<const std::string> unit_ids) {
  const auto table = detail::read_csv(path);
  const auto cu = table.column("unit", path);
  const auto cc = table.column("cluster", path);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < unit_ids.size(); ++i) index.emplace(unit_ids[i], i);
  Labels raw(unit_ids.size(), -1);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const auto it = index.find(table.rows[r][cu]);
    if (it == index.end()) throw InputError(where + ": unknown unit '" + table.rows[r][cu] + "'");
    if (raw[it->second] >= 0) throw InputError(where + ": duplicate unit '" + table.rows[r][cu] + "'");
    const auto label = detail::parse_int(table.rows[r][cc]);
    if (!label || *label < 0 || *label > 1'000'000) throw InputError(where + ": invalid cluster label");
    raw[it->second] = static_cast<int>(*label);
  }
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (raw[i] < 0) throw InputError(path.string() + ": missing unit '" + unit_ids[i] + "'");
  return canonicalize(raw);
}

}  // namespace bstc
