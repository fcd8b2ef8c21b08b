#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bstc/model.hpp"

namespace bstc {

/// S_ij = fraction of draws with s_i = s_j. Throws InputError on an empty or
/// ragged draw list.
Eigen::MatrixXd posterior_similarity_matrix(const std::vector<Labels>& draws);

/// sum_{i<j} 1{p_i = p_j} (S_ij - b / (a + b)); larger is better.
double binder_score(const Labels& p, const Eigen::MatrixXd& S, double a, double b);

/// Weight of the joint-entropy term of the generalized variation of
/// information. Sum (a + b) reduces to the plain VI at a = b = 1; Mean uses
/// (a + b) / 2.
enum class GviJointScale { Sum, Mean };

/// -a H(c) - b H(p) + w H(c, p), entropies in bits.
double gvi_loss(const Labels& truth, const Labels& estimate, double a, double b,
                GviJointScale scale = GviJointScale::Sum);
/// Monte Carlo posterior expectation of gvi_loss over draws (as truth).
double expected_gvi_loss(const Labels& estimate, const std::vector<Labels>& draws, double a, double b,
                         GviJointScale scale = GviJointScale::Sum);

struct PartitionSearch {
  /// Search every set partition when n is at most this.
  std::size_t exhaustive_limit = 10;
  GviJointScale gvi_scale = GviJointScale::Sum;
};

/// Maximizes binder_score over the sampled partitions and single-unit
/// reassignment refinements of the best one (or over all partitions for
/// small n). Ties go to fewer clusters, then the lexicographically smaller
/// canonical labelling.
Labels minimize_binder(const Eigen::MatrixXd& S, const std::vector<Labels>& draws, double a, double b,
                       const PartitionSearch& search = {});

/// Same candidate set, minimizing expected_gvi_loss.
Labels minimize_gvi(const std::vector<Labels>& draws, double a, double b, const PartitionSearch& search = {});

/// Calls f on every canonical partition of n items (restricted growth order).
void for_each_partition(std::size_t n, const std::function<void(const Labels&)>& f);

double rand_index(const Labels& p1, const Labels& p2);
/// -sum (|C|/n) log2(|C|/n).
double partition_entropy(const Labels& p);
/// Entropy in bits of the intersection table of p1 and p2.
double joint_entropy(const Labels& p1, const Labels& p2);

/// Two columns `unit,cluster`, 1-based labels.
void write_partition_csv(const std::filesystem::path& path, std::span<const std::string> unit_ids, const Labels& p);
/// Reads `unit,cluster` for exactly the given units (any integer labels) and
/// returns canonical labels in unit_ids order.
Labels read_partition_csv(const std::filesystem::path& path, std::span<const std::string> unit_ids);

}  // namespace bstc
