#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bwdep/penalties.hpp"

namespace bwdep {

// Cluster ids: 0..q-1 are the variables, merge t creates cluster q + t.
struct Merge {
  int a = 0;
  int b = 0;
  int id = 0;
  double similarity = 0.0;
  double height = 0.0;  // 1 - similarity
};

// Variable-to-cluster labels, numbered 0..k-1 by smallest member.
using Assignment = std::vector<int>;

struct Dendrogram {
  std::vector<std::string> variables;
  std::vector<Merge> merges;
  std::vector<Assignment> partitions;  // partitions[k] for k = 1..q; index 0 unused
  std::vector<double> redundancy;      // redundancy[k]; NaN for k = 1
  MatrixXd correlation;                // penalized correlation all similarities use
  double omega = 0.0;                  // ridge weight when the spec is ridge
  int q() const { return static_cast<int>(variables.size()); }
};

struct ClusterOptions {
  PenaltySpec spec = default_spec(PenaltyKind::ridge);
  bool retune_per_pair = false;  // ridge only: CV on each merged group
};

// Penalized correlation of the whole data set per the spec (ridge via CV).
PenalizedEstimate penalized_correlation(const ScoresEstimate& est, const PenaltySpec& spec);

// D1 between two disjoint variable groups of a correlation matrix.
double group_similarity(const MatrixXd& r, const std::vector<int>& a, const std::vector<int>& b);

Dendrogram cluster_variables(const DataMatrix& x, const ClusterOptions& options = {});

Assignment normalize_assignment(const Assignment& labels);
double partition_redundancy(const MatrixXd& r, const Assignment& assignment);
double partition_redundancy(const DataMatrix& x, const Assignment& assignment, const PenaltySpec& spec);

Assignment cut_dendrogram(const Dendrogram& d, int k);
// Smallest-redundancy level over k in [2, q - 1]; ties go to the smaller k.
int min_redundancy_level(const Dendrogram& d);

std::string to_newick(const Dendrogram& d);
nlohmann::json to_json(const Dendrogram& d);

// Greedy pruning: drops each variable whose |r| with an earlier kept one exceeds the threshold.
std::vector<int> prune_by_abs_corr(const MatrixXd& r, double threshold);

}  // namespace bwdep
