#include "bwdep/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "bwdep/coefficients.hpp"
#include "bwdep/io.hpp"
#include "bwdep/parallel.hpp"

namespace bwdep {

namespace {

ScoresEstimate subset(const ScoresEstimate& est, const std::vector<int>& vars) {
  ScoresEstimate out;
  out.scores = est.scores(Eigen::all, vars);
  out.covariance = est.covariance(vars, vars);
  out.correlation = GroupedCorrelation(est.correlation.matrix()(vars, vars), Partition::singletons(vars.size()));
  return out;
}

std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

PenalizedEstimate penalized_correlation(const ScoresEstimate& est, const PenaltySpec& spec) {
  return tune(est, spec, est.correlation.partition());
}

double group_similarity(const MatrixXd& r, const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) throw InputError("group_similarity: empty group");
  const std::vector<int> vars = concat(a, b);
  return d1_of(r(vars, vars), Partition({static_cast<int>(a.size()), static_cast<int>(b.size())}));
}

Assignment normalize_assignment(const Assignment& labels) {
  std::map<int, int> relabel;
  Assignment out(labels.size());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    auto it = relabel.find(labels[v]);
    if (it == relabel.end()) it = relabel.emplace(labels[v], static_cast<int>(relabel.size())).first;
    out[v] = it->second;
  }
  return out;
}

double partition_redundancy(const MatrixXd& r, const Assignment& assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != r.rows()) {
    throw InputError("partition_redundancy: assignment length does not match the variable count");
  }
  const Assignment labels = normalize_assignment(assignment);
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) throw InputError("partition_redundancy: need at least two clusters");
  std::vector<int> vars;
  std::vector<int> dims(k, 0);
  for (int c = 0; c < k; ++c)
    for (std::size_t v = 0; v < labels.size(); ++v)
      if (labels[v] == c) {
        vars.push_back(static_cast<int>(v));
        ++dims[c];
      }
  return d1_of(r(vars, vars), Partition(dims));
}

double partition_redundancy(const DataMatrix& x, const Assignment& assignment, const PenaltySpec& spec) {
  const ScoresEstimate est = normal_scores_matrix(x, Partition::singletons(x.q()));
  return partition_redundancy(penalized_correlation(est, spec).correlation.matrix(), assignment);
}

Dendrogram cluster_variables(const DataMatrix& x, const ClusterOptions& options) {
  const int q = x.q();
  if (q < 2) throw InputError("cluster_variables: need at least two variables");
  if (x.n() < 3) throw InputError("cluster_variables: need at least three observations");
  if (options.retune_per_pair && options.spec.kind != PenaltyKind::ridge) {
    throw InputError("cluster_variables: per-pair retuning needs the ridge penalty");
  }
  const ScoresEstimate est = normal_scores_matrix(x, Partition::singletons(q));
  const PenalizedEstimate fit = penalized_correlation(est, options.spec);

  Dendrogram d;
  d.variables = x.column_names;
  if (static_cast<int>(d.variables.size()) != q) {
    d.variables.clear();
    for (int j = 0; j < q; ++j) d.variables.push_back("V" + std::to_string(j + 1));
  }
  d.correlation = fit.correlation.matrix();
  d.omega = fit.omega_selected;

  auto similarity = [&](const std::vector<int>& a, const std::vector<int>& b) {
    if (!options.retune_per_pair) return group_similarity(d.correlation, a, b);
    const std::vector<int> vars = concat(a, b);
    const ScoresEstimate sub = subset(est, vars);
    const MatrixXd r = ridge(sub.correlation, ridge_cv(sub, options.spec)).matrix();
    return d1_of(r, Partition({static_cast<int>(a.size()), static_cast<int>(b.size())}));
  };

  std::map<int, std::vector<int>> active;  // id -> members, ascending ids
  for (int v = 0; v < q; ++v) active[v] = {v};
  std::map<std::pair<int, int>, double> cache;

  auto record_level = [&](int k) {
    Assignment labels(q);
    for (const auto& [id, members] : active)
      for (int v : members) labels[v] = id;
    d.partitions[k] = normalize_assignment(labels);
    d.redundancy[k] = k >= 2 ? partition_redundancy(d.correlation, d.partitions[k])
                             : std::numeric_limits<double>::quiet_NaN();
  };

  d.partitions.assign(q + 1, {});
  d.redundancy.assign(q + 1, std::numeric_limits<double>::quiet_NaN());
  record_level(q);
  for (int step = 0; step < q - 1; ++step) {
    std::vector<std::pair<int, int>> missing;
    for (auto i = active.begin(); i != active.end(); ++i)
      for (auto j = std::next(i); j != active.end(); ++j)
        if (!cache.count({i->first, j->first})) missing.emplace_back(i->first, j->first);
    std::vector<double> values(missing.size());
    parallel_for(static_cast<int>(missing.size()), [&](int t) {
      values[t] = similarity(active.at(missing[t].first), active.at(missing[t].second));
    });
    for (std::size_t t = 0; t < missing.size(); ++t) cache[missing[t]] = values[t];

    std::pair<int, int> best{-1, -1};
    double best_value = -std::numeric_limits<double>::infinity();
    for (const auto& [key, value] : cache) {  // lexicographic order, so ties keep the lowest pair
      if (value > best_value) {
        best_value = value;
        best = key;
      }
    }
    const int id = q + step;
    std::vector<int> members = concat(active.at(best.first), active.at(best.second));
    std::sort(members.begin(), members.end());
    for (auto it = cache.begin(); it != cache.end();) {
      const int a = it->first.first, b = it->first.second;
      if (a == best.first || a == best.second || b == best.first || b == best.second) {
        it = cache.erase(it);
      } else {
        ++it;
      }
    }
    active.erase(best.first);
    active.erase(best.second);
    active[id] = std::move(members);
    d.merges.push_back({best.first, best.second, id, best_value, 1.0 - best_value});
    record_level(q - 1 - step);
  }
  return d;
}

Assignment cut_dendrogram(const Dendrogram& d, int k) {
  if (k < 1 || k > d.q()) throw InputError("cut_dendrogram: k must lie in [1, " + std::to_string(d.q()) + "]");
  return d.partitions[k];
}

int min_redundancy_level(const Dendrogram& d) {
  int best = -1;
  for (int k = 2; k <= std::max(2, d.q() - 1); ++k) {
    if (k > d.q()) break;
    if (best < 0 || d.redundancy[k] < d.redundancy[best]) best = k;
  }
  if (best < 0) throw InputError("min_redundancy_level: need at least two variables");
  return best;
}

std::string to_newick(const Dendrogram& d) {
  const int q = d.q();
  std::vector<std::string> node(q + d.merges.size());
  std::vector<double> height(node.size(), 0.0);
  auto label = [](const std::string& s) {
    std::string out;
    for (char c : s) out += (c == ' ' || c == '(' || c == ')' || c == ',' || c == ':' || c == ';') ? '_' : c;
    return out;
  };
  for (int v = 0; v < q; ++v) node[v] = label(d.variables[v]);
  for (const Merge& m : d.merges) {
    height[m.id] = m.height;
    node[m.id] = "(" + node[m.a] + ":" + format_double(m.height - height[m.a]) + "," + node[m.b] + ":" +
                 format_double(m.height - height[m.b]) + ")";
  }
  return (d.merges.empty() ? node[0] : node[d.merges.back().id]) + ";";
}

nlohmann::json to_json(const Dendrogram& d) {
  nlohmann::json j;
  j["variables"] = d.variables;
  j["omega"] = d.omega;
  j["merges"] = nlohmann::json::array();
  for (const Merge& m : d.merges) {
    j["merges"].push_back({{"a", m.a}, {"b", m.b}, {"id", m.id}, {"similarity", m.similarity}, {"height", m.height}});
  }
  j["redundancy"] = nlohmann::json::array();
  for (int k = 2; k <= d.q(); ++k) j["redundancy"].push_back({{"k", k}, {"value", d.redundancy[k]}});
  return j;
}

std::vector<int> prune_by_abs_corr(const MatrixXd& r, double threshold) {
  if (r.rows() != r.cols()) throw InputError("prune_by_abs_corr: square matrix expected");
  std::vector<int> kept;
  for (Eigen::Index j = 0; j < r.rows(); ++j) {
    bool drop = false;
    for (int i : kept) drop = drop || std::abs(r(i, j)) > threshold;
    if (!drop) kept.push_back(static_cast<int>(j));
  }
  return kept;
}

}  // namespace bwdep
