#include "bwdep/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace bwdep {

namespace {

// Lower half only, so that the reflection below is exactly antisymmetric.
double quantile_lower(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0, 1)");
  if (p > 0.5) return -quantile_lower(1.0 - p);
  return quantile_lower(p);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

VectorXd midranks(const VectorXd& column, bool* had_ties) {
  const Eigen::Index n = column.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return column(a) < column(b); });
  VectorXd ranks(n);
  bool ties = false;
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i + 1;
    while (j < n && column(order[j]) == column(order[i])) ++j;
    if (j - i > 1) ties = true;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (Eigen::Index t = i; t < j; ++t) ranks(order[t]) = r;
    i = j;
  }
  if (had_ties) *had_ties = ties;
  return ranks;
}

VectorXd normal_scores(const VectorXd& column, bool* had_ties) {
  const VectorXd ranks = midranks(column, had_ties);
  const double n1 = static_cast<double>(column.size() + 1);
  VectorXd z(ranks.size());
  for (Eigen::Index i = 0; i < ranks.size(); ++i) {
    const double r = ranks(i);
    const double mirror = n1 - r;
    if (r == mirror) {
      z(i) = 0.0;
    } else if (r < mirror) {
      z(i) = normal_quantile(r / n1);
    } else {
      z(i) = -normal_quantile(mirror / n1);
    }
  }
  return z;
}

MatrixXd cov_to_corr(const MatrixXd& sigma) {
  const VectorXd d = sigma.diagonal();
  if ((d.array() <= 0.0).any()) throw InputError("cov_to_corr: non-positive variance");
  const VectorXd s = d.cwiseSqrt().cwiseInverse();
  MatrixXd r = s.asDiagonal() * sigma * s.asDiagonal();
  r = symmetrize<double>(r);
  r.diagonal().setOnes();
  return r;
}

ScoresEstimate normal_scores_matrix(const DataMatrix& x, const Partition& partition) {
  const int n = x.n(), q = x.q();
  if (n < 3) throw InputError("normal_scores_matrix: need at least 3 observations");
  if (partition.total() != q) {
    throw InputError("normal_scores_matrix: dims sum to " + std::to_string(partition.total()) + " but data has " +
                     std::to_string(q) + " columns");
  }
  if (!x.values.allFinite()) throw InputError("normal_scores_matrix: non-finite data values");
  ScoresEstimate out;
  out.scores.resize(n, q);
  for (int j = 0; j < q; ++j) {
    const VectorXd col = x.values.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      throw InputError("normal_scores_matrix: column " + std::to_string(j) + " is constant (rank-degenerate)");
    }
    bool ties = false;
    out.scores.col(j) = normal_scores(col, &ties);
    if (ties) out.tied_columns.push_back(j);
  }
  double denom = 0.0;
  for (int l = 1; l <= n; ++l) {
    const double z = normal_quantile(static_cast<double>(l) / (n + 1.0));
    denom += z * z;
  }
  denom /= n;
  out.covariance = symmetrize<double>(out.scores.transpose() * out.scores / static_cast<double>(n));
  MatrixXd r = out.covariance / denom;
  r.diagonal().setOnes();
  out.correlation = GroupedCorrelation(std::move(r), partition);
  return out;
}

}  // namespace bwdep
