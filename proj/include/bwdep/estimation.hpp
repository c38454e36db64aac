#pragma once

#include <string>
#include <vector>

#include "bwdep/structure.hpp"

namespace bwdep {

struct DataMatrix {
  MatrixXd values;  // n x q
  std::vector<std::string> column_names;
  int n() const { return static_cast<int>(values.rows()); }
  int q() const { return static_cast<int>(values.cols()); }
};

struct ScoresEstimate {
  GroupedCorrelation correlation;  // R_hat_n
  MatrixXd covariance;             // Sigma_hat_n = scores^T scores / n
  MatrixXd scores;                 // n x q normal scores
  std::vector<int> tied_columns;   // columns that needed midranks
};

// Inverse standard normal CDF; error <= 1e-13 absolute on [1e-300, 1 - 1e-16].
// For p > 0.5 the value is -normal_quantile(1 - p) by construction.
double normal_quantile(double p);
double normal_cdf(double x);

// Midranks (1-based) of a column; stable ordering.
VectorXd midranks(const VectorXd& column, bool* had_ties = nullptr);

// Normal scores Phi^{-1}(rank / (n + 1)) with exact antisymmetry around the middle rank.
VectorXd normal_scores(const VectorXd& column, bool* had_ties = nullptr);

ScoresEstimate normal_scores_matrix(const DataMatrix& x, const Partition& partition);

// phi(Sigma) = D^{-1/2} Sigma D^{-1/2}
MatrixXd cov_to_corr(const MatrixXd& sigma);

}  // namespace bwdep
