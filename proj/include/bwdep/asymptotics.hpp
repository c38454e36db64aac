#pragma once

#include <vector>

#include "bwdep/structure.hpp"

namespace bwdep {

struct SpectralPartition {
  std::vector<Spectrum<double>> spectra;
  // lambda_blocks[i][j] holds the eigenvalues of block i in segment j
  // (indices d_{j-1}..d_j-1), j = 0..i.
  std::vector<std::vector<VectorXd>> lambda_blocks;
  std::vector<VectorXd> delta;        // diagonal of Delta_i
  std::vector<VectorXd> delta_tilde;  // diagonal of tilde Delta_i
  std::vector<VectorXd> d_ratio;      // diagonal of D_i (empty for i = 0)
  std::vector<std::pair<int, int>> projections;  // (offset, size) of P_i
};

struct DerivativePair {
  MatrixXd j_matrix;
  MatrixXd j0_matrix;
  MatrixXd m1;
  MatrixXd m2;
  double c1 = 0.0;
  double c2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  const MatrixXd& m(int r) const { return r == 1 ? m1 : m2; }
};

// Requires canonical order. Ties inside a block are refused unless the
// affected Delta and tilde Delta entries coincide, in which case U Delta U^T
// does not depend on the eigenbasis chosen for the tied eigenspace.
SpectralPartition spectral_partition(const GroupedCorrelation& r);

// Both M_1 and M_2 are assembled; r selects which one callers intend to use
// and is validated. Results are in the original variable order.
DerivativePair m_matrix(const GroupedCorrelation& r, int which);

// zeta_r^2 = 2 tr[{R (M_r - D_{M_r R})}^2]
double asymptotic_variance(const GroupedCorrelation& r, int which);
double asymptotic_variance(const GroupedCorrelation& r, const DerivativePair& dp, int which);

}  // namespace bwdep
