#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "bwdep/linalg.hpp"

namespace bwdep {

class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> dims);

  static Partition parse(const std::string& text);  // "2,2" or "3,3,3,3,3,3,2"
  static Partition singletons(int q);

  int k() const { return static_cast<int>(dims_.size()); }
  int total() const { return total_; }
  int size(int i) const { return dims_[i]; }
  int offset(int i) const { return offsets_[i]; }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<int>& offsets() const { return offsets_; }
  int max_dim() const;
  int group_of(int variable) const;
  bool is_canonical() const;
  std::string to_string() const;

  bool operator==(const Partition& other) const { return dims_ == other.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int total_ = 0;
};

template <typename Scalar>
class GroupedCorrelationT {
 public:
  GroupedCorrelationT() = default;
  // Validates unit diagonal, symmetry, entry range and positive semi-definiteness.
  GroupedCorrelationT(Mat<Scalar> matrix, Partition partition);

  const Mat<Scalar>& matrix() const { return matrix_; }
  const Partition& partition() const { return partition_; }
  int order() const { return static_cast<int>(matrix_.rows()); }
  Mat<Scalar> block(int i, int j) const {
    return matrix_.block(partition_.offset(i), partition_.offset(j), partition_.size(i), partition_.size(j));
  }

 private:
  Mat<Scalar> matrix_;
  Partition partition_;
};

using GroupedCorrelation = GroupedCorrelationT<double>;

template <typename Scalar>
struct CanonicalFormT {
  GroupedCorrelationT<Scalar> grouped;
  std::vector<int> group_permutation;     // position -> original group (0-based)
  std::vector<int> variable_permutation;  // position -> original variable (0-based)
};

using CanonicalForm = CanonicalFormT<double>;

// Per-block spectra and the zero-padded eigenvalue table (k rows, max_dim columns).
template <typename Scalar>
struct BlockSpectraT {
  std::vector<Spectrum<Scalar>> spectra;
  Mat<Scalar> padded;
};

using BlockSpectra = BlockSpectraT<double>;

template <typename Scalar>
Mat<Scalar> block_diag_of(const Mat<Scalar>& r, const Partition& p) {
  Mat<Scalar> out = Mat<Scalar>::Zero(r.rows(), r.cols());
  for (int i = 0; i < p.k(); ++i) {
    out.block(p.offset(i), p.offset(i), p.size(i), p.size(i)) =
        r.block(p.offset(i), p.offset(i), p.size(i), p.size(i));
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> block_diag_of(const GroupedCorrelationT<Scalar>& r) {
  return block_diag_of(r.matrix(), r.partition());
}

// Applies f to every diagonal block and returns the block-diagonal result.
template <typename Scalar, typename F>
Mat<Scalar> blockwise(const Mat<Scalar>& r, const Partition& p, F&& f) {
  Mat<Scalar> out = Mat<Scalar>::Zero(r.rows(), r.cols());
  for (int i = 0; i < p.k(); ++i) {
    const Mat<Scalar> blk = r.block(p.offset(i), p.offset(i), p.size(i), p.size(i));
    out.block(p.offset(i), p.offset(i), p.size(i), p.size(i)) = f(blk);
  }
  return out;
}

template <typename Scalar>
BlockSpectraT<Scalar> block_spectra(const Mat<Scalar>& r, const Partition& p) {
  BlockSpectraT<Scalar> out;
  out.padded = Mat<Scalar>::Zero(p.k(), p.max_dim());
  for (int i = 0; i < p.k(); ++i) {
    const Mat<Scalar> blk = r.block(p.offset(i), p.offset(i), p.size(i), p.size(i));
    Spectrum<Scalar> sp = sym_eigen(blk);
    const Vec<Scalar> lam = clamp_spectrum(sp.values);
    out.padded.row(i).head(p.size(i)) = lam.transpose();
    out.spectra.push_back(std::move(sp));
  }
  return out;
}

// Eigenvalues of R_m: column sums of the padded table, then zeros up to q.
template <typename Scalar>
Vec<Scalar> rm_eigenvalues(const BlockSpectraT<Scalar>& bs, int q) {
  Vec<Scalar> out = Vec<Scalar>::Zero(q);
  out.head(bs.padded.cols()) = bs.padded.colwise().sum().transpose();
  return out;
}

template <typename Scalar>
CanonicalFormT<Scalar> canonical_sort(const GroupedCorrelationT<Scalar>& r) {
  const Partition& p = r.partition();
  std::vector<int> order(p.k());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p.size(a) < p.size(b); });
  std::vector<int> vars;
  std::vector<int> dims;
  for (int g : order) {
    dims.push_back(p.size(g));
    for (int t = 0; t < p.size(g); ++t) vars.push_back(p.offset(g) + t);
  }
  Mat<Scalar> m = r.matrix()(vars, vars);
  CanonicalFormT<Scalar> out;
  out.grouped = GroupedCorrelationT<Scalar>(std::move(m), Partition(dims));
  out.group_permutation = std::move(order);
  out.variable_permutation = std::move(vars);
  return out;
}

// Maximal-dependence member of the coupling set; requires d_1 <= ... <= d_k.
template <typename Scalar>
Mat<Scalar> build_rm(const Mat<Scalar>& r, const Partition& p) {
  if (!p.is_canonical()) throw InputError("build_rm: group dimensions must be non-decreasing (use canonical_sort)");
  const BlockSpectraT<Scalar> bs = block_spectra(r, p);
  std::vector<Mat<Scalar>> factor;
  for (int i = 0; i < p.k(); ++i) {
    const Vec<Scalar> root = bs.padded.row(i).head(p.size(i)).transpose().cwiseSqrt();
    factor.push_back(bs.spectra[i].vectors * root.asDiagonal());
  }
  Mat<Scalar> out = block_diag_of(r, p);
  for (int i = 0; i < p.k(); ++i) {
    for (int j = i + 1; j < p.k(); ++j) {
      const Mat<Scalar> psi = factor[i] * factor[j].leftCols(p.size(i)).transpose();
      out.block(p.offset(i), p.offset(j), p.size(i), p.size(j)) = psi;
      out.block(p.offset(j), p.offset(i), p.size(j), p.size(i)) = psi.transpose();
    }
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> build_rm(const GroupedCorrelationT<Scalar>& r) {
  return build_rm(r.matrix(), r.partition());
}

// ---- implementation of the templated class ----

template <typename Scalar>
GroupedCorrelationT<Scalar>::GroupedCorrelationT(Mat<Scalar> matrix, Partition partition)
    : matrix_(std::move(matrix)), partition_(std::move(partition)) {
  require_symmetric(matrix_, "GroupedCorrelation");
  if (matrix_.rows() != partition_.total()) {
    throw InputError("GroupedCorrelation: partition total " + std::to_string(partition_.total()) +
                     " does not match matrix order " + std::to_string(matrix_.rows()));
  }
  matrix_ = symmetrize<Scalar>(matrix_);
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    if (std::abs(matrix_(i, i) - Scalar(1)) > Scalar(1e-12)) {
      throw InputError("GroupedCorrelation: diagonal entry " + std::to_string(i) + " is not 1");
    }
    matrix_(i, i) = Scalar(1);
  }
  if (matrix_.cwiseAbs().maxCoeff() > Scalar(1) + Scalar(1e-12)) {
    throw InputError("GroupedCorrelation: entries outside [-1, 1]");
  }
  const Vec<Scalar> lam = sym_eigenvalues(matrix_);
  if (lam.minCoeff() < -Scalar(1e-10) * std::max(Scalar(1), lam.maxCoeff())) {
    throw InputError("GroupedCorrelation: matrix is not positive semi-definite (min eigenvalue " +
                     std::to_string(static_cast<double>(lam.minCoeff())) + ")");
  }
}

}  // namespace bwdep
