#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "bwdep/types.hpp"

namespace bwdep {

template <typename Scalar>
struct Spectrum {
  Vec<Scalar> values;   // descending
  Mat<Scalar> vectors;  // columns aligned with values
};

template <typename Scalar>
Mat<Scalar> symmetrize(const Mat<Scalar>& a) {
  return (a + a.transpose()) / Scalar(2);
}

template <typename Scalar>
void require_symmetric(const Mat<Scalar>& s, const char* what) {
  if (s.rows() != s.cols() || s.rows() < 1) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << s.rows() << "x" << s.cols();
    throw InputError(os.str());
  }
  if (!s.allFinite()) throw InputError(std::string(what) + ": non-finite entries");
  const Scalar scale = Scalar(1) + s.cwiseAbs().maxCoeff();
  const Scalar asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-10) * scale) {
    std::ostringstream os;
    os << what << ": matrix is not symmetric (max |S - S^T| = " << asym << ")";
    throw InputError(os.str());
  }
}

template <typename Scalar>
Spectrum<Scalar> sym_eigen(const Mat<Scalar>& s) {
  require_symmetric(s, "sym_eigen");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "sym_eigen: eigensolver did not converge (order " << s.rows()
       << ", max |entry| " << s.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  Spectrum<Scalar> out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    Eigen::Index imax = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, j) < Scalar(0)) out.vectors.col(j) *= Scalar(-1);
  }
  return out;
}

template <typename Scalar>
Vec<Scalar> sym_eigenvalues(const Mat<Scalar>& s) {
  require_symmetric(s, "sym_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eigenvalues: eigensolver did not converge");
  return es.eigenvalues().reverse();
}

// Clamp a PSD spectrum: small negatives become 0, larger ones are an error.
// Values below a roundoff-rank threshold are also treated as exact zeros so that
// fractional powers of rank-deficient matrices do not amplify noise.
template <typename Scalar>
Vec<Scalar> clamp_spectrum(const Vec<Scalar>& values) {
  const Scalar top = values.size() ? values.maxCoeff() : Scalar(0);
  const Scalar neg_tol = Scalar(1e-10) * std::max(Scalar(1), top);
  const Scalar rank_tol =
      Scalar(16) * Scalar(values.size()) * std::numeric_limits<Scalar>::epsilon() * std::max(top, Scalar(0));
  Vec<Scalar> out = values;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (out(j) < -neg_tol) {
      std::ostringstream os;
      os << "matrix is not positive semi-definite (eigenvalue " << out(j) << ")";
      throw NumericalError(os.str());
    }
    if (out(j) <= rank_tol) out(j) = Scalar(0);
  }
  return out;
}

template <typename Scalar>
Scalar power_of(Scalar lambda, Scalar alpha) {
  if (alpha == Scalar(0.5)) return std::sqrt(lambda);
  if (alpha == Scalar(-0.5)) return Scalar(1) / std::sqrt(lambda);
  if (alpha == Scalar(1)) return lambda;
  if (alpha == Scalar(-1)) return Scalar(1) / lambda;
  return std::pow(lambda, alpha);
}

template <typename Scalar>
Mat<Scalar> spectral_function(const Spectrum<Scalar>& sp, const std::function<Scalar(Scalar)>& f) {
  Vec<Scalar> fv = sp.values.unaryExpr(f);
  return symmetrize<Scalar>(sp.vectors * fv.asDiagonal() * sp.vectors.transpose());
}

template <typename Scalar>
Mat<Scalar> spd_power(const Spectrum<Scalar>& sp, Scalar alpha) {
  if (alpha < Scalar(0) && sp.values.minCoeff() <= Scalar(1e-12)) {
    std::ostringstream os;
    os << "spd_power: negative power of a singular matrix (smallest eigenvalue " << sp.values.minCoeff() << ")";
    throw SingularityError(os.str());
  }
  Vec<Scalar> lam = clamp_spectrum(sp.values);
  Vec<Scalar> p(lam.size());
  for (Eigen::Index j = 0; j < lam.size(); ++j) {
    p(j) = (lam(j) == Scalar(0) && alpha > Scalar(0)) ? Scalar(0) : power_of(lam(j), alpha);
  }
  return symmetrize<Scalar>(sp.vectors * p.asDiagonal() * sp.vectors.transpose());
}

template <typename Scalar>
Mat<Scalar> spd_power(const Mat<Scalar>& s, Scalar alpha) {
  return spd_power(sym_eigen(s), alpha);
}

// tr(S^alpha) from the eigenvalues alone.
template <typename Scalar>
Scalar trace_power(const Mat<Scalar>& s, Scalar alpha) {
  Vec<Scalar> lam = sym_eigenvalues(s);
  if (alpha < Scalar(0) && lam.minCoeff() <= Scalar(1e-12)) throw SingularityError("trace_power: singular matrix");
  lam = clamp_spectrum(lam);
  Scalar acc(0);
  for (Eigen::Index j = 0; j < lam.size(); ++j) {
    if (lam(j) > Scalar(0) || alpha < Scalar(0)) acc += power_of(lam(j), alpha);
  }
  return acc;
}

template <typename Scalar>
Scalar trace_sqrt(const Mat<Scalar>& s) {
  return trace_power(s, Scalar(0.5));
}

template <typename Scalar>
Scalar bures_sq(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "bures_sq: dimension mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw InputError(os.str());
  }
  const Mat<Scalar> ah = spd_power(a, Scalar(0.5));
  const Mat<Scalar> inner = symmetrize<Scalar>(ah * b * ah);
  const Scalar v = a.trace() + b.trace() - Scalar(2) * trace_sqrt(inner);
  return std::max(v, Scalar(0));
}

template <typename Scalar>
bool majorizes(const Vec<Scalar>& x, const Vec<Scalar>& y, Scalar rel_tol = Scalar(1e-9)) {
  if (x.size() != y.size()) throw InputError("majorizes: length mismatch");
  std::vector<Scalar> xs(x.data(), x.data() + x.size());
  std::vector<Scalar> ys(y.data(), y.data() + y.size());
  std::sort(xs.begin(), xs.end(), std::greater<Scalar>());
  std::sort(ys.begin(), ys.end(), std::greater<Scalar>());
  Scalar scale(1);
  for (std::size_t i = 0; i < xs.size(); ++i) scale = std::max({scale, std::abs(xs[i]), std::abs(ys[i])});
  const Scalar tol = rel_tol * scale * Scalar(std::max<std::size_t>(1, xs.size()));
  Scalar px(0), py(0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    px += xs[i];
    py += ys[i];
    if (py < px - tol) return false;
  }
  return std::abs(px - py) <= tol;
}

template <typename Scalar>
Scalar spd_logdet(const Mat<Scalar>& s) {
  Eigen::LLT<Mat<Scalar>> llt(s);
  if (llt.info() != Eigen::Success) throw SingularityError("logdet: matrix is not positive definite");
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Scalar>
Mat<Scalar> spd_inverse(const Mat<Scalar>& s) {
  Eigen::LLT<Mat<Scalar>> llt(s);
  if (llt.info() != Eigen::Success) throw SingularityError("inverse: matrix is not positive definite");
  return symmetrize<Scalar>(llt.solve(Mat<Scalar>::Identity(s.rows(), s.cols())));
}

template <typename Scalar>
bool is_positive_definite(const Mat<Scalar>& s) {
  Eigen::LLT<Mat<Scalar>> llt(s);
  return llt.info() == Eigen::Success;
}

}  // namespace bwdep
