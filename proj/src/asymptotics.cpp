#include "bwdep/asymptotics.hpp"

#include <cmath>
#include <sstream>

#include "bwdep/coefficients.hpp"

namespace bwdep {

namespace {

constexpr double kGap = 1e-10;

void check_ties(const SpectralPartition& sp, int i) {
  const VectorXd& lam = sp.spectra[i].values;
  const double scale = std::max(1.0, lam(0));
  for (Eigen::Index t = 0; t + 1 < lam.size(); ++t) {
    if (lam(t) - lam(t + 1) > kGap * scale) continue;
    const VectorXd& dl = sp.delta[i];
    const VectorXd& dt = sp.delta_tilde[i];
    const bool harmless = std::abs(dl(t) - dl(t + 1)) <= kGap * std::max(1.0, std::abs(dl(t))) &&
                          std::abs(dt(t) - dt(t + 1)) <= kGap * std::max(1.0, std::abs(dt(t)));
    if (!harmless) {
      std::ostringstream os;
      os << "block " << i << " has tied eigenvalues (" << lam(t) << ", " << lam(t + 1)
         << "); the derivative of D_r is not defined there";
      throw TiedSpectrumError(os.str());
    }
  }
}

MatrixXd unpermute(const MatrixXd& m, const std::vector<int>& perm) {
  MatrixXd out(m.rows(), m.cols());
  out(perm, perm) = m;
  return out;
}

}  // namespace

SpectralPartition spectral_partition(const GroupedCorrelation& r) {
  const Partition& p = r.partition();
  if (!p.is_canonical()) throw InputError("spectral_partition: group dimensions must be non-decreasing");
  SpectralPartition sp;
  const int k = p.k();
  for (int i = 0; i < k; ++i) {
    sp.spectra.push_back(sym_eigen<double>(r.block(i, i)));
    if (sp.spectra.back().values.minCoeff() <= 1e-12) {
      throw SingularityError("spectral_partition: diagonal block " + std::to_string(i) + " is singular");
    }
    sp.projections.emplace_back(p.offset(i), p.size(i));
  }
  auto seg_start = [&](int j) { return j == 0 ? 0 : p.size(j - 1); };
  auto seg_len = [&](int j) { return p.size(j) - seg_start(j); };

  sp.lambda_blocks.resize(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= i; ++j) sp.lambda_blocks[i].push_back(sp.spectra[i].values.segment(seg_start(j), seg_len(j)));

  // Segment j sums run over the blocks i >= j that own it.
  auto seg_sum = [&](int j, bool squared) {
    VectorXd acc = VectorXd::Zero(seg_len(j));
    for (int i = j; i < k; ++i) acc += squared ? VectorXd(sp.lambda_blocks[i][j].cwiseAbs2()) : sp.lambda_blocks[i][j];
    return acc;
  };

  for (int i = 0; i < k; ++i) {
    VectorXd delta(p.size(i));
    VectorXd delta_tilde(p.size(i));
    VectorXd ratio;
    if (i > 0) {
      const int prev = p.size(i - 1);
      delta.head(prev) = sp.delta[i - 1];
      ratio = sp.spectra[i].values.head(prev).cwiseQuotient(sp.spectra[i - 1].values);
      delta_tilde.head(prev) = sp.delta_tilde[i - 1].cwiseProduct(ratio);
    }
    if (seg_len(i) > 0) {
      delta.tail(seg_len(i)) = seg_sum(i, false).cwiseSqrt().cwiseInverse();
      delta_tilde.tail(seg_len(i)) = sp.lambda_blocks[i][i].cwiseQuotient(seg_sum(i, true).cwiseSqrt());
    }
    sp.delta.push_back(std::move(delta));
    sp.delta_tilde.push_back(std::move(delta_tilde));
    sp.d_ratio.push_back(std::move(ratio));
  }
  for (int i = 0; i < k; ++i) check_ties(sp, i);
  return sp;
}

DerivativePair m_matrix(const GroupedCorrelation& r, int which) {
  if (which != 1 && which != 2) throw InputError("m_matrix: r must be 1 or 2");
  const Partition& p0 = r.partition();
  bool independent = true;
  for (int i = 0; i < p0.k() && independent; ++i)
    for (int j = i + 1; j < p0.k(); ++j)
      if (r.block(i, j).cwiseAbs().maxCoeff() > 1e-12) {
        independent = false;
        break;
      }
  if (independent) {
    throw DegenerateError(
        "m_matrix: R equals R_0; the first-order expansion degenerates at independence (zeta_r = 0)");
  }

  const CanonicalForm c = canonical_sort(r);
  const MatrixXd& rc = c.grouped.matrix();
  const Partition& p = c.grouped.partition();
  const int q = static_cast<int>(rc.rows());
  const SpectralPartition sp = spectral_partition(c.grouped);
  const TraceTerms tt = trace_terms(rc, p);

  DerivativePair dp;
  dp.c1 = tt.c1();
  dp.c2 = tt.c2();
  if (dp.c1 <= 1e-12 || dp.c2 <= 1e-12) throw DegenerateError("m_matrix: normalizing constant C_r vanishes");
  dp.d1 = clamp_unit((tt.sum_tr_sqrt_blocks - tt.tr_sqrt_r) / dp.c1, "d1");
  dp.d2 = clamp_unit((2.0 * tt.tr_r - 2.0 * tt.tr_cross) / (2.0 * dp.c2), "d2");

  const MatrixXd r_mh = spd_power<double>(rc, -0.5);
  MatrixXd r0h = MatrixXd::Zero(q, q), r0mh = MatrixXd::Zero(q, q);
  MatrixXd ups1 = MatrixXd::Zero(q, q), ups2 = MatrixXd::Zero(q, q);
  for (int i = 0; i < p.k(); ++i) {
    const MatrixXd& u = sp.spectra[i].vectors;
    const int o = p.offset(i), d = p.size(i);
    r0h.block(o, o, d, d) = spd_power(sp.spectra[i], 0.5);
    r0mh.block(o, o, d, d) = spd_power(sp.spectra[i], -0.5);
    ups1.block(o, o, d, d) = symmetrize<double>(u * sp.delta[i].asDiagonal() * u.transpose());
    ups2.block(o, o, d, d) = symmetrize<double>(u * sp.delta_tilde[i].asDiagonal() * u.transpose());
  }
  const Spectrum<double> inner = sym_eigen<double>(symmetrize<double>(r0h * rc * r0h));
  const MatrixXd j = symmetrize<double>(r0mh * spd_power(inner, 0.5) * r0mh);
  const MatrixXd j_inv = symmetrize<double>(r0h * spd_power(inner, -0.5) * r0h);
  const MatrixXd j0 = block_diag_of(j, p);

  const MatrixXd m1 =
      (-r_mh + (1.0 - dp.d1) * r0mh + dp.d1 * ups1) / (2.0 * dp.c1);
  const MatrixXd m2 = (-0.5 * (j0 + j_inv) + (1.0 - dp.d2) * MatrixXd::Identity(q, q) + dp.d2 * ups2) / dp.c2;

  const std::vector<int>& perm = c.variable_permutation;
  dp.j_matrix = unpermute(j, perm);
  dp.j0_matrix = unpermute(j0, perm);
  dp.m1 = unpermute(m1, perm);
  dp.m2 = unpermute(m2, perm);
  return dp;
}

double asymptotic_variance(const GroupedCorrelation& r, const DerivativePair& dp, int which) {
  if (which != 1 && which != 2) throw InputError("asymptotic_variance: r must be 1 or 2");
  const MatrixXd& m = dp.m(which);
  const MatrixXd& rm = r.matrix();
  const VectorXd diag_mr = (m * rm).diagonal();
  const MatrixXd a = rm * (m - MatrixXd(diag_mr.asDiagonal()));
  return std::max(0.0, 2.0 * (a * a).trace());
}

double asymptotic_variance(const GroupedCorrelation& r, int which) {
  return asymptotic_variance(r, m_matrix(r, which), which);
}

}  // namespace bwdep
