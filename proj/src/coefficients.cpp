#include "bwdep/coefficients.hpp"

#include <cmath>
#include <sstream>

#include "bwdep/asymptotics.hpp"
#include "bwdep/estimation.hpp"

namespace bwdep {

double clamp_unit(double v, const char* what) {
  if (!std::isfinite(v) || v < -1e-9 || v > 1.0 + 1e-9) {
    std::ostringstream os;
    os << what << ": value " << v << " outside [0, 1]";
    throw NumericalError(os.str());
  }
  return std::min(1.0, std::max(0.0, v));
}

TraceTerms trace_terms(const MatrixXd& r, const Partition& p) {
  if (r.rows() != p.total()) throw InputError("partition total does not match matrix order");
  require_symmetric(r, "trace_terms");
  const BlockSpectra bs = block_spectra(r, p);
  TraceTerms t;
  t.sum_tr_sqrt_blocks = bs.padded.cwiseSqrt().sum();
  t.tr_sqrt_r = trace_sqrt(r);
  t.tr_r = r.trace();
  const VectorXd s = bs.padded.colwise().sum().transpose();
  const VectorXd s2 = bs.padded.cwiseAbs2().colwise().sum().transpose();
  t.tr_sqrt_rm = s.cwiseSqrt().sum();
  t.tr_cross_m = s2.cwiseSqrt().sum();
  MatrixXd r0h = MatrixXd::Zero(r.rows(), r.cols());
  for (int i = 0; i < p.k(); ++i) {
    r0h.block(p.offset(i), p.offset(i), p.size(i), p.size(i)) = spd_power(bs.spectra[i], 0.5);
  }
  t.tr_cross = trace_sqrt<double>(symmetrize<double>(r0h * r * r0h));
  return t;
}

double d1_of(const MatrixXd& r, const Partition& p) {
  const TraceTerms t = trace_terms(r, p);
  const double c1 = t.c1();
  if (c1 <= 1e-12) throw DegenerateError("d1: normalizing constant vanishes (degenerate diagonal blocks)");
  return clamp_unit((t.sum_tr_sqrt_blocks - t.tr_sqrt_r) / c1, "d1");
}

double d2_of(const MatrixXd& r, const Partition& p) {
  const TraceTerms t = trace_terms(r, p);
  const double c2 = t.c2();
  if (c2 <= 1e-12) throw DegenerateError("d2: normalizing constant vanishes (degenerate diagonal blocks)");
  const double tr_r0 = block_diag_of(r, p).trace();
  return clamp_unit((t.tr_r + tr_r0 - 2.0 * t.tr_cross) / (2.0 * c2), "d2");
}

double d1(const GroupedCorrelation& r) {
  const CanonicalForm c = canonical_sort(r);
  return d1_of(c.grouped.matrix(), c.grouped.partition());
}

double d2(const GroupedCorrelation& r) {
  const CanonicalForm c = canonical_sort(r);
  return d2_of(c.grouped.matrix(), c.grouped.partition());
}

namespace {

double logdet_or_input_error(const MatrixXd& m, const char* what) {
  try {
    return spd_logdet(m);
  } catch (const SingularityError&) {
    throw InputError(std::string(what) + ": correlation matrix is singular");
  }
}

}  // namespace

double phi_dependence(const GroupedCorrelation& r, PhiKind kind) {
  const Partition& p = r.partition();
  const MatrixXd& m = r.matrix();
  const MatrixXd r0 = block_diag_of(r);
  if (sym_eigenvalues<double>(m).minCoeff() <= 1e-10) throw InputError("phi_dependence: correlation matrix is singular");
  const double ld = logdet_or_input_error(m, "phi_dependence");
  double ld_blocks = 0.0;
  for (int i = 0; i < p.k(); ++i) ld_blocks += logdet_or_input_error(r.block(i, i), "phi_dependence");
  if (kind == PhiKind::mutual_information) {
    const double ratio = std::exp(ld - ld_blocks);
    return clamp_unit(std::sqrt(std::max(0.0, 1.0 - std::min(1.0, ratio))), "mutual_information");
  }
  // |I + R0^{-1} R| = |R0 + R| / |R0|
  const double ld_sum = logdet_or_input_error(r0 + m, "phi_dependence") - ld_blocks;
  const double q = static_cast<double>(m.rows());
  const double log_ratio = 0.5 * q * std::log(2.0) + 0.25 * ld - 0.5 * ld_sum - 0.25 * ld_blocks;
  return clamp_unit(1.0 - std::min(1.0, std::exp(log_ratio)), "hellinger");
}

namespace {

bool is_block_diagonal(const GroupedCorrelation& r) {
  const Partition& p = r.partition();
  for (int i = 0; i < p.k(); ++i)
    for (int j = i + 1; j < p.k(); ++j)
      if (r.block(i, j).cwiseAbs().maxCoeff() > 1e-12) return false;
  return true;
}

}  // namespace

DependenceReport dependence_report(const GroupedCorrelation& r, bool with_asymptotics, std::optional<int> n,
                                   double ci_level) {
  DependenceReport rep;
  rep.d1 = d1(r);
  rep.d2 = d2(r);
  if (sym_eigenvalues<double>(r.matrix()).minCoeff() > 1e-10) {
    rep.mutual_information = phi_dependence(r, PhiKind::mutual_information);
    rep.hellinger = phi_dependence(r, PhiKind::hellinger);
  }
  if (!with_asymptotics) return rep;
  if (is_block_diagonal(r)) {
    rep.asymptotic_sd_d1 = 0.0;
    rep.asymptotic_sd_d2 = 0.0;
  } else {
    const DerivativePair dp = m_matrix(r, 1);
    rep.asymptotic_sd_d1 = std::sqrt(asymptotic_variance(r, dp, 1));
    rep.asymptotic_sd_d2 = std::sqrt(asymptotic_variance(r, dp, 2));
  }
  if (n) {
    if (*n < 1) throw InputError("dependence_report: n must be positive");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw InputError("dependence_report: ci_level must be in (0,1)");
    rep.n = n;
    rep.ci_level = ci_level;
    const double z = normal_quantile(0.5 + 0.5 * ci_level);
    const double rn = std::sqrt(static_cast<double>(*n));
    rep.ci_d1 = std::make_pair(rep.d1 - z * *rep.asymptotic_sd_d1 / rn, rep.d1 + z * *rep.asymptotic_sd_d1 / rn);
    rep.ci_d2 = std::make_pair(rep.d2 - z * *rep.asymptotic_sd_d2 / rn, rep.d2 + z * *rep.asymptotic_sd_d2 / rn);
  }
  return rep;
}

}  // namespace bwdep
