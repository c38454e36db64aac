#pragma once

#include <optional>
#include <utility>

#include "bwdep/structure.hpp"

namespace bwdep {

enum class PhiKind { mutual_information, hellinger };

struct DependenceReport {
  double d1 = 0.0;
  double d2 = 0.0;
  std::optional<double> mutual_information;  // absent when R is singular
  std::optional<double> hellinger;
  std::optional<double> asymptotic_sd_d1;
  std::optional<double> asymptotic_sd_d2;
  std::optional<int> n;
  std::optional<double> ci_level;
  std::optional<std::pair<double, double>> ci_d1;
  std::optional<std::pair<double, double>> ci_d2;
};

// Trace terms shared by D1, D2 and the asymptotic variance. The R_m terms come from the
// padded eigenvalue sums, never from an eigendecomposition of R_m itself.
struct TraceTerms {
  double sum_tr_sqrt_blocks = 0.0;  // sum_i tr R_ii^{1/2}
  double tr_sqrt_r = 0.0;           // tr R^{1/2}
  double tr_sqrt_rm = 0.0;          // tr R_m^{1/2}
  double tr_r = 0.0;                // tr R
  double tr_cross = 0.0;            // tr (R_0^{1/2} R R_0^{1/2})^{1/2}
  double tr_cross_m = 0.0;          // tr (R_0^{1/2} R_m R_0^{1/2})^{1/2}
  double c1() const { return sum_tr_sqrt_blocks - tr_sqrt_rm; }
  double c2() const { return tr_r - tr_cross_m; }
};

TraceTerms trace_terms(const MatrixXd& r, const Partition& p);

// Raw forms accept any symmetric PSD matrix with the given partition
// (unit diagonal not required); used for perturbation checks.
double d1_of(const MatrixXd& r, const Partition& p);
double d2_of(const MatrixXd& r, const Partition& p);

double d1(const GroupedCorrelation& r);
double d2(const GroupedCorrelation& r);
double phi_dependence(const GroupedCorrelation& r, PhiKind kind);

DependenceReport dependence_report(const GroupedCorrelation& r, bool with_asymptotics,
                                   std::optional<int> n = std::nullopt, double ci_level = 0.95);

// Clamps values within 1e-9 of [0,1]; larger excursions throw.
double clamp_unit(double v, const char* what);

}  // namespace bwdep
