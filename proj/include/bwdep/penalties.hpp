#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bwdep/estimation.hpp"

namespace bwdep {

enum class PenaltyKind { none, ridge, lasso, adaptive_lasso, scad, group_lasso };

PenaltyKind parse_penalty_kind(const std::string& name);
std::string to_string(PenaltyKind kind);
bool is_lasso_family(PenaltyKind kind);  // lasso, adaptive_lasso, scad

std::vector<double> linspace(double lo, double hi, int points);

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::lasso;
  std::vector<double> omega_grid;          // lasso family / group lasso / ridge
  std::vector<double> rho_threshold_grid;  // adaptive lasso tuning values
  double scad_a = 3.7;
  int folds = 5;
  int max_mm_iterations = 200;
  int max_inner_iterations = 500;
  double inner_tolerance = 1e-7;
  int lla_iterations = 1;
  bool force = false;  // allow singular Sigma_hat_n via the delta*I fix
  std::uint64_t seed = 1;
};

// Spec with the default tuning grid for the kind.
PenaltySpec default_spec(PenaltyKind kind);
void validate(const PenaltySpec& spec);

// Flat key-value form: kind, omega_min, omega_max, omega_points, rho_min,
// rho_max, rho_points, scad_a, folds, seed, max_mm_iterations,
// max_inner_iterations, inner_tolerance, lla_iterations, force.
// Grids are equidistant; missing keys keep the kind's defaults.
PenaltySpec spec_from_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> to_kv(const PenaltySpec& spec);

struct PenalizedEstimate {
  MatrixXd sigma;
  GroupedCorrelation correlation;
  double omega_selected = 0.0;  // tuning value (rho_n for adaptive lasso)
  std::vector<double> objective_trace;
  MaskXb support;
  double df = 0.0;
  bool converged = true;
  int iterations = 0;
  std::vector<double> tuning_grid;  // filled by tune()
  std::vector<double> bic_curve;    // filled by tune(); -inf marks a failed fit
};

GroupedCorrelation ridge(const GroupedCorrelation& r_hat, double omega);

// Held-out Gaussian log-likelihood per grid point, summed over folds.
std::vector<double> ridge_cv_scores(const ScoresEstimate& est, const PenaltySpec& spec);
double ridge_cv(const ScoresEstimate& est, const PenaltySpec& spec);

double scad_derivative(double t, double omega, double a);

MatrixXd penalty_weights(PenaltyKind kind, const MatrixXd& sigma_prelim, const MatrixXd& corr_prelim, double omega,
                         std::optional<double> rho_threshold = std::nullopt, double scad_a = 3.7);

MatrixXd group_prox(const MatrixXd& sigma_in, double omega, const Partition& partition);
// Objective of the group proximal problem at sigma.
double group_prox_objective(const MatrixXd& sigma, const MatrixXd& center, double omega, const Partition& partition);
// Group penalty P_GLT(sigma, omega).
double group_penalty(const MatrixXd& sigma, double omega, const Partition& partition);

// Sigma_hat_n + delta I with condition number q when Sigma_hat_n is singular.
MatrixXd condition_covariance(const MatrixXd& sigma_hat_n);

// ln|S| + tr(S^{-1} Sigma_hat) + P(S)
double penalized_objective(const MatrixXd& sigma, const MatrixXd& sigma_hat, const MatrixXd& weights);

PenalizedEstimate penalized_mle(const MatrixXd& sigma_hat_n, const PenaltySpec& spec, const Partition& partition,
                                double omega);

double degrees_of_freedom(const MatrixXd& sigma_omega, const MatrixXd& sigma_hat_n, const Partition& partition,
                          PenaltyKind kind);
double bic(const PenalizedEstimate& est, const MatrixXd& sigma_hat_n, int n, const Partition& partition,
           PenaltyKind kind);

PenalizedEstimate tune(const ScoresEstimate& est, const PenaltySpec& spec, const Partition& partition);

}  // namespace bwdep
