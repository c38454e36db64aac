#include <doctest.h>

#include "bwdep/coefficients.hpp"
#include "bwdep/montecarlo.hpp"
#include "bwdep/penalties.hpp"
#include "oracles.hpp"

TEST_SUITE_BEGIN("penalties");

using namespace bwdep;

namespace {

ScoresEstimate scores_from(const GroupedCorrelation& truth, int n, std::uint64_t seed) {
  const DataMatrix x = sample_gaussian_copula(CopulaModel{truth, {}}, n, seed);
  return normal_scores_matrix(x, truth.partition());
}

double group_kkt_residual(const MatrixXd& out, const MatrixXd& c, double omega, const Partition& p) {
  double worst = (out.diagonal() - c.diagonal()).cwiseAbs().maxCoeff();
  for (int i = 0; i < p.k(); ++i)
    for (int m = i; m < p.k(); ++m) {
      MatrixXd b = out.block(p.offset(i), p.offset(m), p.size(i), p.size(m));
      MatrixXd cb = c.block(p.offset(i), p.offset(m), p.size(i), p.size(m));
      if (m == i) {
        if (p.size(i) < 2) continue;
        b.diagonal().setZero();
        cb.diagonal().setZero();
      }
      const double gamma =
          m == i ? std::sqrt(p.size(i) * (p.size(i) - 1.0)) : std::sqrt(static_cast<double>(p.size(i)) * p.size(m));
      const double nb = b.norm();
      if (nb == 0.0) {
        worst = std::max(worst, std::max(0.0, cb.norm() - omega * gamma));
      } else {
        worst = std::max(worst, (b - cb + omega * gamma * b / nb).cwiseAbs().maxCoeff());
      }
    }
  return worst;
}

}  // namespace

TEST_CASE("ridge examples") {
  std::mt19937_64 gen(41);
  const GroupedCorrelation r(oracle::random_correlation(5, gen), Partition({2, 3}));
  CHECK(ridge(r, 1.0).matrix() == r.matrix());
  const VectorXd lam = sym_eigenvalues<double>(r.matrix());
  const VectorXd lr = sym_eigenvalues<double>(ridge(r, 0.5).matrix());
  for (int j = 0; j < 5; ++j) CHECK(lr(j) == doctest::Approx(0.5 * lam(j) + 0.5).epsilon(1e-12));
  CHECK(lr.minCoeff() >= 0.5 - 1e-12);
  const GroupedCorrelation singular(oracle::random_correlation(6, gen, 2, 0.0), Partition({3, 3}));
  CHECK(is_positive_definite<double>(ridge(singular, 0.9).matrix()));
  CHECK_THROWS_AS(ridge(r, 0.0), InputError);
  CHECK_THROWS_AS(ridge(r, 1.2), InputError);
}

TEST_CASE("ridge_cv: determinism and trends") {
  const GroupedCorrelation truth = design_correlation(1, 20);
  PenaltySpec spec = default_spec(PenaltyKind::ridge);
  const ScoresEstimate est = scores_from(truth, 60, 5);
  CHECK(ridge_cv(est, spec) == ridge_cv(est, spec));

  auto median_omega = [&](const GroupedCorrelation& t, int n) {
    std::vector<double> w;
    for (int s = 0; s < 15; ++s) {
      PenaltySpec sp = spec;
      sp.seed = 1000 + s;
      w.push_back(ridge_cv(scores_from(t, n, 77 + s), sp));
    }
    return oracle::median(w);
  };
  CHECK(median_omega(truth, 400) > median_omega(truth, 40));
  CHECK(median_omega(design_correlation(1, 36), 40) < median_omega(design_correlation(1, 6), 40));

  PenaltySpec small = spec;
  small.folds = 5;
  CHECK_THROWS_AS(ridge_cv(scores_from(truth, 9, 1), small), InputError);
}

TEST_CASE("scad_derivative pieces") {
  const double w = 0.2, a = 3.7;
  CHECK(scad_derivative(0.5 * w, w, a) == w);
  CHECK(scad_derivative(a * w + 1, w, a) == 0.0);
  CHECK(scad_derivative(w, w, a) == doctest::Approx((a * w - w) / (a - 1)));
  CHECK(scad_derivative(2 * w, w, a) == doctest::Approx((a * w - 2 * w) / (a - 1)));
}

TEST_CASE("penalty_weights") {
  std::mt19937_64 gen(42);
  const MatrixXd s = oracle::random_correlation(4, gen);
  const MatrixXd lasso = penalty_weights(PenaltyKind::lasso, s, s, 0.3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(lasso(i, j) == (i == j ? 0.0 : 0.3));
  MatrixXd big = s;
  big(0, 1) = big(1, 0) = 5.0;
  const MatrixXd scad = penalty_weights(PenaltyKind::scad, big, big, 0.3);
  CHECK(scad(0, 1) == 0.0);
  CHECK(scad.diagonal().isZero());
  MatrixXd z = s;
  z(0, 1) = z(1, 0) = 0.0;
  const MatrixXd ad = penalty_weights(PenaltyKind::adaptive_lasso, z, z, 1.0, 0.5);
  CHECK(ad(0, 1) == 1e12);
  CHECK(ad.diagonal().isZero());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j && std::abs(z(i, j)) >= 0.5) CHECK(ad(i, j) == 0.0);
  CHECK_THROWS_AS(penalty_weights(PenaltyKind::adaptive_lasso, z, z, 1.0), InputError);
}

TEST_CASE("group_prox: closed form, KKT and local optimality") {
  std::mt19937_64 gen(43);
  const Partition p({3, 2, 1});
  const MatrixXd c = oracle::random_symmetric(6, gen);
  CHECK(group_prox(c, 0.0, p) == c);
  MatrixXd small = c;
  small.block(0, 3, 3, 2) *= 1e-3;
  small.block(3, 0, 2, 3) *= 1e-3;
  const MatrixXd zeroed = group_prox(small, 0.1, p);
  CHECK(zeroed.block(0, 3, 3, 2).isZero(0.0));
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd center = oracle::random_symmetric(6, gen);
    const double omega = 0.05 + 0.1 * rep;
    const MatrixXd out = group_prox(center, omega, p);
    CHECK(out == out.transpose());
    CHECK(group_kkt_residual(out, center, omega, p) <= 1e-8);
    const double f = group_prox_objective(out, center, omega, p);
    for (int t = 0; t < 100; ++t) {
      const MatrixXd pert = out + 1e-3 * oracle::random_symmetric(6, gen);
      CHECK(f <= group_prox_objective(pert, center, omega, p) + 1e-14);
    }
  }
}

TEST_CASE("penalized_mle: unpenalized stationary point and 2x2 brute force") {
  std::mt19937_64 gen(44);
  const GroupedCorrelation truth = setting_model(1).correlation;
  const ScoresEstimate est = scores_from(truth, 200, 3);
  PenaltySpec spec = default_spec(PenaltyKind::lasso);
  const PenalizedEstimate zero = penalized_mle(est.covariance, spec, truth.partition(), 0.0);
  CHECK((zero.sigma - est.covariance).cwiseAbs().maxCoeff() < 1e-6);

  spec.inner_tolerance = 1e-12;
  spec.max_mm_iterations = 2000;
  spec.max_inner_iterations = 2000;
  for (int rep = 0; rep < 6; ++rep) {
    const MatrixXd g = oracle::random_gaussian(2, 30, gen);
    const MatrixXd sh = g * g.transpose() / 30.0;
    const double w = 0.02 + 0.04 * rep;
    const PenalizedEstimate fit = penalized_mle(sh, spec, Partition({1, 1}), w);
    const oracle::Lasso2Solution ref = oracle::lasso2_bruteforce(sh, w);
    CHECK(std::abs(fit.sigma(0, 1) - ref.c) <= 1e-4);
    CHECK(std::abs(fit.sigma(0, 0) - ref.a) <= 1e-4);
    CHECK(std::abs(fit.sigma(1, 1) - ref.b) <= 1e-4);
  }
}

TEST_CASE("penalized_mle: MM objective trace is non-increasing for every kind") {
  const GroupedCorrelation truth = scenario_correlation(2);
  const ScoresEstimate est = scores_from(truth, 300, 9);
  for (PenaltyKind kind : {PenaltyKind::lasso, PenaltyKind::adaptive_lasso, PenaltyKind::scad, PenaltyKind::group_lasso}) {
    PenaltySpec spec = default_spec(kind);
    spec.lla_iterations = 2;
    for (double w : {0.02, 0.1, 0.3}) {
      const PenalizedEstimate fit = penalized_mle(est.covariance, spec, truth.partition(), w);
      for (std::size_t t = 1; t < fit.objective_trace.size(); ++t) {
        CHECK(fit.objective_trace[t] <= fit.objective_trace[t - 1] + 1e-10);
      }
      CHECK(fit.support == fit.support.transpose());
      for (int i = 0; i < 20; ++i) CHECK(fit.support(i, i));
      CHECK(fit.correlation.matrix().diagonal().isOnes());
    }
  }
}

TEST_CASE("penalized_mle: singular covariance needs force") {
  const GroupedCorrelation truth = design_correlation(1, 10);
  const ScoresEstimate est = scores_from(truth, 6, 2);
  const PenaltySpec spec = default_spec(PenaltyKind::lasso);
  CHECK_THROWS_AS(penalized_mle(est.covariance, spec, truth.partition(), 0.1), InputError);
  PenaltySpec forced = spec;
  forced.force = true;
  const PenalizedEstimate fit = penalized_mle(est.covariance, forced, truth.partition(), 0.1);
  CHECK(is_positive_definite<double>(fit.sigma));
  const MatrixXd cond = condition_covariance(est.covariance);
  const VectorXd lam = sym_eigenvalues<double>(cond);
  CHECK(lam.maxCoeff() / lam.minCoeff() == doctest::Approx(10.0).epsilon(1e-8));
  CHECK_THROWS_AS(tune(est, spec, truth.partition()), InputError);
}

TEST_CASE("bic and degrees of freedom") {
  PenalizedEstimate id;
  id.sigma = MatrixXd::Identity(4, 4);
  const Partition p({2, 2});
  const int n = 50;
  CHECK(bic(id, MatrixXd::Identity(4, 4), n, p, PenaltyKind::lasso) ==
        doctest::Approx(-n * 4.0 - std::log(n) * 4.0).epsilon(1e-14));
  std::mt19937_64 gen(45);
  const MatrixXd raw = oracle::random_correlation(4, gen);
  MatrixXd est = raw;
  est.block(0, 2, 2, 2).setZero();
  est.block(2, 0, 2, 2).setZero();
  const double df = degrees_of_freedom(est, raw, p, PenaltyKind::group_lasso);
  CHECK(df == doctest::Approx(4.0 + 2.0 * (1.0 + 1.0 * (1.0 - 1.0))).epsilon(1e-14));
  CHECK(degrees_of_freedom(MatrixXd::Identity(4, 4), raw, p, PenaltyKind::group_lasso) == 4.0);
  const MatrixXd dense = raw;
  CHECK(degrees_of_freedom(dense, raw, p, PenaltyKind::lasso) > degrees_of_freedom(est, raw, p, PenaltyKind::lasso));
}

TEST_CASE("tune: single-point grid and BIC curve") {
  const GroupedCorrelation truth = scenario_correlation(2);
  const ScoresEstimate est = scores_from(truth, 200, 4);
  PenaltySpec spec = default_spec(PenaltyKind::group_lasso);
  spec.omega_grid = {0.123};
  const PenalizedEstimate fit = tune(est, spec, truth.partition());
  CHECK(fit.omega_selected == 0.123);
  CHECK(fit.bic_curve.size() == 1);
  const PenalizedEstimate full = tune(est, default_spec(PenaltyKind::lasso), truth.partition());
  CHECK(full.bic_curve.size() == 50);
  CHECK(*std::max_element(full.bic_curve.begin(), full.bic_curve.end()) ==
        full.bic_curve[std::find(full.tuning_grid.begin(), full.tuning_grid.end(), full.omega_selected) -
                       full.tuning_grid.begin()]);
}

TEST_CASE("spec validation") {
  PenaltySpec s = default_spec(PenaltyKind::scad);
  s.scad_a = 2.0;
  CHECK_THROWS_AS(validate(s), InputError);
  s = default_spec(PenaltyKind::lasso);
  s.omega_grid = {0.2, 0.1};
  CHECK_THROWS_AS(validate(s), InputError);
  CHECK(default_spec(PenaltyKind::ridge).omega_grid.front() == 0.01);
  CHECK(default_spec(PenaltyKind::ridge).omega_grid.back() == 0.999);
  CHECK(default_spec(PenaltyKind::lasso).omega_grid.size() == 50);
  CHECK(parse_penalty_kind("group-lasso") == PenaltyKind::group_lasso);
  CHECK_THROWS_AS(parse_penalty_kind("elastic"), InputError);
}

TEST_CASE("spec key-value round trip") {
  PenaltySpec s = default_spec(PenaltyKind::scad);
  s.folds = 7;
  s.seed = 99;
  const PenaltySpec back = spec_from_kv(to_kv(s));
  CHECK(back.kind == s.kind);
  CHECK(back.folds == 7);
  CHECK(back.seed == 99);
  CHECK(back.omega_grid.size() == s.omega_grid.size());
  CHECK(back.omega_grid.back() == doctest::Approx(s.omega_grid.back()).epsilon(1e-15));
  CHECK_THROWS_AS(spec_from_kv({{"kind", "lasso"}, {"bogus", "1"}}), InputError);
}

TEST_CASE("Scenario 1: adaptive lasso beats lasso on D-coefficient MSE; SCAD trend") {
  const GroupedCorrelation truth = scenario_correlation(1);
  const MaskXb true_support = (truth.matrix().array().abs() > 0.0).matrix();
  const double t1 = d1(truth);
  double mse_lasso = 0.0, mse_adaptive = 0.0;
  double tpr50 = 0.0, tpr500 = 0.0, fpr50 = 0.0, fpr500 = 0.0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    const ScoresEstimate est = scores_from(truth, 500, 500 + r);
    mse_lasso += std::pow(d1(tune(est, default_spec(PenaltyKind::lasso), truth.partition()).correlation) - t1, 2);
    mse_adaptive +=
        std::pow(d1(tune(est, default_spec(PenaltyKind::adaptive_lasso), truth.partition()).correlation) - t1, 2);
    const RecoveryRates big = tpr_fpr(tune(est, default_spec(PenaltyKind::scad), truth.partition()).support, true_support);
    const RecoveryRates sm =
        tpr_fpr(tune(scores_from(truth, 50, 50 + r), default_spec(PenaltyKind::scad), truth.partition()).support,
                true_support);
    tpr500 += *big.tpr;
    fpr500 += *big.fpr;
    tpr50 += *sm.tpr;
    fpr50 += *sm.fpr;
  }
  CHECK(mse_adaptive < mse_lasso);
  CHECK(fpr500 < fpr50);
  CHECK(tpr500 <= tpr50);
}

TEST_SUITE_END();
