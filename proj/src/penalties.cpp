#include "bwdep/penalties.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "bwdep/parallel.hpp"
#include "bwdep/rng.hpp"

namespace bwdep {

namespace {

constexpr double kSupportThreshold = 1e-8;
constexpr double kAdaptiveCap = 1e12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool strictly_increasing(const std::vector<double>& g) {
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) return false;
  return true;
}

MatrixXd soft_threshold(const MatrixXd& v, const MatrixXd& thresh) {
  MatrixXd out(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j)) - thresh(i, j);
      out(i, j) = a > 0.0 ? std::copysign(a, v(i, j)) : 0.0;
    }
  return out;
}

// Summed directly: subtracting the diagonal from the full norm cancels badly.
double off_diag_norm(const MatrixXd& block) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < block.cols(); ++j)
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      if (i != j) s += block(i, j) * block(i, j);
  return std::sqrt(s);
}

struct PenaltyOps {
  std::function<double(const MatrixXd&)> value;
  std::function<MatrixXd(const MatrixXd&, double)> prox;  // prox of step * P
};

PenaltyOps entrywise_ops(const MatrixXd& w) {
  return {[w](const MatrixXd& s) { return w.cwiseProduct(s).cwiseAbs().sum(); },
          [w](const MatrixXd& v, double step) { return soft_threshold(v, step * w); }};
}

PenaltyOps group_ops(double omega, const Partition& p) {
  return {[omega, p](const MatrixXd& s) { return group_penalty(s, omega, p); },
          [omega, p](const MatrixXd& v, double step) { return group_prox(v, step * omega, p); }};
}

struct MmOutcome {
  MatrixXd sigma;
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
};

bool try_chol(const MatrixXd& x, Eigen::LLT<MatrixXd>& llt) {
  llt.compute(x);
  return llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

double logdet_from(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Tangent majorization of ln|Sigma| plus proximal gradient on the convex remainder.
MmOutcome mm_solve(const MatrixXd& s, const MatrixXd& start, const PenaltyOps& pen, const PenaltySpec& spec) {
  const Eigen::Index q = s.rows();
  const MatrixXd eye = MatrixXd::Identity(q, q);
  Eigen::LLT<MatrixXd> llt;
  MmOutcome out;
  out.sigma = start;
  if (!try_chol(out.sigma, llt)) throw NumericalError("penalized_mle: starting point is not positive definite");
  MatrixXd sigma_inv = symmetrize<double>(llt.solve(eye));
  double f = logdet_from(llt) + (sigma_inv * s).trace() + pen.value(out.sigma);
  out.trace.push_back(f);

  double step = -1.0;
  for (int t = 0; t < spec.max_mm_iterations; ++t) {
    const MatrixXd a = sigma_inv;
    MatrixXd x = out.sigma;
    MatrixXd x_inv = sigma_inv;
    double hx = (a * x).trace() + (x_inv * s).trace();
    double px = pen.value(x);
    if (step <= 0.0) {
      const double l1 = sym_eigenvalues<double>(x_inv).maxCoeff();
      const double l2 = sym_eigenvalues<double>(symmetrize<double>(x_inv * s * x_inv)).maxCoeff();
      step = 1.0 / std::max(1e-12, 2.0 * l1 * l2);
    }
    for (int it = 0; it < spec.max_inner_iterations; ++it) {
      const MatrixXd grad = symmetrize<double>(a - x_inv * s * x_inv);
      bool accepted = false;
      MatrixXd y, y_inv;
      double hy = 0.0;
      for (int halving = 0; halving <= 30; ++halving) {
        y = symmetrize<double>(pen.prox(x - step * grad, step));
        if (try_chol(y, llt)) {
          y_inv = symmetrize<double>(llt.solve(eye));
          hy = (a * y).trace() + (y_inv * s).trace();
          const MatrixXd d = y - x;
          const double bound = hx + grad.cwiseProduct(d).sum() + d.squaredNorm() / (2.0 * step);
          if (hy <= bound + 1e-14 * (1.0 + std::abs(hx))) {
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) throw NumericalError("penalized_mle: no admissible step after 30 halvings");
      const double py = pen.value(y);
      const double before = hx + px, after = hy + py;
      x = std::move(y);
      x_inv = std::move(y_inv);
      hx = hy;
      px = py;
      step *= 2.0;
      if (std::abs(before - after) <= spec.inner_tolerance * (1.0 + std::abs(after))) break;
    }
    if (!try_chol(x, llt)) throw NumericalError("penalized_mle: iterate lost positive definiteness");
    const double f_new = logdet_from(llt) + (x_inv * s).trace() + px;
    out.sigma = std::move(x);
    sigma_inv = std::move(x_inv);
    out.trace.push_back(f_new);
    out.iterations = t + 1;
    if (std::abs(f - f_new) <= spec.inner_tolerance * (1.0 + std::abs(f_new))) {
      out.converged = true;
      break;
    }
    f = f_new;
  }
  return out;
}

MaskXb support_of(const MatrixXd& sigma) {
  MaskXb m = (sigma.array().abs() > kSupportThreshold).matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, i) = true;
  return m;
}

}  // namespace

PenaltyKind parse_penalty_kind(const std::string& name) {
  if (name == "none") return PenaltyKind::none;
  if (name == "ridge") return PenaltyKind::ridge;
  if (name == "lasso") return PenaltyKind::lasso;
  if (name == "adaptive_lasso" || name == "adaptive-lasso") return PenaltyKind::adaptive_lasso;
  if (name == "scad") return PenaltyKind::scad;
  if (name == "group_lasso" || name == "group-lasso") return PenaltyKind::group_lasso;
  throw InputError("unknown penalty kind '" + name + "'");
}

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::none: return "none";
    case PenaltyKind::ridge: return "ridge";
    case PenaltyKind::lasso: return "lasso";
    case PenaltyKind::adaptive_lasso: return "adaptive_lasso";
    case PenaltyKind::scad: return "scad";
    case PenaltyKind::group_lasso: return "group_lasso";
  }
  return "unknown";
}

bool is_lasso_family(PenaltyKind kind) {
  return kind == PenaltyKind::lasso || kind == PenaltyKind::adaptive_lasso || kind == PenaltyKind::scad;
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 1) throw InputError("linspace: need at least one point");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  g.back() = hi;
  return g;
}

PenaltySpec default_spec(PenaltyKind kind) {
  PenaltySpec s;
  s.kind = kind;
  switch (kind) {
    case PenaltyKind::ridge: s.omega_grid = linspace(0.01, 0.999, 50); break;
    case PenaltyKind::adaptive_lasso:
      s.omega_grid = {1.0};
      s.rho_threshold_grid = linspace(0.01, 0.6, 50);
      break;
    case PenaltyKind::none: break;
    default: s.omega_grid = linspace(0.01, 0.6, 50); break;
  }
  return s;
}

void validate(const PenaltySpec& s) {
  if (!(s.scad_a > 2.0)) throw InputError("scad_a must exceed 2");
  if (!strictly_increasing(s.omega_grid)) throw InputError("omega grid must be strictly increasing");
  if (!strictly_increasing(s.rho_threshold_grid)) throw InputError("rho threshold grid must be strictly increasing");
  for (double w : s.omega_grid) {
    if (!(w > 0.0)) throw InputError("omega values must be positive");
    if (s.kind == PenaltyKind::ridge && w > 1.0) throw InputError("ridge omega values must lie in (0, 1]");
  }
  for (double r : s.rho_threshold_grid)
    if (!(r > 0.0 && r < 1.0)) throw InputError("rho thresholds must lie in (0, 1)");
  if (s.folds < 2) throw InputError("folds must be at least 2");
  if (s.max_mm_iterations < 1 || s.max_inner_iterations < 1) throw InputError("iteration limits must be positive");
  if (!(s.inner_tolerance > 0.0)) throw InputError("inner_tolerance must be positive");
  if (s.lla_iterations < 1) throw InputError("lla_iterations must be at least 1");
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

PenaltySpec spec_from_kv(const std::map<std::string, std::string>& kv) {
  const auto kind_it = kv.find("kind");
  PenaltySpec s = default_spec(kind_it == kv.end() ? PenaltyKind::lasso : parse_penalty_kind(kind_it->second));
  std::optional<double> omin, omax, rmin, rmax;
  std::optional<int> opts, rpts;
  for (const auto& [key, value] : kv) {
    try {
      if (key == "kind") continue;
      else if (key == "omega_min") omin = std::stod(value);
      else if (key == "omega_max") omax = std::stod(value);
      else if (key == "omega_points") opts = std::stoi(value);
      else if (key == "rho_min") rmin = std::stod(value);
      else if (key == "rho_max") rmax = std::stod(value);
      else if (key == "rho_points") rpts = std::stoi(value);
      else if (key == "scad_a") s.scad_a = std::stod(value);
      else if (key == "folds") s.folds = std::stoi(value);
      else if (key == "seed") s.seed = std::stoull(value);
      else if (key == "max_mm_iterations") s.max_mm_iterations = std::stoi(value);
      else if (key == "max_inner_iterations") s.max_inner_iterations = std::stoi(value);
      else if (key == "inner_tolerance") s.inner_tolerance = std::stod(value);
      else if (key == "lla_iterations") s.lla_iterations = std::stoi(value);
      else if (key == "force") s.force = value == "true" || value == "1";
      else throw InputError("unknown penalty key '" + key + "'");
    } catch (const InputError&) {
      throw;
    } catch (const std::exception&) {
      throw InputError("invalid value '" + value + "' for penalty key '" + key + "'");
    }
  }
  if (omin || omax || opts) {
    const std::vector<double>& d = s.omega_grid.empty() ? linspace(0.01, 0.6, 50) : s.omega_grid;
    s.omega_grid = linspace(omin.value_or(d.front()), omax.value_or(d.back()), opts.value_or(static_cast<int>(d.size())));
  }
  if (rmin || rmax || rpts) {
    const std::vector<double> d = s.rho_threshold_grid.empty() ? linspace(0.01, 0.6, 50) : s.rho_threshold_grid;
    s.rho_threshold_grid =
        linspace(rmin.value_or(d.front()), rmax.value_or(d.back()), rpts.value_or(static_cast<int>(d.size())));
  }
  validate(s);
  return s;
}

std::map<std::string, std::string> to_kv(const PenaltySpec& s) {
  std::map<std::string, std::string> kv{{"kind", to_string(s.kind)},
                                        {"scad_a", num(s.scad_a)},
                                        {"folds", std::to_string(s.folds)},
                                        {"seed", std::to_string(s.seed)},
                                        {"max_mm_iterations", std::to_string(s.max_mm_iterations)},
                                        {"max_inner_iterations", std::to_string(s.max_inner_iterations)},
                                        {"inner_tolerance", num(s.inner_tolerance)},
                                        {"lla_iterations", std::to_string(s.lla_iterations)},
                                        {"force", s.force ? "true" : "false"}};
  if (!s.omega_grid.empty()) {
    kv["omega_min"] = num(s.omega_grid.front());
    kv["omega_max"] = num(s.omega_grid.back());
    kv["omega_points"] = std::to_string(s.omega_grid.size());
  }
  if (!s.rho_threshold_grid.empty()) {
    kv["rho_min"] = num(s.rho_threshold_grid.front());
    kv["rho_max"] = num(s.rho_threshold_grid.back());
    kv["rho_points"] = std::to_string(s.rho_threshold_grid.size());
  }
  return kv;
}

GroupedCorrelation ridge(const GroupedCorrelation& r_hat, double omega) {
  if (!(omega > 0.0 && omega <= 1.0)) throw InputError("ridge: omega must lie in (0, 1]");
  const Eigen::Index q = r_hat.matrix().rows();
  MatrixXd m = omega * r_hat.matrix() + (1.0 - omega) * MatrixXd::Identity(q, q);
  m.diagonal().setOnes();
  return GroupedCorrelation(std::move(m), r_hat.partition());
}

std::vector<double> ridge_cv_scores(const ScoresEstimate& est, const PenaltySpec& spec) {
  const int n = static_cast<int>(est.scores.rows());
  const int k = spec.folds;
  if (k < 2) throw InputError("ridge_cv: need at least 2 folds");
  if (n < 2 * k) throw InputError("ridge_cv: n must be at least twice the number of folds");
  if (spec.omega_grid.empty()) throw InputError("ridge_cv: empty omega grid");
  std::vector<int> perm = seeded_permutation(n, spec.seed);
  std::vector<double> score(spec.omega_grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    const int lo = static_cast<int>(static_cast<long long>(f) * n / k);
    const int hi = static_cast<int>(static_cast<long long>(f + 1) * n / k);
    std::vector<int> val(perm.begin() + lo, perm.begin() + hi);
    std::vector<int> train(perm.begin(), perm.begin() + lo);
    train.insert(train.end(), perm.begin() + hi, perm.end());
    const MatrixXd z_tr = est.scores(train, Eigen::all);
    const MatrixXd z_val = est.scores(val, Eigen::all);
    const MatrixXd s_tr = symmetrize<double>(z_tr.transpose() * z_tr / static_cast<double>(train.size()));
    const MatrixXd s_val = symmetrize<double>(z_val.transpose() * z_val / static_cast<double>(val.size()));
    if ((s_tr.diagonal().array() <= 0.0).any()) throw InputError("ridge_cv: fold too small for scoring");
    const Spectrum<double> sp = sym_eigen<double>(cov_to_corr(s_tr));
    const VectorXd lam = sp.values.cwiseMax(0.0);
    const VectorXd b = (sp.vectors.transpose() * s_val * sp.vectors).diagonal();
    for (std::size_t g = 0; g < spec.omega_grid.size(); ++g) {
      if (score[g] == kNegInf) continue;
      const double w = spec.omega_grid[g];
      const VectorXd e = (w * lam.array() + (1.0 - w)).matrix();
      if (e.minCoeff() <= 1e-12) {
        score[g] = kNegInf;
        continue;
      }
      const double ll = -e.array().log().sum() - b.cwiseQuotient(e).sum();
      score[g] += static_cast<double>(val.size()) * ll;
    }
  }
  return score;
}

double ridge_cv(const ScoresEstimate& est, const PenaltySpec& spec) {
  const std::vector<double> score = ridge_cv_scores(est, spec);
  int best = -1;
  for (std::size_t g = 0; g < score.size(); ++g) {
    if (score[g] == kNegInf) continue;
    if (best < 0 || score[g] >= score[best]) best = static_cast<int>(g);  // ties go to the larger omega
  }
  if (best < 0) throw NumericalError("ridge_cv: every grid point gave a singular fit");
  return spec.omega_grid[best];
}

double scad_derivative(double t, double omega, double a) {
  if (t <= omega) return omega;
  if (t <= a * omega) return (a * omega - t) / (a - 1.0);
  return 0.0;
}

MatrixXd penalty_weights(PenaltyKind kind, const MatrixXd& sigma_prelim, const MatrixXd& corr_prelim, double omega,
                         std::optional<double> rho_threshold, double scad_a) {
  const Eigen::Index q = sigma_prelim.rows();
  MatrixXd w = MatrixXd::Zero(q, q);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index i = 0; i < q; ++i) {
      if (i == j) continue;
      switch (kind) {
        case PenaltyKind::lasso: w(i, j) = omega; break;
        case PenaltyKind::scad: w(i, j) = scad_derivative(std::abs(sigma_prelim(i, j)), omega, scad_a); break;
        case PenaltyKind::adaptive_lasso: {
          if (!rho_threshold) throw InputError("penalty_weights: adaptive lasso needs a rho threshold");
          if (std::abs(corr_prelim(i, j)) < *rho_threshold) {
            const double s = std::abs(sigma_prelim(i, j));
            w(i, j) = omega * (s > 0.0 ? std::min(1.0 / s, kAdaptiveCap) : kAdaptiveCap);
          }
          break;
        }
        default: throw InputError("penalty_weights: kind " + to_string(kind) + " has no entrywise weights");
      }
    }
  return w;
}

MatrixXd group_prox(const MatrixXd& v, double omega, const Partition& p) {
  if (omega < 0.0) throw InputError("group_prox: omega must be non-negative");
  MatrixXd out = v;
  for (int i = 0; i < p.k(); ++i) {
    const int oi = p.offset(i), di = p.size(i);
    for (int m = i; m < p.k(); ++m) {
      const int om = p.offset(m), dm = p.size(m);
      if (m == i) {
        if (di < 2) continue;
        const double gamma = std::sqrt(static_cast<double>(di) * (di - 1));
        const double s = off_diag_norm(v.block(oi, oi, di, di));
        const double scale = s <= omega * gamma ? 0.0 : 1.0 - omega * gamma / s;
        for (int a = 0; a < di; ++a)
          for (int b = 0; b < di; ++b)
            if (a != b) out(oi + a, oi + b) = v(oi + a, oi + b) * scale;
      } else {
        const double gamma = std::sqrt(static_cast<double>(di) * dm);
        const double s = v.block(oi, om, di, dm).norm();
        const double scale = s <= omega * gamma ? 0.0 : 1.0 - omega * gamma / s;
        out.block(oi, om, di, dm) = v.block(oi, om, di, dm) * scale;
        out.block(om, oi, dm, di) = v.block(om, oi, dm, di) * scale;
      }
    }
  }
  return out;
}

double group_penalty(const MatrixXd& sigma, double omega, const Partition& p) {
  double acc = 0.0;
  for (int i = 0; i < p.k(); ++i) {
    const int oi = p.offset(i), di = p.size(i);
    if (di > 1) acc += std::sqrt(static_cast<double>(di) * (di - 1)) * off_diag_norm(sigma.block(oi, oi, di, di));
    for (int m = i + 1; m < p.k(); ++m) {
      acc += 2.0 * std::sqrt(static_cast<double>(di) * p.size(m)) *
             sigma.block(oi, p.offset(m), di, p.size(m)).norm();
    }
  }
  return omega * acc;
}

double group_prox_objective(const MatrixXd& sigma, const MatrixXd& center, double omega, const Partition& p) {
  return 0.5 * (sigma - center).squaredNorm() + group_penalty(sigma, omega, p);
}

MatrixXd condition_covariance(const MatrixXd& sigma_hat_n) {
  const Eigen::Index q = sigma_hat_n.rows();
  const VectorXd lam = sym_eigenvalues<double>(sigma_hat_n);
  const double lmax = lam.maxCoeff();
  const double lmin = std::max(0.0, lam.minCoeff());
  if (q < 2 || lmax <= 0.0) throw InputError("condition_covariance: degenerate covariance");
  const double qd = static_cast<double>(q);
  const double delta = std::max(0.0, (lmax - qd * lmin) / (qd - 1.0));
  return sigma_hat_n + delta * MatrixXd::Identity(q, q);
}

double penalized_objective(const MatrixXd& sigma, const MatrixXd& sigma_hat, const MatrixXd& weights) {
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw SingularityError("penalized_objective: sigma is not positive definite");
  return logdet_from(llt) + llt.solve(sigma_hat).trace() + weights.cwiseProduct(sigma).cwiseAbs().sum();
}

PenalizedEstimate penalized_mle(const MatrixXd& sigma_hat_n, const PenaltySpec& spec, const Partition& p,
                                double omega) {
  validate(spec);
  require_symmetric(sigma_hat_n, "penalized_mle");
  if (sigma_hat_n.rows() != p.total()) throw InputError("penalized_mle: partition does not match covariance");
  if (!(omega >= 0.0)) throw InputError("penalized_mle: tuning value must be non-negative");
  if (spec.kind == PenaltyKind::ridge) throw InputError("penalized_mle: use ridge() for the ridge penalty");

  MatrixXd s = sigma_hat_n;
  const VectorXd lam = sym_eigenvalues<double>(s);
  if (lam.minCoeff() <= 1e-10 * std::max(1.0, lam.maxCoeff())) {
    if (!spec.force) {
      throw InputError("penalized_mle: Sigma_hat_n is singular (q > n?); enable force to apply the delta*I fix");
    }
    s = condition_covariance(s);
  }

  PenalizedEstimate est;
  if (spec.kind == PenaltyKind::none) {
    est.sigma = s;
    est.objective_trace.push_back(penalized_objective(s, s, MatrixXd::Zero(s.rows(), s.cols())));
  } else if (spec.kind == PenaltyKind::group_lasso) {
    MmOutcome mm = mm_solve(s, s, group_ops(omega, p), spec);
    est.sigma = std::move(mm.sigma);
    est.objective_trace = std::move(mm.trace);
    est.converged = mm.converged;
    est.iterations = mm.iterations;
  } else {
    // Adaptive lasso: omega is fixed at 1 and the argument is the threshold rho_n.
    const double w_omega = spec.kind == PenaltyKind::adaptive_lasso ? 1.0 : omega;
    const std::optional<double> rho =
        spec.kind == PenaltyKind::adaptive_lasso ? std::optional<double>(omega) : std::nullopt;
    MatrixXd prelim = s;
    MatrixXd start = s;
    for (int w = 0; w < spec.lla_iterations; ++w) {
      const MatrixXd weights = penalty_weights(spec.kind, prelim, cov_to_corr(prelim), w_omega, rho, spec.scad_a);
      MmOutcome mm = mm_solve(s, start, entrywise_ops(weights), spec);
      est.objective_trace = std::move(mm.trace);
      est.converged = mm.converged;
      est.iterations += mm.iterations;
      prelim = mm.sigma;
      start = mm.sigma;
      est.sigma = std::move(mm.sigma);
      if (spec.kind == PenaltyKind::lasso) break;  // weights do not depend on the iterate
    }
  }
  est.omega_selected = omega;
  est.support = support_of(est.sigma);
  est.correlation = GroupedCorrelation(cov_to_corr(est.sigma), p);
  est.df = degrees_of_freedom(est.sigma, sigma_hat_n, p, spec.kind);
  return est;
}

double degrees_of_freedom(const MatrixXd& sigma_omega, const MatrixXd& sigma_hat_n, const Partition& p,
                          PenaltyKind kind) {
  const Eigen::Index q = sigma_omega.rows();
  if (kind != PenaltyKind::group_lasso) {
    double df = 0.0;
    for (Eigen::Index j = 0; j < q; ++j)
      for (Eigen::Index i = 0; i <= j; ++i)
        if (std::abs(sigma_omega(i, j)) > kSupportThreshold) df += 1.0;
    return df;
  }
  double df = static_cast<double>(q);
  for (int i = 0; i < p.k(); ++i) {
    const int oi = p.offset(i), di = p.size(i);
    for (int m = i + 1; m < p.k(); ++m) {
      const int om = p.offset(m), dm = p.size(m);
      const double est = sigma_omega.block(oi, om, di, dm).norm();
      const double raw = sigma_hat_n.block(oi, om, di, dm).norm();
      if (est > kSupportThreshold && raw > 0.0) df += 1.0 + est / raw * (static_cast<double>(di) * dm - 1.0);
    }
    if (di > 1) {
      const double est = off_diag_norm(sigma_omega.block(oi, oi, di, di));
      const double raw = off_diag_norm(sigma_hat_n.block(oi, oi, di, di));
      if (est > kSupportThreshold && raw > 0.0) df += 1.0 + est / raw * (0.5 * di * (di - 1) - 1.0);
    }
  }
  return df;
}

double bic(const PenalizedEstimate& est, const MatrixXd& sigma_hat_n, int n, const Partition& p, PenaltyKind kind) {
  Eigen::LLT<MatrixXd> llt(est.sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("bic: estimate is singular");
  const double fit = logdet_from(llt) + llt.solve(sigma_hat_n).trace();
  const double df = degrees_of_freedom(est.sigma, sigma_hat_n, p, kind);
  return -static_cast<double>(n) * fit - std::log(static_cast<double>(n)) * df;
}

PenalizedEstimate tune(const ScoresEstimate& est, const PenaltySpec& spec, const Partition& p) {
  validate(spec);
  const int n = static_cast<int>(est.scores.rows());
  const int q = static_cast<int>(est.covariance.rows());
  if (spec.kind == PenaltyKind::ridge) {
    PenalizedEstimate out;
    out.tuning_grid = spec.omega_grid;
    out.bic_curve = ridge_cv_scores(est, spec);
    out.omega_selected = ridge_cv(est, spec);
    out.correlation = ridge(est.correlation, out.omega_selected);
    out.sigma = out.correlation.matrix();
    out.support = support_of(out.sigma);
    out.df = 0.5 * q * (q + 1.0);
    return out;
  }
  if (spec.kind == PenaltyKind::none) {
    PenalizedEstimate out;
    out.sigma = est.covariance;
    out.correlation = est.correlation;
    out.support = support_of(out.sigma);
    out.df = 0.5 * q * (q + 1.0);
    return out;
  }
  if (q > n && !spec.force) throw InputError("tune: q > n is refused for sparse penalties unless force is set");
  const std::vector<double>& grid =
      spec.kind == PenaltyKind::adaptive_lasso ? spec.rho_threshold_grid : spec.omega_grid;
  if (grid.empty()) throw InputError("tune: empty tuning grid");
  std::vector<PenalizedEstimate> fits(grid.size());
  std::vector<double> scores(grid.size(), kNegInf);
  std::vector<std::string> errors(grid.size());
  parallel_for(static_cast<int>(grid.size()), [&](int g) {
    try {
      fits[g] = penalized_mle(est.covariance, spec, p, grid[g]);
      scores[g] = bic(fits[g], est.covariance, n, p, spec.kind);
    } catch (const NumericalError& e) {
      errors[g] = e.what();
    }
  });
  int best = -1;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (scores[g] == kNegInf) continue;
    if (best < 0 || scores[g] > scores[best]) best = static_cast<int>(g);
  }
  if (best < 0) {
    std::ostringstream os;
    os << "tune: all " << grid.size() << " grid fits failed; first error: " << errors.front();
    throw NumericalError(os.str());
  }
  PenalizedEstimate out = std::move(fits[best]);
  out.tuning_grid = grid;
  out.bic_curve = std::move(scores);
  return out;
}

}  // namespace bwdep
