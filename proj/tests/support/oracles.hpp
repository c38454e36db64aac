#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the library's coefficient or solver code.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_gaussian(int rows, int cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  MatrixXd g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = nd(gen);
  return g;
}

inline MatrixXd normalize_to_corr(const MatrixXd& s) {
  const VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd r = d.asDiagonal() * s * d.asDiagonal();
  r = (r + r.transpose()) / 2.0;
  r.diagonal().setOnes();
  return r;
}

// Normalized Gram matrix of 'rank' Gaussian factors plus a ridge; PD when ridge > 0.
inline MatrixXd random_correlation(int q, std::mt19937_64& gen, int rank = -1, double ridge = 0.05) {
  if (rank < 0) rank = q + 2;
  const MatrixXd g = random_gaussian(q, rank, gen);
  return normalize_to_corr(g * g.transpose() + ridge * MatrixXd::Identity(q, q));
}

inline MatrixXd random_symmetric(int q, std::mt19937_64& gen) {
  const MatrixXd g = random_gaussian(q, q, gen);
  return (g + g.transpose()) / 2.0;
}

inline MatrixXd sym_sqrt(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

inline MatrixXd block_diag(const MatrixXd& r, const std::vector<int>& dims) {
  MatrixXd out = MatrixXd::Zero(r.rows(), r.cols());
  int o = 0;
  for (int d : dims) {
    out.block(o, o, d, d) = r.block(o, o, d, d);
    o += d;
  }
  return out;
}

// Random member of the coupling set: R0^{1/2} K R0^{1/2} where K is a PSD matrix
// with identity diagonal blocks (block-normalized Wishart, low rank for extremes).
inline MatrixXd random_coupling(const MatrixXd& r0, const std::vector<int>& dims, std::mt19937_64& gen, int rank) {
  const int q = static_cast<int>(r0.rows());
  const MatrixXd g = random_gaussian(q, rank, gen);
  const MatrixXd w = g * g.transpose() + 1e-9 * MatrixXd::Identity(q, q);
  MatrixXd scale = MatrixXd::Zero(q, q);
  int o = 0;
  for (int d : dims) {
    scale.block(o, o, d, d) = sym_sqrt(w.block(o, o, d, d)).inverse();
    o += d;
  }
  const MatrixXd k = scale * w * scale;
  const MatrixXd h = sym_sqrt(r0);
  const MatrixXd a = h * k * h;
  return (a + a.transpose()) / 2.0;
}

inline double tr_sqrt(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

inline double bures(const MatrixXd& a, const MatrixXd& b) {
  const MatrixXd h = sym_sqrt(a);
  return a.trace() + b.trace() - 2.0 * tr_sqrt(h * b * h);
}

// Closed forms of the four-variable two-group example.
inline MatrixXd example3(double r1, double r2) {
  MatrixXd m(4, 4);
  m << 1, r1, r2, r2, r1, 1, r2, r2, r2, r2, 1, r1, r2, r2, r1, 1;
  return m;
}

// Arguments within roundoff of zero are the singular boundary and count as exact zeros.
inline double boundary_sqrt(double v) { return std::abs(v) <= 1e-14 ? 0.0 : std::sqrt(v); }

inline double example3_d1(double r1, double r2) {
  const double num =
      2.0 * std::sqrt(1.0 + r1) - boundary_sqrt(r1 - 2.0 * r2 + 1.0) - boundary_sqrt(r1 + 2.0 * r2 + 1.0);
  const double den = (2.0 - std::sqrt(2.0)) * (std::sqrt(1.0 + r1) + std::sqrt(1.0 - r1));
  return num / den;
}

inline double example3_d2(double r1, double r2) {
  const double a = std::abs(1.0 - r1);
  const double num = 4.0 - 2.0 * a - boundary_sqrt(r1 * r1 + 2.0 * r1 - 2.0 * r1 * r2 - 2.0 * r2 + 1.0) -
                     boundary_sqrt(r1 * r1 + 2.0 * r1 + 2.0 * r1 * r2 + 2.0 * r2 + 1.0);
  const double den = 4.0 - std::sqrt(2.0) * (a + r1 + 1.0);
  return num / den;
}

// Example 1: trivariate model with a single correlation between the first two variables.
inline double example1_d2(double rho) {
  return (2.0 - std::sqrt(1.0 - rho) - std::sqrt(1.0 + rho)) / (3.0 - std::sqrt(3.0));
}

inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-11) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi, c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

// 2x2 lasso objective ln|S| + tr(S^{-1} Sh) + 2 w |c| with S = [[a, c], [c, b]].
inline double lasso2_objective(double a, double b, double c, const MatrixXd& sh, double w) {
  const double det = a * b - c * c;
  if (!(a > 0 && b > 0 && det > 0)) return 1e300;
  const double tr = (b * sh(0, 0) - 2.0 * c * sh(0, 1) + a * sh(1, 1)) / det;
  return std::log(det) + tr + 2.0 * w * std::abs(c);
}

// Brute force over the off-diagonal entry: a dense 1-D grid with golden refinement,
// the diagonal profiled out by nested golden searches.
struct Lasso2Solution {
  double a, b, c, value;
};

inline Lasso2Solution lasso2_bruteforce(const MatrixXd& sh, double w) {
  auto profile_ab = [&](double c, double* a_out, double* b_out) {
    const double hi_a = 4.0 * sh(0, 0) + 4.0 * std::abs(c) + 1.0;
    const double hi_b = 4.0 * sh(1, 1) + 4.0 * std::abs(c) + 1.0;
    auto best_b = [&](double a) {
      const double lo = c * c / a + 1e-12;
      return golden_min([&](double b) { return lasso2_objective(a, b, c, sh, w); }, lo, lo + hi_b, 1e-12);
    };
    const double lo_a = std::abs(c) * 1e-3 + 1e-9;
    const double a = golden_min([&](double a) { return lasso2_objective(a, best_b(a), c, sh, w); }, lo_a, hi_a, 1e-12);
    const double b = best_b(a);
    if (a_out) *a_out = a;
    if (b_out) *b_out = b;
    return lasso2_objective(a, b, c, sh, w);
  };
  const double lim = 0.99 * std::sqrt(sh(0, 0) * sh(1, 1));
  const int grid = 400;
  double best_c = 0.0, best_v = profile_ab(0.0, nullptr, nullptr);
  for (int t = 0; t <= grid; ++t) {
    const double c = -lim + 2.0 * lim * t / grid;
    const double v = profile_ab(c, nullptr, nullptr);
    if (v < best_v) {
      best_v = v;
      best_c = c;
    }
  }
  const double step = 2.0 * lim / grid;
  const double c = golden_min([&](double c) { return profile_ab(c, nullptr, nullptr); }, best_c - step, best_c + step,
                              1e-11);
  Lasso2Solution s{};
  s.c = profile_ab(0.0, nullptr, nullptr) <= profile_ab(c, nullptr, nullptr) ? 0.0 : c;
  s.value = profile_ab(s.c, &s.a, &s.b);
  return s;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double ks_normal(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double sample_sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace oracle
