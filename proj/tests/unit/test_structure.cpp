#include <doctest.h>

#include "bwdep/coefficients.hpp"
#include "bwdep/structure.hpp"
#include "oracles.hpp"

TEST_SUITE_BEGIN("structure");

using namespace bwdep;

TEST_CASE("Partition parsing and invariants") {
  const Partition p = Partition::parse("3,3,3,3,3,3,2");
  CHECK(p.k() == 7);
  CHECK(p.total() == 20);
  CHECK(p.offset(6) == 18);
  CHECK(p.group_of(19) == 6);
  CHECK(p.to_string() == "3,3,3,3,3,3,2");
  CHECK_THROWS_AS(Partition::parse("4"), InputError);
  CHECK_THROWS_AS(Partition::parse("2,0"), InputError);
  CHECK_THROWS_AS(Partition::parse("2,x"), InputError);
}

TEST_CASE("GroupedCorrelation validation") {
  MatrixXd m = MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(GroupedCorrelation(m, Partition({1, 1})), InputError);
  m(0, 0) = 1.1;
  CHECK_THROWS_AS(GroupedCorrelation(m, Partition({1, 2})), InputError);
  MatrixXd bad(2, 2);
  bad << 1, 1.5, 1.5, 1;
  CHECK_THROWS_AS(GroupedCorrelation(bad, Partition({1, 1})), InputError);
  MatrixXd indef = oracle::example3(0.0, 0.9);  // violates rho1 >= 2|rho2| - 1
  CHECK_THROWS_AS(GroupedCorrelation(indef, Partition({2, 2})), InputError);
}

TEST_CASE("block_diag_of examples") {
  MatrixXd r(2, 2);
  r << 1, 0.7, 0.7, 1;
  CHECK(block_diag_of<double>(r, Partition({1, 1})).isApprox(MatrixXd::Identity(2, 2)));
  const GroupedCorrelation ex(oracle::example3(-0.4, 0.3), Partition({2, 2}));
  const MatrixXd r0 = block_diag_of(ex);
  MatrixXd expect = MatrixXd::Zero(4, 4);
  expect.block(0, 0, 2, 2) << 1, -0.4, -0.4, 1;
  expect.block(2, 2, 2, 2) << 1, -0.4, -0.4, 1;
  CHECK(r0 == expect);
  CHECK(block_diag_of<double>(r0, ex.partition()) == r0);
}

TEST_CASE("canonical_sort: Setting 4 dims and an already sorted input") {
  std::mt19937_64 gen(4);
  const GroupedCorrelation r(oracle::random_correlation(15, gen), Partition({4, 5, 3, 1, 2}));
  const CanonicalForm cf = canonical_sort(r);
  CHECK(cf.grouped.partition().dims() == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(cf.group_permutation == std::vector<int>{3, 4, 2, 0, 1});  // 0-based form of (4,5,3,1,2)
  CHECK(cf.grouped.matrix() == r.matrix()(cf.variable_permutation, cf.variable_permutation));
  CHECK(d1(r) == doctest::Approx(d1(cf.grouped)).epsilon(1e-12));

  const GroupedCorrelation s(oracle::random_correlation(5, gen), Partition({1, 2, 2}));
  const CanonicalForm id = canonical_sort(s);
  CHECK(id.group_permutation == std::vector<int>{0, 1, 2});
  CHECK(id.variable_permutation == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("build_rm examples") {
  const MatrixXd ones = build_rm<double>(MatrixXd::Identity(4, 4), Partition::singletons(4));
  CHECK((ones - MatrixXd::Ones(4, 4)).cwiseAbs().maxCoeff() < 1e-14);

  const MatrixXd rm0 = build_rm<double>(MatrixXd::Identity(4, 4), Partition({2, 2}));
  CHECK((rm0.block(0, 2, 2, 2) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

  MatrixXd r = MatrixXd::Identity(4, 4);
  r(0, 1) = r(1, 0) = r(2, 3) = r(3, 2) = 0.5;
  const MatrixXd rm = build_rm<double>(r, Partition({2, 2}));
  const VectorXd lam = sym_eigenvalues<double>(rm);
  CHECK(lam(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(lam(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(lam(2)) < 1e-12);
  CHECK(std::abs(lam(3)) < 1e-12);
  CHECK_THROWS_AS(build_rm<double>(MatrixXd::Identity(3, 3), Partition({2, 1})), InputError);
}

TEST_CASE("build_rm reproduces the closed-form two-by-two Psi block") {
  for (double ri : {0.1, 0.5, 0.8})
    for (double rj : {0.3, 0.6, 0.9}) {
      MatrixXd r = MatrixXd::Identity(4, 4);
      r(0, 1) = r(1, 0) = ri;
      r(2, 3) = r(3, 2) = rj;
      const MatrixXd psi = build_rm<double>(r, Partition({2, 2})).block(0, 2, 2, 2);
      const double p = std::sqrt(1 + ri) * std::sqrt(1 + rj), m = std::sqrt(1 - ri) * std::sqrt(1 - rj);
      // The second eigenvector of each block has a free sign, giving two valid Psi blocks.
      MatrixXd same(2, 2), flipped(2, 2);
      same << (p + m) / 2, (p - m) / 2, (p - m) / 2, (p + m) / 2;
      flipped << (p - m) / 2, (p + m) / 2, (p + m) / 2, (p - m) / 2;
      const double err = std::min((psi - same).cwiseAbs().maxCoeff(), (psi - flipped).cwiseAbs().maxCoeff());
      CHECK(err < 1e-12);
    }
}

TEST_CASE("build_rm: trace, rank, eigenvalue sums and Bures maximality") {
  std::mt19937_64 gen(8);
  const std::vector<std::vector<int>> configs = {{1, 2}, {2, 2}, {1, 2, 3}, {2, 3, 3}, {1, 1, 4}};
  for (const auto& dims : configs) {
    const Partition p(dims);
    const int q = p.total();
    const MatrixXd r0 = oracle::block_diag(oracle::random_correlation(q, gen), dims);
    const MatrixXd rm = build_rm<double>(r0, p);
    CHECK(rm.trace() == doctest::Approx(q).epsilon(1e-12));
    const VectorXd lam = sym_eigenvalues<double>(rm);
    const VectorXd sums = rm_eigenvalues(block_spectra<double>(r0, p), q);
    VectorXd sorted = sums;
    std::sort(sorted.data(), sorted.data() + q, std::greater<double>());
    CHECK((lam - sorted).cwiseAbs().maxCoeff() < 1e-8);
    int nonzero = 0;
    for (int j = 0; j < q; ++j) nonzero += lam(j) > 1e-9;
    CHECK(nonzero <= dims.back());
    for (int t = 0; t < 50; ++t) {
      const MatrixXd a = oracle::random_coupling(r0, dims, gen, dims.back() + static_cast<int>(t % 3));
      CHECK(majorizes<double>(sym_eigenvalues<double>(a), lam));
      CHECK(oracle::bures(a, MatrixXd::Identity(q, q)) <= oracle::bures(rm, MatrixXd::Identity(q, q)) + 1e-9);
      CHECK(oracle::bures(a, r0) <= oracle::bures(rm, r0) + 1e-9);
    }
  }
}

TEST_CASE("build_rm allows tied block eigenvalues") {
  CHECK_NOTHROW(build_rm<double>(MatrixXd::Identity(5, 5), Partition({2, 3})));
}

TEST_SUITE_END();
