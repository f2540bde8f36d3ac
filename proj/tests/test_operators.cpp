#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "pgkb/errors.hpp"
#include "pgkb/operators.hpp"
#include "pgkb/problems.hpp"
#include "pgkb/vec.hpp"

using namespace pgkb;

namespace {

Vec random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Vec v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

Eigen::VectorXd to_eigen(const Vec& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

void check_adjoint_consistency(const LinearOperator& op, std::uint64_t seed) {
  for (int probe = 0; probe < 100; ++probe) {
    const Vec v = random_vec(op.cols(), seed + 2 * probe);
    const Vec u = random_vec(op.rows(), seed + 2 * probe + 1);
    const Vec av = op.apply(v);
    const Vec atu = op.apply_adjoint(u);
    const double lhs = dot(av, u);
    const double rhs = dot(v, atu);
    const double scale = nrm2(av) * nrm2(u);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(scale, 1e-300));
  }
}

}  // namespace

TEST_CASE("identity and dense applies match hand values") {
  IdentityOperator id(3);
  CHECK(id.apply({1.0, 2.0, 3.0}) == Vec{1.0, 2.0, 3.0});

  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 2, 0, 0;
  DenseOperator A(a);
  CHECK(A.apply({1.0, 1.0}) == Vec{1.0, 2.0, 0.0});
  CHECK(A.apply_adjoint({1.0, 1.0, 5.0}) == Vec{1.0, 2.0});
  CHECK(op_apply(A, {1.0, 1.0}, Apply::Forward) == Vec{1.0, 2.0, 0.0});
  CHECK(op_apply(A, {1.0, 1.0, 5.0}, Apply::Adjoint) == Vec{1.0, 2.0});
}

TEST_CASE("apply counters track usage and reset") {
  DenseOperator A(Eigen::MatrixXd::Identity(4, 4));
  (void)A.apply(random_vec(4, 1));
  (void)A.apply(random_vec(4, 2));
  (void)A.apply_adjoint(random_vec(4, 3));
  CHECK(A.forward_applies() == 2);
  CHECK(A.adjoint_applies() == 1);
  A.reset_counters();
  CHECK(A.forward_applies() == 0);
  CHECK(A.adjoint_applies() == 0);
}

TEST_CASE("dimension mismatches are rejected") {
  DenseOperator A(Eigen::MatrixXd::Identity(3, 2));
  CHECK_THROWS_AS((void)A.apply({1.0, 2.0, 3.0}), ConfigError);
  CHECK_THROWS_AS((void)A.apply_adjoint({1.0, 2.0}), ConfigError);
}

TEST_CASE("gram operator composes A'A + alpha M") {
  SUBCASE("A = I, M = 0, alpha = 7 acts as the identity") {
    IdentityOperator A(3);
    ZeroOperator M(3, 3);
    GramOperator G = make_gram(A, M, 7.0);
    const Vec v = random_vec(3, 5);
    CHECK(G.apply(v) == v);
  }
  SUBCASE("A = 0, M = I, alpha = 2 doubles the input") {
    ZeroOperator A(3, 3);
    IdentityOperator M(3);
    GramOperator G = make_gram(A, M, 2.0);
    CHECK(G.apply({1.0, -1.0, 0.5}) == Vec{2.0, -2.0, 1.0});
  }
  SUBCASE("diagonal example gives diag(2, 4)") {
    DiagonalOperator A({1.0, 2.0});
    DiagonalOperator M({1.0, 0.0});
    GramOperator G = make_gram(A, M, 1.0);
    CHECK(G.apply({1.0, 1.0}) == Vec{2.0, 4.0});
  }
  SUBCASE("each apply costs one forward, one adjoint, one M application") {
    DenseOperator A(Eigen::MatrixXd::Identity(3, 3));
    DenseOperator M(Eigen::MatrixXd::Identity(3, 3));
    GramOperator G = make_gram(A, M, 1.0);
    (void)G.apply(random_vec(3, 6));
    CHECK(A.forward_applies() == 1);
    CHECK(A.adjoint_applies() == 1);
    CHECK(M.forward_applies() == 1);
  }
  SUBCASE("dimension mismatch is rejected") {
    IdentityOperator A(3);
    IdentityOperator M(2);
    CHECK_THROWS_AS((void)make_gram(A, M, 1.0), ConfigError);
  }
}

TEST_CASE("every shipped operator passes adjoint consistency probes") {
  DenseOperator dense(
      [] {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> d;
        Eigen::MatrixXd a(7, 5);
        for (Eigen::Index j = 0; j < 5; ++j)
          for (Eigen::Index i = 0; i < 7; ++i) a(i, j) = d(rng);
        return a;
      }());
  check_adjoint_consistency(dense, 100);
  IdentityOperator id(6);
  check_adjoint_consistency(id, 200);
  ZeroOperator zero(4, 6);
  check_adjoint_consistency(zero, 300);
  DiagonalOperator diag(random_vec(5, 18));
  check_adjoint_consistency(diag, 400);
  ToeplitzOperator toep(random_vec(9, 19));
  check_adjoint_consistency(toep, 500);
  Vec w = random_vec(7, 20);
  for (auto& x : w) x = std::abs(x) + 0.1;
  WeightedDiffGramOperator wdg(w);
  check_adjoint_consistency(wdg, 600);
  Laplacian2dOperator lap(4, 3);
  check_adjoint_consistency(lap, 700);
  DenseOperator a2(Eigen::MatrixXd::Identity(6, 6));
  IdentityOperator m2(6);
  GramOperator gram = make_gram(a2, m2, 0.5);
  check_adjoint_consistency(gram, 800);
}

TEST_CASE("gram positivity on a problem satisfying the rank condition") {
  const auto A = problems::deriv2_matrix(20);
  DenseOperator Aop(A);
  Vec w(19, 1.0);
  WeightedDiffGramOperator M(w);
  GramOperator G = make_gram(Aop, M, 2.0);
  for (int t = 0; t < 20; ++t) {
    const Vec v = random_vec(20, 900 + t);
    CHECK(dot(G.apply(v), v) > 0.0);
  }
}

TEST_CASE("cg_solve handles the trivial identities") {
  SUBCASE("identity operator converges in one iteration") {
    IdentityOperator G(2);
    auto r = cg_solve(G, {3.0, 4.0});
    CHECK(r.iterations == 1);
    CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(r.x[1] == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("diagonal solve hits tight tolerance") {
    DiagonalOperator G({1.0, 2.0, 3.0});
    InnerSolveConfig cfg;
    cfg.tol = 1e-12;
    auto r = cg_solve(G, {1.0, 2.0, 3.0}, cfg);
    for (double x : r.x) CHECK(x == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.relres <= 1e-12);
  }
  SUBCASE("zero rhs returns zero in zero iterations") {
    IdentityOperator G(3);
    auto r = cg_solve(G, Vec(3, 0.0));
    CHECK(r.iterations == 0);
    CHECK(r.x == Vec(3, 0.0));
  }
}

TEST_CASE("cg_solve matches a dense factorization on deriv2") {
  const auto A = problems::deriv2_matrix(100);
  DenseOperator Aop(A);
  Vec w(99, 1.0);
  WeightedDiffGramOperator M(w);
  const double alpha = 10.0;
  GramOperator G = make_gram(Aop, M, alpha);

  Eigen::MatrixXd L = problems::first_difference(100);
  Eigen::MatrixXd Gd = A.transpose() * A + alpha * L.transpose() * L;
  const Vec rhs = random_vec(100, 1000);
  const Eigen::VectorXd ref = Gd.llt().solve(to_eigen(rhs));

  InnerSolveConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 10000;
  auto r = cg_solve(G, rhs, cfg);
  CHECK(r.relres <= 1e-10);
  CHECK((to_eigen(r.x) - ref).norm() <= 1e-8 * ref.norm());
}

TEST_CASE("cg_solve error decreases monotonically in the G-norm") {
  const auto A = problems::deriv2_matrix(40);
  DenseOperator Aop(A);
  Vec w(39, 1.0);
  WeightedDiffGramOperator M(w);
  GramOperator G = make_gram(Aop, M, 1.0);
  Eigen::MatrixXd L = problems::first_difference(40);
  Eigen::MatrixXd Gd = A.transpose() * A + L.transpose() * L;
  const Vec rhs = random_vec(40, 1100);
  const Eigen::VectorXd star = Gd.llt().solve(to_eigen(rhs));

  InnerSolveConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 5000;
  cfg.record_stats = true;
  auto r = cg_solve(G, rhs, cfg);
  REQUIRE(r.iterates.size() >= 2);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& xj : r.iterates) {
    const Eigen::VectorXd e = to_eigen(xj) - star;
    const double gerr = std::sqrt(e.dot(Gd * e));
    CHECK(gerr <= prev * (1.0 + 1e-12));
    prev = gerr;
  }
}

TEST_CASE("cg_solve truncation and indefiniteness are surfaced") {
  SUBCASE("hitting max_iter sets the truncation flag") {
    const auto A = problems::deriv2_matrix(30);
    DenseOperator Aop(A);
    Vec w(29, 1.0);
    WeightedDiffGramOperator M(w);
    GramOperator G = make_gram(Aop, M, 1.0);
    InnerSolveConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_iter = 3;
    auto r = cg_solve(G, random_vec(30, 1200), cfg);
    CHECK(r.truncated);
    CHECK(r.iterations == 3);
  }
  SUBCASE("indefinite operators raise NumericalError") {
    DiagonalOperator G({1.0, -1.0});
    CHECK_THROWS_AS((void)cg_solve(G, {1.0, 1.0}), NumericalError);
  }
}

TEST_CASE("inner solver strategies track statistics") {
  DiagonalOperator G({2.0, 4.0});
  CgInnerSolver cg;
  (void)cg.solve(G, {2.0, 4.0});
  CHECK(cg.total_solves() == 1);
  CHECK(cg.total_iterations() >= 1);
  CHECK(cg.name() != "");

  Eigen::MatrixXd Gd = Eigen::MatrixXd::Zero(2, 2);
  Gd(0, 0) = 2.0;
  Gd(1, 1) = 4.0;
  DirectInnerSolver direct(Gd);
  const Vec s = direct.solve(G, {2.0, 4.0});
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(direct.total_solves() == 1);
}

TEST_CASE("materialize reproduces the dense matrix") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 2, 3, 4, 5, 6;
  DenseOperator A(a);
  CHECK((materialize(A) - a).norm() == 0.0);

  ToeplitzOperator T(Vec{2.0, 1.0, 0.5});
  Eigen::MatrixXd Td(3, 3);
  Td << 2, 1, 0.5, 1, 2, 1, 0.5, 1, 2;
  CHECK((materialize(T) - Td).norm() == 0.0);
}
