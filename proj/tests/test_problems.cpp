#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "pgkb/errors.hpp"
#include "pgkb/io.hpp"
#include "pgkb/operators.hpp"
#include "pgkb/problems.hpp"
#include "pgkb/vec.hpp"

using namespace pgkb;
namespace fs = std::filesystem;

TEST_CASE("deriv2 entries follow the midpoint kernel") {
  // n = 4: t = {1/8, 3/8, 5/8, 7/8}, h = 1/4, K(s,t) = s(t-1) for s < t,
  // t(s-1) otherwise
  const auto A = problems::deriv2_matrix(4);
  CHECK(A(0, 0) == doctest::Approx(-7.0 / 256).epsilon(1e-15));
  CHECK(A(0, 1) == doctest::Approx(-5.0 / 256).epsilon(1e-15));
  CHECK(A(1, 0) == doctest::Approx(-5.0 / 256).epsilon(1e-15));
  CHECK(A(1, 1) == doctest::Approx(-15.0 / 256).epsilon(1e-15));
  CHECK(A(1, 2) == doctest::Approx(-9.0 / 256).epsilon(1e-15));
  CHECK(A(0, 3) == doctest::Approx(-1.0 / 256).epsilon(1e-15));
  CHECK(A(3, 3) == doctest::Approx(-7.0 / 256).epsilon(1e-15));

  const auto A5 = problems::deriv2_matrix(5);
  CHECK((A5 - A5.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Vec xt = problems::deriv2_xtrue(4);
  CHECK(xt[0] == doctest::Approx(0.125));
  CHECK(xt[1] == doctest::Approx(0.375));
  CHECK(xt[2] == doctest::Approx(0.625));
  CHECK(xt[3] == doctest::Approx(0.875));

  CHECK_THROWS_AS((void)problems::deriv2_matrix(3), ConfigError);
}

TEST_CASE("deriv2 is severely ill conditioned") {
  const auto A = problems::deriv2_matrix(100);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  CHECK(s(0) / s(49) >= 1e3);
}

TEST_CASE("gauss1d kernel and signal") {
  const double sigma = 10.0;
  const Vec g = problems::gauss1d_kernel(64, sigma);
  CHECK(g[0] == doctest::Approx(1.0 / (std::sqrt(2 * M_PI) * sigma))
                    .epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(g[0] * std::exp(-1.0 / (2 * sigma * sigma)))
                    .epsilon(1e-14));

  // row i sums the pdf over integer offsets -i..n-1-i; the midpoint-rule
  // normal-cdf value predicts that lattice sum to ~1e-5, and quantifies how
  // much tail the truncation at the boundary removes
  ToeplitzOperator A(g);
  const Vec ones(64, 1.0);
  const Vec row_sums = A.apply(ones);
  auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  for (std::size_t i = 28; i < 36; ++i) {
    const double di = static_cast<double>(i);
    const double expected = Phi((63.0 - di + 0.5) / sigma) - Phi((-di - 0.5) / sigma);
    CHECK(row_sums[i] == doctest::Approx(expected).epsilon(1e-4));
    CHECK(row_sums[i] > 0.99);
  }
  CHECK(row_sums[0] < 0.6);

  const Eigen::MatrixXd Am = materialize(A);
  CHECK((Am - Am.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // levels {0, 1, 0.4, 0.9, 0} switch at fractions {.1, .25, .5, .75, .9}
  const Vec xt = problems::gauss1d_xtrue(20);
  for (std::size_t i = 0; i < 2; ++i) CHECK(xt[i] == 0.0);
  for (std::size_t i = 2; i < 5; ++i) CHECK(xt[i] == 1.0);
  for (std::size_t i = 5; i < 10; ++i) CHECK(xt[i] == 0.4);
  for (std::size_t i = 10; i < 15; ++i) CHECK(xt[i] == 0.9);
  for (std::size_t i = 15; i < 20; ++i) CHECK(xt[i] == 0.0);

  CHECK_THROWS_AS((void)problems::gauss1d_kernel(8, sigma), ConfigError);
  CHECK_THROWS_AS((void)problems::gauss1d_kernel(64, 0.0), ConfigError);
}

TEST_CASE("first difference and its gram") {
  const Eigen::MatrixXd D = problems::first_difference(3);
  REQUIRE(D.rows() == 2);
  REQUIRE(D.cols() == 3);
  CHECK(D(0, 0) == -1.0);
  CHECK(D(0, 1) == 1.0);
  CHECK(D(0, 2) == 0.0);
  CHECK(D(1, 1) == -1.0);
  CHECK(D(1, 2) == 1.0);

  // constants lie in the null space
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  CHECK((D * ones).norm() == 0.0);

  // D'D is the standard second-difference stencil
  const Eigen::MatrixXd M = D.transpose() * D;
  CHECK(M(0, 0) == 1.0);
  CHECK(M(1, 1) == 2.0);
  CHECK(M(2, 2) == 1.0);
  CHECK(M(0, 1) == -1.0);

  CHECK_THROWS_AS((void)problems::first_difference(1), ConfigError);
}

TEST_CASE("tv weights follow the smoothed reciprocal") {
  const double beta = 1e-3;
  const Vec flat(10, 2.5);
  const Vec wf = problems::tv_weights(flat, beta);
  REQUIRE(wf.size() == 9);
  for (double w : wf) CHECK(w == doctest::Approx(1.0 / beta).epsilon(1e-12));

  Vec step(6, 0.0);
  for (std::size_t i = 3; i < 6; ++i) step[i] = 2.0;  // one jump of height 2
  const Vec ws = problems::tv_weights(step, beta);
  CHECK(ws[2] == doctest::Approx(1.0 / std::sqrt(4.0 + beta * beta))
                     .epsilon(1e-12));
  CHECK(ws[0] == doctest::Approx(1.0 / beta).epsilon(1e-12));

  CHECK_THROWS_AS((void)problems::tv_weights(flat, 0.0), ConfigError);
}

TEST_CASE("weighted difference factor matches the operator gram") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  Vec w(19);
  for (auto& v : w) v = u(rng);

  const Eigen::MatrixXd L = problems::weighted_first_difference(w);
  const Eigen::MatrixXd LtL = L.transpose() * L;
  WeightedDiffGramOperator M(w);
  const Eigen::MatrixXd Mm = materialize(M);
  CHECK((LtL - Mm).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("2-d laplacian spectrum matches the closed form") {
  const std::size_t nx = 8, ny = 8;
  Laplacian2dOperator Lap(nx, ny);
  const Eigen::MatrixXd Lm = materialize(Lap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lm);
  std::vector<double> expect;
  for (std::size_t p = 0; p < nx; ++p)
    for (std::size_t q = 0; q < ny; ++q)
      expect.push_back(2.0 - 2.0 * std::cos(M_PI * double(p) / double(nx)) +
                       2.0 - 2.0 * std::cos(M_PI * double(q) / double(ny)));
  std::sort(expect.begin(), expect.end());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    CHECK(es.eigenvalues()(i) ==
          doctest::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("seeded gaussian vectors are reproducible") {
  const Vec a = problems::gaussian_vector(257, 42);
  const Vec b = problems::gaussian_vector(257, 42);
  const Vec c = problems::gaussian_vector(257, 43);
  REQUIRE(a.size() == 257);
  CHECK(a == b);  // bitwise
  CHECK(a != c);
  // crude sanity on the distribution
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= 257.0;
  CHECK(std::abs(mean) < 0.2);
}

TEST_CASE("noise injection hits the requested level exactly") {
  const Vec b_true = problems::gaussian_vector(300, 9);
  const double bt = nrm2(b_true);
  for (double eps : {1e-4, 1e-2, 0.3}) {
    auto [b, e_norm] = problems::add_noise(b_true, eps, 17);
    CHECK(e_norm == doctest::Approx(eps * bt).epsilon(1e-15));
    Vec e = b;
    axpy(-1.0, b_true, e);
    CHECK(nrm2(e) == doctest::Approx(e_norm).epsilon(1e-13));
  }
  auto [b0, z] = problems::add_noise(b_true, 0.0, 17);
  CHECK(z == 0.0);
  CHECK(b0 == b_true);
  CHECK_THROWS_AS((void)problems::add_noise(b_true, -1e-3, 17), ConfigError);
}

TEST_CASE("assembled instances satisfy the quadratic-form identity") {
  // x'Mx must equal ||Lx||^2 whenever the factor is available
  for (const char* prob : {"deriv2", "gauss1d"}) {
    for (const char* reg : {"firstdiff", "tv", "identity"}) {
      problems::InstanceSpec spec;
      spec.problem = prob;
      spec.n = 60;
      spec.reg = reg;
      spec.epsilon = 1e-3;
      spec.seed = 5;
      auto inst = problems::make_instance(spec);
      REQUIRE(inst.L.has_value());
      std::mt19937_64 rng(99);
      std::normal_distribution<double> dist;
      for (int probe = 0; probe < 25; ++probe) {
        Vec x(60);
        for (auto& v : x) v = dist(rng);
        const double quad = dot(x, inst.M->apply(x));
        Eigen::VectorXd xe(60);
        for (Eigen::Index i = 0; i < 60; ++i)
          xe(i) = x[static_cast<std::size_t>(i)];
        const double ref = (*inst.L * xe).squaredNorm();
        CHECK(quad == doctest::Approx(ref).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("laplace2d instances require a matching grid") {
  problems::InstanceSpec spec;
  spec.problem = "deriv2";
  spec.n = 24;
  spec.reg = "laplace2d";
  spec.nx = 6;
  spec.ny = 4;
  spec.epsilon = 0.0;
  auto inst = problems::make_instance(spec);
  CHECK(inst.b == inst.b_true);
  CHECK(inst.e_norm == 0.0);

  spec.ny = 5;  // 30 != 24
  CHECK_THROWS_AS((void)problems::make_instance(spec), ConfigError);

  problems::InstanceSpec bad;
  bad.problem = "unknown";
  CHECK_THROWS_AS((void)problems::make_instance(bad), ConfigError);
  problems::InstanceSpec badreg;
  badreg.reg = "unknown";
  CHECK_THROWS_AS((void)problems::make_instance(badreg), ConfigError);
}

TEST_CASE("the regularized system matrix is positive definite") {
  // rank condition: null(A'A) and null(M) intersect trivially for the pairs
  // shipped here, so A'A + alpha M is PD for alpha > 0
  problems::InstanceSpec spec;
  spec.n = 40;
  spec.epsilon = 0.0;
  auto inst = problems::make_instance(spec);
  GramOperator G(*inst.A, *inst.M, 1e-6);
  const Eigen::MatrixXd Gm = materialize(G);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gm);
  CHECK(es.eigenvalues()(0) > 0.0);
}

TEST_CASE("exported instances round-trip through the on-disk formats") {
  problems::InstanceSpec spec;
  spec.problem = "gauss1d";
  spec.n = 40;
  spec.sigma = 4.0;
  spec.reg = "tv";
  spec.beta = 1e-6;
  spec.epsilon = 1e-2;
  spec.seed = 21;
  auto inst = problems::make_instance(spec);

  const fs::path dir =
      fs::temp_directory_path() / "pgkb_test_problems_export";
  fs::remove_all(dir);
  problems::export_instance(inst, spec, dir.string());

  for (const char* f :
       {"A.mtx", "M.mtx", "L.mtx", "x_true.csv", "b_true.csv", "b.csv",
        "manifest.txt"})
    CHECK(fs::exists(dir / f));

  const auto man = io::read_manifest((dir / "manifest.txt").string());
  CHECK(man.at("problem") == "gauss1d");
  CHECK(man.at("n") == "40");
  CHECK(man.at("reg") == "tv");
  CHECK(man.at("sigma") == io::format_double(4.0));
  CHECK(man.at("beta") == io::format_double(1e-6));
  CHECK(man.at("epsilon") == io::format_double(1e-2));
  CHECK(man.at("seed") == "21");
  CHECK(std::stod(man.at("e_norm")) == doctest::Approx(inst.e_norm));

  // A and b round-trip bitwise thanks to shortest-exact formatting
  const Eigen::MatrixXd Aback =
      io::read_matrix_market((dir / "A.mtx").string());
  const Eigen::MatrixXd Aref = materialize(*inst.A);
  REQUIRE(Aback.rows() == 40);
  CHECK((Aback - Aref).cwiseAbs().maxCoeff() == 0.0);
  const Vec bback = io::read_vector_csv((dir / "b.csv").string());
  CHECK(bback == inst.b);

  fs::remove_all(dir);
}
