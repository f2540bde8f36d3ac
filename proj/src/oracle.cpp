#include "pgkb/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>

#include "pgkb/errors.hpp"

namespace pgkb::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Eigen::VectorXd tikhonov_direct(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& M,
                                const Eigen::VectorXd& b, double lambda) {
  if (A.rows() != b.size() || A.cols() != M.rows() || M.rows() != M.cols())
    throw ConfigError("tikhonov_direct: dimension mismatch");
  if (!(lambda > 0.0)) throw ConfigError("tikhonov_direct: lambda must be > 0");
  Eigen::MatrixXd G = A.transpose() * A + lambda * M;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw NumericalError("tikhonov_direct: system matrix is not positive definite");
  return llt.solve(A.transpose() * b);
}

Eigen::VectorXd tikhonov_filter_factors(const dense::GsvdFactors& g,
                                        double lambda) {
  const auto n = static_cast<std::size_t>(g.sigma.size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (i < g.r) {
      f[static_cast<Eigen::Index>(i)] = 1.0;
    } else if (i < g.r + g.q) {
      const double ga = g.gamma(i);
      const double g2 = ga * ga;
      f[static_cast<Eigen::Index>(i)] = g2 / (g2 + lambda);
    }
  }
  return f;
}

Eigen::VectorXd filtered_expansion(const dense::GsvdFactors& g,
                                   const Eigen::VectorXd& b,
                                   const Eigen::VectorXd& f) {
  const Eigen::Index n = g.Z.rows();
  if (g.U_A.rows() != b.size())
    throw ConfigError("filtered_expansion: right-hand side size mismatch");
  if (static_cast<std::size_t>(f.size()) < g.r + g.q)
    throw ConfigError("filtered_expansion: filter vector too short");
  Eigen::VectorXd coef = g.U_A.transpose() * b;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < g.r + g.q; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    x += f[ii] * (coef[ii] / g.sigma[ii]) * g.Z.col(ii);
  }
  return x;
}

Eigen::VectorXd tgsvd_solution(const dense::GsvdFactors& g,
                               const Eigen::VectorXd& b, std::size_t k) {
  if (k > g.r + g.q)
    throw ConfigError("tgsvd_solution: truncation index exceeds rank");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(g.sigma.size());
  for (std::size_t i = 0; i < k; ++i) f[static_cast<Eigen::Index>(i)] = 1.0;
  return filtered_expansion(g, b, f);
}

SpectrumReport generalized_spectrum(const dense::GsvdFactors& g, double alpha) {
  if (!(alpha > 0.0))
    throw ConfigError("generalized_spectrum: alpha must be > 0");
  const Eigen::Index n = g.sigma.size();
  SpectrumReport rep;
  rep.r = g.r;
  rep.q = g.q;
  rep.xi = Eigen::VectorXd::Zero(n);
  rep.d_alpha = Eigen::VectorXd::Zero(n);
  rep.gamma = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double s = g.sigma[i], rho = g.rho[i];
    rep.d_alpha[i] = s * s + alpha * rho * rho;
    if (ui < g.r) {
      rep.xi[i] = 1.0;
      rep.gamma[i] = kInf;
    } else if (ui < g.r + g.q) {
      const double ga = g.gamma(ui);
      rep.gamma[i] = ga;
      rep.xi[i] = ga * ga / (ga * ga + alpha);
    }
  }
  return rep;
}

FilterReport filter_factors(const Eigen::MatrixXd& Bk,
                            const SpectrumReport& spectrum) {
  FilterReport rep;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bk);
  rep.theta = svd.singularValues();
  for (Eigen::Index j = 0; j < rep.theta.size(); ++j)
    if (!(rep.theta[j] > 0.0))
      throw NumericalError("filter_factors: projected factor is rank deficient");
  rep.f = Eigen::VectorXd::Zero(spectrum.xi.size());
  for (Eigen::Index i = 0; i < spectrum.xi.size(); ++i) {
    double prod = 1.0;
    for (Eigen::Index j = 0; j < rep.theta.size(); ++j) {
      const double t2 = rep.theta[j] * rep.theta[j];
      prod *= (t2 - spectrum.xi[i]) / t2;
    }
    rep.f[i] = 1.0 - prod;
  }
  return rep;
}

namespace {

// Two-pass modified Gram-Schmidt of v against the leading k columns of Q.
void mgs_twice(const Eigen::MatrixXd& Q, Eigen::Index k, Eigen::VectorXd& v) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < k; ++j)
      v -= (Q.col(j).dot(v)) * Q.col(j);
}

}  // namespace

Eigen::MatrixXd krylov_subspace(const Eigen::MatrixXd& G,
                                const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b, std::size_t k) {
  if (G.rows() != G.cols() || G.rows() != A.cols() || A.rows() != b.size())
    throw ConfigError("krylov_subspace: dimension mismatch");
  if (k == 0) throw ConfigError("krylov_subspace: k must be >= 1");
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw NumericalError("krylov_subspace: G is not positive definite");

  const Eigen::Index n = G.rows();
  Eigen::MatrixXd Q(n, static_cast<Eigen::Index>(k));
  Eigen::VectorXd v = llt.solve(A.transpose() * b);
  const double scale = v.norm();
  if (!(scale > 0.0))
    throw NumericalError("krylov_subspace: zero starting vector");

  Eigen::Index cols = 0;
  while (cols < static_cast<Eigen::Index>(k)) {
    const double before = v.norm();
    mgs_twice(Q, cols, v);
    const double after = v.norm();
    if (!(after > 1e-12 * std::max(before, scale))) break;  // rank reached
    Q.col(cols) = v / after;
    ++cols;
    if (cols < static_cast<Eigen::Index>(k))
      v = llt.solve(A.transpose() * (A * Q.col(cols - 1)));
  }
  return Q.leftCols(cols);
}

Eigen::MatrixXd krylov_subspace_gsvd(const dense::GsvdFactors& g, double alpha,
                                     const Eigen::VectorXd& b, std::size_t k) {
  if (!(alpha > 0.0))
    throw ConfigError("krylov_subspace_gsvd: alpha must be > 0");
  if (k == 0) throw ConfigError("krylov_subspace_gsvd: k must be >= 1");
  if (g.U_A.rows() != b.size())
    throw ConfigError("krylov_subspace_gsvd: right-hand side size mismatch");
  const Eigen::Index n = g.Z.rows();

  Eigen::VectorXd s2(n), dinv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = g.sigma[i], rho = g.rho[i];
    s2[i] = s * s;
    dinv[i] = 1.0 / (s2[i] + alpha * rho * rho);
  }
  // Coordinates of G^{-1} A' b, then repeated application of
  // D_alpha^{-1} D_A' D_A between powers.
  const Eigen::VectorXd ub = g.U_A.transpose() * b;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < std::min(ub.size(), n); ++i)
    c[i] = dinv[i] * g.sigma[i] * ub[i];
  Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    raw.col(static_cast<Eigen::Index>(i)) = g.Z * c;
    c = dinv.cwiseProduct(s2.cwiseProduct(c));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(raw);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, rank);
  return Q;
}

double subspace_distance(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2,
                         const Eigen::MatrixXd* metric) {
  if (B1.rows() != B2.rows() || B1.cols() != B2.cols())
    throw ConfigError("subspace_distance: bases must have equal shape");
  if (B1.cols() == 0) throw ConfigError("subspace_distance: empty bases");
  Eigen::MatrixXd C;
  if (metric == nullptr)
    C = B1.transpose() * B2;
  else
    C = B1.transpose() * (*metric) * B2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  double smin = svd.singularValues().minCoeff();
  smin = std::min(1.0, std::max(-1.0, smin));
  return std::acos(smin);
}

}  // namespace pgkb::oracle
