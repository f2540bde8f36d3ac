#include "pgkb/dense_core.hpp"

#include <cmath>
#include <limits>

#include "pgkb/errors.hpp"

namespace pgkb::dense {

double GsvdFactors::gamma(std::size_t i) const {
  if (i < r) return std::numeric_limits<double>::infinity();
  if (i < r + q) return sigma(static_cast<Eigen::Index>(i)) /
                        rho(static_cast<Eigen::Index>(i));
  return 0.0;
}

Matrix GsvdFactors::d_a() const {
  Matrix d = Matrix::Zero(U_A.rows(), Z.rows());
  const Eigen::Index lim = std::min(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < lim; ++i) d(i, i) = sigma(i);
  return d;
}

Matrix GsvdFactors::d_l() const {
  const Eigen::Index p = U_L.rows();
  const Eigen::Index n = Z.rows();
  Matrix d = Matrix::Zero(p, n);
  const Eigen::Index shift = p - n;  // row i-th entry sits at i + (p - n)
  for (Eigen::Index i = static_cast<Eigen::Index>(r); i < n; ++i)
    d(i + shift, i) = rho(i);
  return d;
}

GsvdFactors gsvd_pair(const Matrix& A, const Matrix& L) {
  const Eigen::Index m = A.rows();
  const Eigen::Index p = L.rows();
  const Eigen::Index n = A.cols();
  if (L.cols() != n) throw ConfigError("gsvd_pair: column count mismatch");
  if (m + p < n) throw ConfigError("gsvd_pair: need rows(A) + rows(L) >= n");

  Matrix S(m + p, n);
  S.topRows(m) = A;
  S.bottomRows(p) = L;

  Eigen::ColPivHouseholderQR<Matrix> qr(S);
  if (qr.rank() < n)
    throw NumericalError("gsvd_pair: stacked pair is column rank deficient");
  const Matrix Q = qr.householderQ() * Matrix::Identity(m + p, n);
  const Matrix R = qr.matrixR().topRows(n).triangularView<Eigen::Upper>();

  // CS decomposition of [Q1; Q2]: SVD the top block, read the complementary
  // sines off the bottom block.
  Eigen::JacobiSVD<Matrix> svd(Q.topRows(m),
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector c = Vector::Zero(n);
  c.head(svd.singularValues().size()) = svd.singularValues();
  const Matrix V = svd.matrixV();
  const Matrix T = Q.bottomRows(p) * V;  // columns are s_i * u_{L,i}
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = T.col(i).norm();

  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    scale = std::max({scale, c(i), s(i)});
  const double thresh = 1e-12 * scale;

  // c is decreasing and s increasing, so the blocks are a prefix and a
  // suffix. Strict comparison keeps threshold ties in the middle block.
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(n) && s(static_cast<Eigen::Index>(r)) < thresh) ++r;
  std::size_t tail = 0;
  while (tail < static_cast<std::size_t>(n) - r &&
         c(n - 1 - static_cast<Eigen::Index>(tail)) < thresh)
    ++tail;
  const std::size_t q = static_cast<std::size_t>(n) - r - tail;

  if (static_cast<Eigen::Index>(n - r) > p)
    throw NumericalError("gsvd_pair: partition needs rank(L) >= n - r");

  GsvdFactors g;
  g.r = r;
  g.q = q;
  g.sigma = Vector::Zero(n);
  g.rho = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (ui < r) {
      g.sigma(i) = 1.0;
      g.rho(i) = 0.0;
    } else if (ui < r + q) {
      g.sigma(i) = c(i);
      g.rho(i) = s(i);
    } else {
      g.sigma(i) = 0.0;
      g.rho(i) = 1.0;
    }
  }

  g.U_A = svd.matrixU();

  // U_L: normalized bottom-block columns for the middle and trailing blocks,
  // preceded by any orthonormal completion (the leading p + r - n columns
  // multiply the zero block of D_L).
  const Eigen::Index active = n - static_cast<Eigen::Index>(r);
  Matrix part(p, active);
  for (Eigen::Index i = 0; i < active; ++i) {
    const Eigen::Index col = static_cast<Eigen::Index>(r) + i;
    part.col(i) = T.col(col) / s(col);
  }
  g.U_L.resize(p, p);
  if (active == 0) {
    g.U_L = Matrix::Identity(p, p);
  } else if (active == p) {
    g.U_L = part;
  } else {
    Eigen::HouseholderQR<Matrix> cqr(part);
    const Matrix full = cqr.householderQ() * Matrix::Identity(p, p);
    g.U_L.leftCols(p - active) = full.rightCols(p - active);
    g.U_L.rightCols(active) = part;
  }

  // Z^{-1} = V' R P' comes straight from the factors; Z needs one
  // triangular solve.
  const auto P = qr.colsPermutation();
  g.Zinv = V.transpose() * R * P.transpose();
  const Matrix X = R.triangularView<Eigen::Upper>().solve(V);
  g.Z = P * X;
  return g;
}

Matrix sym_psd_sqrt(const Matrix& S, double tol) {
  if (S.rows() != S.cols()) throw ConfigError("sym_psd_sqrt: not square");
  const double scale = S.cwiseAbs().maxCoeff();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale))
    throw ConfigError("sym_psd_sqrt: input is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  const Vector& ev = es.eigenvalues();  // ascending
  const double emax = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  const double cut = tol * emax;
  if (ev(0) < -cut)
    throw NumericalError("sym_psd_sqrt: matrix has a negative eigenvalue");

  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) ++rank;

  Matrix C(rank, S.cols());
  // rows by decreasing eigenvalue
  for (Eigen::Index j = 0; j < rank; ++j) {
    const Eigen::Index i = ev.size() - 1 - j;
    C.row(j) = std::sqrt(ev(i)) * es.eigenvectors().col(i).transpose();
  }
  return C;
}

namespace {
double checked_eval(const std::function<double(double)>& f, double x) {
  const double v = f(x);
  if (!std::isfinite(v))
    throw NumericalError("minimize_scalar: objective returned a non-finite value");
  return v;
}
}  // namespace

MinimizeResult minimize_scalar(const std::function<double(double)>& f,
                               double lo, double hi, double rel_tol,
                               std::size_t max_evals) {
  if (!(hi > lo)) throw ConfigError("minimize_scalar: need lo < hi");
  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  const double tol1 = std::max(rel_tol * (hi - lo),
                               4.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(std::abs(lo), std::abs(hi)));
  const double tol2 = 2.0 * tol1;

  double a = lo, b = hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = checked_eval(f, x), fw = fx, fv = fx;
  std::size_t evals = 1;
  double d = 0.0, e = 0.0;

  while (evals < max_evals) {
    const double mid = 0.5 * (a + b);
    if (std::abs(x - mid) <= tol2 - 0.5 * (b - a)) break;

    bool take_golden = true;
    if (std::abs(e) > tol1) {
      // parabola through (v, fv), (w, fw), (x, fx)
      double rr = (x - w) * (fx - fv);
      double qq = (x - v) * (fx - fw);
      double pp = (x - v) * qq - (x - w) * rr;
      qq = 2.0 * (qq - rr);
      if (qq > 0.0) pp = -pp;
      qq = std::abs(qq);
      const double etemp = e;
      e = d;
      if (std::abs(pp) < std::abs(0.5 * qq * etemp) && pp > qq * (a - x) &&
          pp < qq * (b - x)) {
        d = pp / qq;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (mid > x) ? tol1 : -tol1;
        take_golden = false;
      }
    }
    if (take_golden) {
      e = (x < mid) ? b - x : a - x;
      d = golden * e;
    }

    const double u =
        (std::abs(d) >= tol1) ? x + d : x + ((d > 0.0) ? tol1 : -tol1);
    const double fu = checked_eval(f, u);
    ++evals;

    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx, evals};
}

}  // namespace pgkb::dense
