#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>

namespace pgkb::dense {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// GSVD of a pair {A (m x n), L (p x n)} with [A; L] of full column rank:
//
//   A = U_A * D_A * Z^{-1},   L = U_L * D_L * Z^{-1}
//
// U_A, U_L orthogonal, Z invertible. With the column partition
// (r, q, n-r-q), D_A carries 1 on the leading block, sigma_i on the middle
// block and 0 on the trailing block; D_L carries 0, rho_i and 1. On the
// middle block sigma_i^2 + rho_i^2 = 1 with sigma decreasing and rho
// increasing. gamma_i = sigma_i / rho_i are the generalized singular values
// (+inf on the leading block, 0 on the trailing one).
struct GsvdFactors {
  Matrix U_A;    // m x m
  Matrix U_L;    // p x p
  Matrix Z;      // n x n
  Matrix Zinv;   // n x n, formed from the factorization, not by inversion
  Vector sigma;  // length n; exactly 1 / 0 on the outer blocks
  Vector rho;    // length n; exactly 0 / 1 on the outer blocks
  std::size_t r = 0;
  std::size_t q = 0;

  double gamma(std::size_t i) const;
  Matrix d_a() const;  // materialized m x n
  Matrix d_l() const;  // materialized p x n
};

// Economy QR of the stacked pair followed by a CS-style extraction from the
// SVD of the top block. Block sizes use the relative threshold
// 1e-12 * max(sigma, rho); ties go to the middle block.
GsvdFactors gsvd_pair(const Matrix& A, const Matrix& L);

// Compact factor C (rank x n, rows ordered by decreasing eigenvalue) with
// C'C = S for symmetric PSD S. Eigenvalues in [-tol, tol] * max|eig| are
// truncated; anything below that raises NumericalError.
Matrix sym_psd_sqrt(const Matrix& S, double tol = 1e-12);

struct MinimizeResult {
  double x = 0;
  double value = 0;
  std::size_t evaluations = 0;
};

// Golden section with parabolic acceleration (Brent) on [lo, hi]. Converges
// to a boundary for monotone f; the returned x is within
// ~rel_tol * (hi - lo) of the minimizer. Non-finite objective values raise
// NumericalError.
MinimizeResult minimize_scalar(const std::function<double(double)>& f,
                               double lo, double hi, double rel_tol = 1e-10,
                               std::size_t max_evals = 200);

}  // namespace pgkb::dense
