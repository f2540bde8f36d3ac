#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pgkb/operators.hpp"
#include "pgkb/vec.hpp"

namespace pgkb {

// Lower bidiagonal projection B_k: alpha_1..alpha_k on the diagonal,
// beta_2..beta_{k+1} on the subdiagonal. When a beta breakdown ends the
// process the final beta is absent and the matrix is square.
struct Bidiagonal {
  double beta1 = 0.0;
  std::vector<double> alpha;  // alpha_1..alpha_k
  std::vector<double> beta;   // beta_2..beta_{k+1} (possibly one short)

  std::size_t k() const { return alpha.size(); }
  Eigen::MatrixXd matrix() const;  // (k+1) x k, or k x k after breakdown
};

struct PgkbOptions {
  // Breakdown threshold, relative to max(alpha_1, beta_1).
  double breakdown_rel = 1e-14;
};

// State of the preconditioned bidiagonalization of (A, G = A'A + alpha*M).
// U is orthonormal in the Euclidean inner product, W in the G-inner product;
// GW caches G*w_j so reorthogonalization in the G-metric costs plain dots.
struct PgkbState {
  const LinearOperator* A = nullptr;
  const LinearOperator* M = nullptr;
  double alpha = 0.0;
  std::unique_ptr<GramOperator> G;
  InnerSolver* inner = nullptr;

  double beta1 = 0.0;
  std::vector<Vec> U;           // u_1..u_{k or k+1}
  std::vector<Vec> W;           // w_1..w_k
  std::vector<Vec> GW;          // G w_1..G w_k
  std::vector<double> alphas;   // alpha_1..alpha_k
  std::vector<double> betas;    // beta_2..beta_{k+1} as produced
  bool breakdown = false;
  std::string breakdown_reason;
  double breakdown_tol = 0.0;
  PgkbOptions opts;

  std::size_t k() const { return W.size(); }
};

// Two-pass modified Gram-Schmidt against an orthonormal basis. When
// gram_images is given the basis is orthonormal in the metric it encodes
// (gram_images[j] = metric * basis[j]) and coefficients become plain dots.
void reorth_against(Vec& v, const std::vector<Vec>& basis,
                    const std::vector<Vec>* gram_images = nullptr);

// First step: beta_1 = ||b||, u_1 = b / beta_1, solve G s = A'u_1,
// alpha_1 = (s'A'u_1)^{1/2}, w_1 = s / alpha_1.
PgkbState pgkb_start(const LinearOperator& A, const LinearOperator& M,
                     double alpha, const Vec& b, InnerSolver& inner,
                     PgkbOptions opts = {});

// One expansion step; returns false (and freezes the state) on breakdown.
// A fresh G application renormalizes w_{k+1} after reorthogonalization.
bool pgkb_extend(PgkbState& st);

// Leading k columns of the projection.
Bidiagonal bidiagonal(const PgkbState& st, std::size_t k);

// Binary checkpoint (versioned header, little-endian 64-bit floats) for test
// regression. Loading restores scalars and vectors only; operator bindings
// stay with the caller.
void save_checkpoint(const std::string& path, const PgkbState& st);
void load_checkpoint(const std::string& path, PgkbState& st);

}  // namespace pgkb
