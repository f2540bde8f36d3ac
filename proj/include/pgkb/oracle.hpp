#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "pgkb/dense_core.hpp"

// Dense reference implementations used to cross-check the matrix-free
// solvers: direct Tikhonov solves, GSVD expansions, generalized spectra,
// iteration filter factors and explicit preconditioned Krylov bases.

namespace pgkb::oracle {

// x = (A'A + lambda M)^{-1} A'b; M symmetric PSD, lambda > 0, and the pair
// must satisfy the rank condition so the system matrix is positive definite.
Eigen::VectorXd tikhonov_direct(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& M,
                                const Eigen::VectorXd& b, double lambda);

// Filter factors of standard-form-equivalent Tikhonov in GSVD coordinates:
// 1 on the leading block, gamma^2/(gamma^2 + lambda) on the middle block, 0
// past the rank.
Eigen::VectorXd tikhonov_filter_factors(const dense::GsvdFactors& g,
                                        double lambda);

// x = sum_i f_i (u_i'b / sigma_i) z_i with sigma_i = 1 on the leading block;
// entries past r + q are ignored (their sigma vanishes).
Eigen::VectorXd filtered_expansion(const dense::GsvdFactors& g,
                                   const Eigen::VectorXd& b,
                                   const Eigen::VectorXd& f);

// Truncated GSVD: keep the first k coefficients (k <= r + q).
Eigen::VectorXd tgsvd_solution(const dense::GsvdFactors& g,
                               const Eigen::VectorXd& b, std::size_t k);

struct SpectrumReport {
  Eigen::VectorXd xi;       // generalized eigenvalues of A'A z = xi G z
  Eigen::VectorXd d_alpha;  // diagonal of Z' G Z
  Eigen::VectorXd gamma;    // generalized singular values (inf on leading block)
  std::size_t r = 0, q = 0;
};

// Spectrum of the regularized pair at a given alpha:
// xi = (1, ..., gamma^2/(gamma^2 + alpha), ..., 0) and
// d_alpha = (1, ..., sigma^2 + alpha rho^2, ..., alpha).
SpectrumReport generalized_spectrum(const dense::GsvdFactors& g, double alpha);

struct FilterReport {
  Eigen::VectorXd theta;  // singular values of B_k, descending
  Eigen::VectorXd f;      // iteration filter factors per xi
};

// f_i = 1 - prod_j (theta_j^2 - xi_i) / theta_j^2 for the projected factor
// B_k; requires distinct positive theta.
FilterReport filter_factors(const Eigen::MatrixXd& Bk,
                            const SpectrumReport& spectrum);

// Orthonormal basis of K_k(G^{-1}A'A, G^{-1}A'b), built power by power with
// reorthonormalization at every step; returns n x k' with k' <= k the
// achieved rank.
Eigen::MatrixXd krylov_subspace(const Eigen::MatrixXd& G,
                                const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b, std::size_t k);

// The same subspace expressed through GSVD coordinates,
// span{ Z D_alpha^{-1} (D_A' D_A D_alpha^{-1})^i D_A' U_A' b }.
Eigen::MatrixXd krylov_subspace_gsvd(const dense::GsvdFactors& g, double alpha,
                                     const Eigen::VectorXd& b, std::size_t k);

// Largest principal angle (radians) between equal-dimension subspaces given
// by orthonormal bases; metric = nullptr means the Euclidean inner product,
// otherwise the bases must be orthonormal in the given SPD metric.
double subspace_distance(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2,
                         const Eigen::MatrixXd* metric = nullptr);

}  // namespace pgkb::oracle
