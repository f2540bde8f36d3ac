#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "pgkb/operators.hpp"
#include "pgkb/vec.hpp"

// Test-problem generators: two 1-D Fredholm discretizations with known true
// signals, difference-based regularizers (plain, TV-linearized, 2-D
// Laplacian), and seeded noise injection with exact relative level.

namespace pgkb::problems {

// Second-derivative problem: A_ij = (1/n) K(s_i, t_j) on the midpoint grid
// s = t = (i - 1/2)/n, with K(s,t) = s(t-1) for s < t and t(s-1) otherwise;
// the true signal is x(t) = t.
Eigen::MatrixXd deriv2_matrix(std::size_t n);
Vec deriv2_xtrue(std::size_t n);

// Gaussian convolution with zero boundary: symmetric Toeplitz kernel
// g_k = exp(-k^2/(2 sigma^2)) / (sqrt(2 pi) sigma) in index units.
Vec gauss1d_kernel(std::size_t n, double sigma);
// Piecewise-constant signal: levels {0, 1, 0.4, 0.9, 0} switching at index
// fractions {0.1, 0.25, 0.5, 0.75, 0.9}, last level continued to the end.
Vec gauss1d_xtrue(std::size_t n);

// Forward-difference matrix, (n-1) x n, rows (-1, 1).
Eigen::MatrixXd first_difference(std::size_t n);

// TV linearization weights at x_ref: w_i = 1/sqrt((D x_ref)_i^2 + beta^2).
Vec tv_weights(const Vec& x_ref, double beta);

// L = diag(sqrt(w)) D, so that L'L equals the weighted difference Gram.
Eigen::MatrixXd weighted_first_difference(const Vec& w);

// n standard-normal draws via Box-Muller on mt19937_64; fixed algorithm so
// the same seed reproduces the same vector on any platform.
Vec gaussian_vector(std::size_t n, std::uint64_t seed);

// b = b_true + e with e = epsilon * ||b_true|| * g/||g||; returns (b, e_norm)
// where e_norm = epsilon * ||b_true|| exactly.
std::pair<Vec, double> add_noise(const Vec& b_true, double epsilon,
                                 std::uint64_t seed);

struct ProblemInstance {
  std::unique_ptr<LinearOperator> A;
  std::unique_ptr<LinearOperator> M;
  std::optional<Eigen::MatrixXd> L;  // factor with M = L'L, when available
  Vec x_true;
  Vec b_true;
  Vec b;
  double e_norm = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct InstanceSpec {
  std::string problem = "deriv2";  // deriv2 | gauss1d
  std::size_t n = 200;
  double sigma = 10.0;        // gauss1d kernel width, index units
  std::string reg = "firstdiff";  // firstdiff | tv | identity | laplace2d
  double beta = 1e-6;         // tv smoothing parameter
  std::size_t nx = 0, ny = 0;  // laplace2d grid (nx*ny must equal n)
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

ProblemInstance make_instance(const InstanceSpec& spec);

// Writes A.mtx, M.mtx, optional L.mtx, x_true/b_true/b CSVs and
// manifest.txt into dir (created if missing).
void export_instance(const ProblemInstance& inst, const InstanceSpec& spec,
                     const std::string& dir);

}  // namespace pgkb::problems
