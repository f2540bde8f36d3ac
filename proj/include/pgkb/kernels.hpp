#pragma once

#include <cstddef>

// Hot loops behind the matrix-free operators. Every kernel comes in a serial
// reference version and an OpenMP version; the OpenMP loops split work by
// output element only, and each output element is accumulated in the same
// order as the serial code, so the two variants produce bitwise-identical
// results for any thread count. Tests pin them against each other and
// bench/bench_kernels.cpp compares throughput.

namespace pgkb::kernels {

// Dispatch switch for the wrappers below. Defaults to on; the environment
// variable PGKB_SERIAL=1 forces the serial path.
bool use_parallel();
void set_parallel(bool on);

namespace serial {
// y = A x with A row-major m x n.
void dense_matvec(const double* a, std::size_t m, std::size_t n,
                  const double* x, double* y);
// y_i = sum_j g[|i-j|] x_j (symmetric Toeplitz, zero boundary).
void toeplitz_symm(const double* g, std::size_t n, const double* x, double* y);
// y = D' diag(w) D x with D the (n-1) x n forward-difference matrix.
void weighted_diff_gram(const double* w, std::size_t n, const double* x,
                        double* y);
// 5-point negative Laplacian with Neumann closure on an nx x ny grid,
// x index fastest.
void laplacian2d(std::size_t nx, std::size_t ny, const double* x, double* y);
}  // namespace serial

namespace par {
void dense_matvec(const double* a, std::size_t m, std::size_t n,
                  const double* x, double* y);
void toeplitz_symm(const double* g, std::size_t n, const double* x, double* y);
void weighted_diff_gram(const double* w, std::size_t n, const double* x,
                        double* y);
void laplacian2d(std::size_t nx, std::size_t ny, const double* x, double* y);
}  // namespace par

// Dispatching wrappers used by the operators.
void dense_matvec(const double* a, std::size_t m, std::size_t n,
                  const double* x, double* y);
void toeplitz_symm(const double* g, std::size_t n, const double* x, double* y);
void weighted_diff_gram(const double* w, std::size_t n, const double* x,
                        double* y);
void laplacian2d(std::size_t nx, std::size_t ny, const double* x, double* y);

}  // namespace pgkb::kernels
