#include "pgkb/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace pgkb::kernels {

namespace {

std::atomic<bool>& parallel_flag() {
  static std::atomic<bool> flag{[] {
    const char* env = std::getenv("PGKB_SERIAL");
    return !(env && env[0] == '1');
  }()};
  return flag;
}

using idx = long long;

// Each element formula is shared between the serial and OpenMP variants so
// that the only difference is who computes which output element.

// Dots use eight fixed-stride partial sums combined in a fixed order:
// results are run-to-run and serial/parallel deterministic (the grouping is
// part of the definition), while the independent chains let the compiler
// vectorize instead of serializing on FMA latency.
inline double combine_lanes(const double lane[8], double tail) {
  return (((lane[0] + lane[1]) + (lane[2] + lane[3])) +
          ((lane[4] + lane[5]) + (lane[6] + lane[7]))) +
         tail;
}

inline double matvec_row(const double* row, std::size_t n, const double* x) {
  double lane[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (std::size_t l = 0; l < 8; ++l) lane[l] += row[j + l] * x[j + l];
  double tail = 0.0;
  for (; j < n; ++j) tail += row[j] * x[j];
  return combine_lanes(lane, tail);
}

inline double toeplitz_row(const double* g, std::size_t n, std::size_t i,
                           const double* x) {
  // j < i uses kernel index i-j, j >= i uses j-i; both halves are strided
  // lane sums so the kernel/vector streams stay contiguous.
  double lane[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 8 <= i; j += 8)
    for (std::size_t l = 0; l < 8; ++l)
      lane[l] += g[i - (j + l)] * x[j + l];
  double tail = 0.0;
  for (; j < i; ++j) tail += g[i - j] * x[j];
  const double head = combine_lanes(lane, tail);

  for (std::size_t l = 0; l < 8; ++l) lane[l] = 0.0;
  for (j = i; j + 8 <= n; j += 8)
    for (std::size_t l = 0; l < 8; ++l)
      lane[l] += g[j + l - i] * x[j + l];
  tail = 0.0;
  for (; j < n; ++j) tail += g[j - i] * x[j];
  return head + combine_lanes(lane, tail);
}

inline double diff_gram_at(const double* w, std::size_t n, std::size_t i,
                           const double* x) {
  double acc = 0.0;
  if (i > 0) acc += w[i - 1] * (x[i] - x[i - 1]);
  if (i + 1 < n) acc -= w[i] * (x[i + 1] - x[i]);
  return acc;
}

inline double laplacian_at(std::size_t nx, std::size_t ny, std::size_t i,
                           std::size_t j, const double* x) {
  const double c = x[j * nx + i];
  double acc = 0.0;
  if (i > 0) acc += c - x[j * nx + i - 1];
  if (i + 1 < nx) acc += c - x[j * nx + i + 1];
  if (j > 0) acc += c - x[(j - 1) * nx + i];
  if (j + 1 < ny) acc += c - x[(j + 1) * nx + i];
  return acc;
}

}  // namespace

bool use_parallel() { return parallel_flag().load(std::memory_order_relaxed); }
void set_parallel(bool on) {
  parallel_flag().store(on, std::memory_order_relaxed);
}

namespace serial {

void dense_matvec(const double* a, std::size_t m, std::size_t n,
                  const double* x, double* y) {
  for (std::size_t i = 0; i < m; ++i) y[i] = matvec_row(a + i * n, n, x);
}

void toeplitz_symm(const double* g, std::size_t n, const double* x,
                   double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = toeplitz_row(g, n, i, x);
}

void weighted_diff_gram(const double* w, std::size_t n, const double* x,
                        double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = diff_gram_at(w, n, i, x);
}

void laplacian2d(std::size_t nx, std::size_t ny, const double* x, double* y) {
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i)
      y[j * nx + i] = laplacian_at(nx, ny, i, j, x);
}

}  // namespace serial

namespace par {

void dense_matvec(const double* a, std::size_t m, std::size_t n,
                  const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (idx i = 0; i < static_cast<idx>(m); ++i)
    y[i] = matvec_row(a + static_cast<std::size_t>(i) * n, n, x);
}

void toeplitz_symm(const double* g, std::size_t n, const double* x,
                   double* y) {
#pragma omp parallel for schedule(static)
  for (idx i = 0; i < static_cast<idx>(n); ++i)
    y[i] = toeplitz_row(g, n, static_cast<std::size_t>(i), x);
}

void weighted_diff_gram(const double* w, std::size_t n, const double* x,
                        double* y) {
#pragma omp parallel for schedule(static)
  for (idx i = 0; i < static_cast<idx>(n); ++i)
    y[i] = diff_gram_at(w, n, static_cast<std::size_t>(i), x);
}

void laplacian2d(std::size_t nx, std::size_t ny, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (idx j = 0; j < static_cast<idx>(ny); ++j)
    for (std::size_t i = 0; i < nx; ++i)
      y[static_cast<std::size_t>(j) * nx + i] =
          laplacian_at(nx, ny, i, static_cast<std::size_t>(j), x);
}

}  // namespace par

void dense_matvec(const double* a, std::size_t m, std::size_t n,
                  const double* x, double* y) {
  use_parallel() ? par::dense_matvec(a, m, n, x, y)
                 : serial::dense_matvec(a, m, n, x, y);
}

void toeplitz_symm(const double* g, std::size_t n, const double* x,
                   double* y) {
  use_parallel() ? par::toeplitz_symm(g, n, x, y)
                 : serial::toeplitz_symm(g, n, x, y);
}

void weighted_diff_gram(const double* w, std::size_t n, const double* x,
                        double* y) {
  use_parallel() ? par::weighted_diff_gram(w, n, x, y)
                 : serial::weighted_diff_gram(w, n, x, y);
}

void laplacian2d(std::size_t nx, std::size_t ny, const double* x, double* y) {
  use_parallel() ? par::laplacian2d(nx, ny, x, y)
                 : serial::laplacian2d(nx, ny, x, y);
}

}  // namespace pgkb::kernels
