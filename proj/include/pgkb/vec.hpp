#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pgkb {

using Vec = std::vector<double>;

// BLAS-1 helpers. Reductions are deliberately serial: solver output must not
// depend on the thread count, so all dot products and norms accumulate in a
// fixed order. The parallel kernels in kernels.hpp only ever split work by
// output element.
double dot(std::span<const double> x, std::span<const double> y);
double nrm2(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);  // y += a*x
void scal(double a, std::span<double> x);

Vec scaled(const Vec& x, double a);

}  // namespace pgkb
