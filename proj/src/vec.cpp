#include "pgkb/vec.hpp"

#include <cmath>

#include "pgkb/errors.hpp"

namespace pgkb {

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double nrm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ConfigError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scal(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

Vec scaled(const Vec& x, double a) {
  Vec y(x);
  scal(a, y);
  return y;
}

}  // namespace pgkb
