#include "pgkb/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "pgkb/errors.hpp"
#include "pgkb/io.hpp"

namespace pgkb::problems {

Eigen::MatrixXd deriv2_matrix(std::size_t n) {
  if (n < 4) throw ConfigError("deriv2: n must be >= 4");
  const auto ni = static_cast<Eigen::Index>(n);
  const double h = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd A(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * h;
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double t = (static_cast<double>(j) + 0.5) * h;
      const double k = s < t ? s * (t - 1.0) : t * (s - 1.0);
      A(i, j) = h * k;
    }
  }
  return A;
}

Vec deriv2_xtrue(std::size_t n) {
  Vec x(n);
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j)
    x[j] = (static_cast<double>(j) + 0.5) * h;
  return x;
}

Vec gauss1d_kernel(std::size_t n, double sigma) {
  if (n < 16) throw ConfigError("gauss1d: n must be >= 16");
  if (!(sigma > 0.0)) throw ConfigError("gauss1d: sigma must be > 0");
  Vec g(n);
  const double scale = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = static_cast<double>(k) / sigma;
    g[k] = scale * std::exp(-0.5 * d * d);
  }
  return g;
}

Vec gauss1d_xtrue(std::size_t n) {
  static constexpr std::array<double, 5> kLevels = {0.0, 1.0, 0.4, 0.9, 0.0};
  static constexpr std::array<double, 5> kFracs = {0.1, 0.25, 0.5, 0.75, 0.9};
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    while (j < kFracs.size() &&
           static_cast<double>(i) >= kFracs[j] * static_cast<double>(n))
      ++j;
    x[i] = kLevels[std::min(j, kLevels.size() - 1)];
  }
  return x;
}

Eigen::MatrixXd first_difference(std::size_t n) {
  if (n < 2) throw ConfigError("first_difference: n must be >= 2");
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(ni - 1, ni);
  for (Eigen::Index i = 0; i + 1 < ni; ++i) {
    L(i, i) = -1.0;
    L(i, i + 1) = 1.0;
  }
  return L;
}

Vec tv_weights(const Vec& x_ref, double beta) {
  if (x_ref.size() < 2) throw ConfigError("tv_weights: need at least 2 points");
  if (!(beta > 0.0)) throw ConfigError("tv_weights: beta must be > 0");
  Vec w(x_ref.size() - 1);
  for (std::size_t i = 0; i + 1 < x_ref.size(); ++i) {
    const double d = x_ref[i + 1] - x_ref[i];
    w[i] = 1.0 / std::sqrt(d * d + beta * beta);
  }
  return w;
}

Eigen::MatrixXd weighted_first_difference(const Vec& w) {
  const std::size_t n = w.size() + 1;
  Eigen::MatrixXd L = first_difference(n);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0))
      throw ConfigError("weighted_first_difference: weights must be >= 0");
    L.row(static_cast<Eigen::Index>(i)) *= std::sqrt(w[i]);
  }
  return L;
}

Vec gaussian_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Top 53 bits, shifted into (0, 1] so log() stays finite.
  auto u01 = [&rng]() {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
  };
  Vec g(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = u01();
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    g[i] = r * std::cos(a);
    if (i + 1 < n) g[i + 1] = r * std::sin(a);
  }
  return g;
}

std::pair<Vec, double> add_noise(const Vec& b_true, double epsilon,
                                 std::uint64_t seed) {
  if (epsilon < 0.0) throw ConfigError("add_noise: epsilon must be >= 0");
  if (epsilon == 0.0) return {b_true, 0.0};
  const double bn = nrm2(b_true);
  Vec g = gaussian_vector(b_true.size(), seed);
  const double gn = nrm2(g);
  if (!(gn > 0.0)) throw NumericalError("add_noise: zero noise draw");
  const double e_norm = epsilon * bn;
  Vec b = b_true;
  axpy(e_norm / gn, g, b);
  return {b, e_norm};
}

namespace {

Vec ones(std::size_t n) { return Vec(n, 1.0); }

}  // namespace

ProblemInstance make_instance(const InstanceSpec& spec) {
  ProblemInstance inst;
  inst.epsilon = spec.epsilon;
  inst.seed = spec.seed;

  if (spec.problem == "deriv2") {
    inst.A = std::make_unique<DenseOperator>(deriv2_matrix(spec.n));
    inst.x_true = deriv2_xtrue(spec.n);
  } else if (spec.problem == "gauss1d") {
    inst.A = std::make_unique<ToeplitzOperator>(
        gauss1d_kernel(spec.n, spec.sigma));
    inst.x_true = gauss1d_xtrue(spec.n);
  } else {
    throw ConfigError("unknown problem '" + spec.problem + "'");
  }

  if (spec.reg == "firstdiff") {
    inst.M = std::make_unique<WeightedDiffGramOperator>(ones(spec.n - 1));
    inst.L = first_difference(spec.n);
  } else if (spec.reg == "tv") {
    Vec w = tv_weights(inst.x_true, spec.beta);
    inst.L = weighted_first_difference(w);
    inst.M = std::make_unique<WeightedDiffGramOperator>(std::move(w));
  } else if (spec.reg == "identity") {
    inst.M = std::make_unique<IdentityOperator>(spec.n);
    inst.L = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(spec.n),
                                       static_cast<Eigen::Index>(spec.n));
  } else if (spec.reg == "laplace2d") {
    if (spec.nx * spec.ny != spec.n)
      throw ConfigError("laplace2d: nx*ny must equal n");
    inst.M = std::make_unique<Laplacian2dOperator>(spec.nx, spec.ny);
  } else {
    throw ConfigError("unknown regularizer '" + spec.reg + "'");
  }

  inst.b_true = inst.A->apply(inst.x_true);
  auto [b, e_norm] = add_noise(inst.b_true, spec.epsilon, spec.seed);
  inst.b = std::move(b);
  inst.e_norm = e_norm;
  inst.A->reset_counters();
  return inst;
}

void export_instance(const ProblemInstance& inst, const InstanceSpec& spec,
                     const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&dir](const char* name) {
    return (fs::path(dir) / name).string();
  };

  io::write_matrix_market(path("A.mtx"), materialize(*inst.A));
  io::write_matrix_market_coordinate(path("M.mtx"), materialize(*inst.M));
  if (inst.L) io::write_matrix_market_coordinate(path("L.mtx"), *inst.L);
  io::write_vector_csv(path("x_true.csv"), inst.x_true, "x_true");
  io::write_vector_csv(path("b_true.csv"), inst.b_true, "b_true");
  io::write_vector_csv(path("b.csv"), inst.b, "b");

  std::vector<std::pair<std::string, std::string>> man;
  man.emplace_back("problem", spec.problem);
  man.emplace_back("n", std::to_string(spec.n));
  man.emplace_back("reg", spec.reg);
  if (spec.problem == "gauss1d")
    man.emplace_back("sigma", io::format_double(spec.sigma));
  if (spec.reg == "tv") man.emplace_back("beta", io::format_double(spec.beta));
  if (spec.reg == "laplace2d") {
    man.emplace_back("nx", std::to_string(spec.nx));
    man.emplace_back("ny", std::to_string(spec.ny));
  }
  man.emplace_back("epsilon", io::format_double(spec.epsilon));
  man.emplace_back("seed", std::to_string(spec.seed));
  man.emplace_back("e_norm", io::format_double(inst.e_norm));
  io::write_manifest(path("manifest.txt"), man);
}

}  // namespace pgkb::problems
