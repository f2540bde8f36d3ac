#include "pgkb/operators.hpp"

#include <algorithm>
#include <cmath>

#include "pgkb/errors.hpp"
#include "pgkb/kernels.hpp"

namespace pgkb {

void LinearOperator::apply(std::span<const double> x,
                           std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_)
    throw ConfigError("apply: dimension mismatch");
  do_apply(x.data(), y.data());
  fwd_.fetch_add(1, std::memory_order_relaxed);
}

void LinearOperator::apply_adjoint(std::span<const double> x,
                                   std::span<double> y) const {
  if (x.size() != rows_ || y.size() != cols_)
    throw ConfigError("apply_adjoint: dimension mismatch");
  do_adjoint(x.data(), y.data());
  adj_.fetch_add(1, std::memory_order_relaxed);
}

Vec LinearOperator::apply(const Vec& x) const {
  Vec y(rows_);
  apply(std::span<const double>(x), std::span<double>(y));
  return y;
}

Vec LinearOperator::apply_adjoint(const Vec& x) const {
  Vec y(cols_);
  apply_adjoint(std::span<const double>(x), std::span<double>(y));
  return y;
}

Vec op_apply(const LinearOperator& op, const Vec& x, Apply mode) {
  return mode == Apply::Forward ? op.apply(x) : op.apply_adjoint(x);
}

DenseOperator::DenseOperator(const Eigen::MatrixXd& A)
    : LinearOperator(static_cast<std::size_t>(A.rows()),
                     static_cast<std::size_t>(A.cols())),
      dense_(A),
      a_(static_cast<std::size_t>(A.size())),
      at_(static_cast<std::size_t>(A.size())) {
  const auto m = static_cast<std::size_t>(A.rows());
  const auto n = static_cast<std::size_t>(A.cols());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = A(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(j));
      a_[i * n + j] = v;
      at_[j * m + i] = v;
    }
  // Exactly symmetric input: adjoint rows equal forward rows, so share the
  // buffer (halves the traffic of back-to-back A'A applies).
  if (a_ == at_) at_.clear();
}

void DenseOperator::do_apply(const double* x, double* y) const {
  kernels::dense_matvec(a_.data(), rows(), cols(), x, y);
}

void DenseOperator::do_adjoint(const double* x, double* y) const {
  kernels::dense_matvec(at_.empty() ? a_.data() : at_.data(), cols(), rows(),
                        x, y);
}

void IdentityOperator::do_apply(const double* x, double* y) const {
  std::copy(x, x + cols(), y);
}
void IdentityOperator::do_adjoint(const double* x, double* y) const {
  std::copy(x, x + rows(), y);
}

void ZeroOperator::do_apply(const double*, double* y) const {
  std::fill(y, y + rows(), 0.0);
}
void ZeroOperator::do_adjoint(const double*, double* y) const {
  std::fill(y, y + cols(), 0.0);
}

DiagonalOperator::DiagonalOperator(Vec d)
    : LinearOperator(d.size(), d.size()), d_(std::move(d)) {}

void DiagonalOperator::do_apply(const double* x, double* y) const {
  for (std::size_t i = 0; i < d_.size(); ++i) y[i] = d_[i] * x[i];
}
void DiagonalOperator::do_adjoint(const double* x, double* y) const {
  do_apply(x, y);
}

ToeplitzOperator::ToeplitzOperator(Vec kernel)
    : LinearOperator(kernel.size(), kernel.size()), g_(std::move(kernel)) {
  if (g_.empty()) throw ConfigError("ToeplitzOperator: empty kernel");
}

void ToeplitzOperator::do_apply(const double* x, double* y) const {
  kernels::toeplitz_symm(g_.data(), cols(), x, y);
}
void ToeplitzOperator::do_adjoint(const double* x, double* y) const {
  do_apply(x, y);  // symmetric
}

WeightedDiffGramOperator::WeightedDiffGramOperator(Vec weights)
    : LinearOperator(weights.size() + 1, weights.size() + 1),
      w_(std::move(weights)) {
  if (w_.empty()) throw ConfigError("WeightedDiffGramOperator: n must be >= 2");
  for (double v : w_)
    if (!(v >= 0.0))
      throw ConfigError("WeightedDiffGramOperator: weights must be >= 0");
}

void WeightedDiffGramOperator::do_apply(const double* x, double* y) const {
  kernels::weighted_diff_gram(w_.data(), cols(), x, y);
}
void WeightedDiffGramOperator::do_adjoint(const double* x, double* y) const {
  do_apply(x, y);  // symmetric
}

Laplacian2dOperator::Laplacian2dOperator(std::size_t nx, std::size_t ny)
    : LinearOperator(nx * ny, nx * ny), nx_(nx), ny_(ny) {
  if (nx < 2 || ny < 2)
    throw ConfigError("Laplacian2dOperator: grid must be at least 2 x 2");
}

void Laplacian2dOperator::do_apply(const double* x, double* y) const {
  kernels::laplacian2d(nx_, ny_, x, y);
}
void Laplacian2dOperator::do_adjoint(const double* x, double* y) const {
  do_apply(x, y);  // symmetric
}

GramOperator::GramOperator(const LinearOperator& A, const LinearOperator& M,
                           double alpha)
    : LinearOperator(A.cols(), A.cols()), a_(A), m_(M), alpha_(alpha) {
  if (M.rows() != A.cols() || M.cols() != A.cols())
    throw ConfigError("GramOperator: M must be square matching cols(A)");
  if (!(alpha >= 0.0)) throw ConfigError("GramOperator: alpha must be >= 0");
}

void GramOperator::do_apply(const double* x, double* y) const {
  const std::size_t n = cols();
  Vec xv(x, x + n);
  Vec t = a_.apply(xv);
  Vec ata = a_.apply_adjoint(t);
  Vec mv = m_.apply(xv);
  for (std::size_t i = 0; i < n; ++i) y[i] = ata[i] + alpha_ * mv[i];
}

void GramOperator::do_adjoint(const double* x, double* y) const {
  do_apply(x, y);  // self-adjoint by construction
}

GramOperator make_gram(const LinearOperator& A, const LinearOperator& M,
                       double alpha) {
  return GramOperator(A, M, alpha);
}

InnerSolveConfig inner_default() { return InnerSolveConfig{1e-6, 0, false}; }
InnerSolveConfig inner_relaxed() { return InnerSolveConfig{1e-4, 0, false}; }

CgResult cg_solve(const LinearOperator& G, const Vec& rhs,
                  const InnerSolveConfig& cfg, const Vec* x0) {
  const std::size_t n = G.cols();
  if (G.rows() != n) throw ConfigError("cg_solve: operator must be square");
  if (rhs.size() != n) throw ConfigError("cg_solve: rhs dimension mismatch");

  CgResult res;
  res.x.assign(n, 0.0);
  const double rhs_norm = nrm2(rhs);
  if (rhs_norm == 0.0) return res;  // zero rhs -> zero solution, 0 iterations

  Vec r = rhs;
  if (x0) {
    if (x0->size() != n) throw ConfigError("cg_solve: x0 dimension mismatch");
    res.x = *x0;
    Vec gx = G.apply(res.x);
    axpy(-1.0, gx, r);
  }
  double rr = dot(r, r);
  Vec p = r;
  Vec q(n);

  const std::size_t max_iter = cfg.max_iter ? cfg.max_iter : 2 * n;
  std::size_t it = 0;
  while (it < max_iter && std::sqrt(rr) > cfg.tol * rhs_norm) {
    G.apply(std::span<const double>(p), std::span<double>(q));
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      if (rr == 0.0) break;
      throw NumericalError("cg_solve: operator is not positive definite");
    }
    const double step = rr / pq;
    axpy(step, p, res.x);
    axpy(-step, q, r);
    const double rr_next = dot(r, r);
    if (!std::isfinite(rr_next))
      throw NumericalError("cg_solve: residual became non-finite");
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    ++it;
    if (cfg.record_stats) {
      res.residual_norms.push_back(std::sqrt(rr));
      res.iterates.push_back(res.x);
    }
  }
  res.iterations = it;
  res.relres = std::sqrt(rr) / rhs_norm;
  res.truncated = res.relres > cfg.tol;
  return res;
}

Vec CgInnerSolver::solve(const LinearOperator& G, const Vec& rhs) {
  CgResult r = cg_solve(G, rhs, cfg_);
  ++solves_;
  iterations_ += r.iterations;
  if (r.truncated) ++truncations_;
  return std::move(r.x);
}

std::string CgInnerSolver::name() const {
  return "cg(tol=" + std::to_string(cfg_.tol) + ")";
}

DirectInnerSolver::DirectInnerSolver(const Eigen::MatrixXd& G) : llt_(G) {
  if (G.rows() != G.cols())
    throw ConfigError("DirectInnerSolver: matrix must be square");
  if (llt_.info() != Eigen::Success)
    throw NumericalError("DirectInnerSolver: matrix is not positive definite");
}

Vec DirectInnerSolver::solve(const LinearOperator& G, const Vec& rhs) {
  if (static_cast<Eigen::Index>(rhs.size()) != llt_.matrixL().rows())
    throw ConfigError("DirectInnerSolver: rhs dimension mismatch");
  if (G.cols() != rhs.size())
    throw ConfigError("DirectInnerSolver: operator dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(),
                                      static_cast<Eigen::Index>(rhs.size()));
  Eigen::VectorXd x = llt_.solve(b);
  ++solves_;
  return Vec(x.data(), x.data() + x.size());
}

Eigen::MatrixXd materialize(const LinearOperator& op) {
  const auto m = static_cast<Eigen::Index>(op.rows());
  const auto n = static_cast<Eigen::Index>(op.cols());
  Eigen::MatrixXd out(m, n);
  Vec e(op.cols(), 0.0), col(op.rows());
  for (Eigen::Index j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    op.apply(std::span<const double>(e), std::span<double>(col));
    for (Eigen::Index i = 0; i < m; ++i)
      out(i, j) = col[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return out;
}

}  // namespace pgkb
