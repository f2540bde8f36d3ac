#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pgkb/vec.hpp"

namespace pgkb {

enum class Apply { Forward, Adjoint };

// Matrix-free operator. Implementations provide forward and adjoint applies;
// the base class enforces dimensions and counts applications (relaxed
// atomics, so counting stays safe if independent runs ever share operators).
class LinearOperator {
 public:
  LinearOperator(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols) {}
  virtual ~LinearOperator() = default;
  LinearOperator(const LinearOperator&) = delete;
  LinearOperator& operator=(const LinearOperator&) = delete;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_adjoint(std::span<const double> x, std::span<double> y) const;
  Vec apply(const Vec& x) const;
  Vec apply_adjoint(const Vec& x) const;

  std::uint64_t forward_applies() const { return fwd_.load(); }
  std::uint64_t adjoint_applies() const { return adj_.load(); }
  void reset_counters() const { fwd_ = 0; adj_ = 0; }

 protected:
  virtual void do_apply(const double* x, double* y) const = 0;
  virtual void do_adjoint(const double* x, double* y) const = 0;

 private:
  std::size_t rows_, cols_;
  mutable std::atomic<std::uint64_t> fwd_{0}, adj_{0};
};

Vec op_apply(const LinearOperator& op, const Vec& x,
             Apply mode = Apply::Forward);

// Dense operator. Keeps row-major copies of A and A' so both apply
// directions stream contiguous rows through the parallel matvec kernel.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(const Eigen::MatrixXd& A);
  const Eigen::MatrixXd& matrix() const { return dense_; }

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;

 private:
  Eigen::MatrixXd dense_;
  std::vector<double> a_, at_;  // row-major A, row-major A'
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(std::size_t n) : LinearOperator(n, n) {}

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;
};

class ZeroOperator final : public LinearOperator {
 public:
  ZeroOperator(std::size_t rows, std::size_t cols)
      : LinearOperator(rows, cols) {}

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;
};

class DiagonalOperator final : public LinearOperator {
 public:
  explicit DiagonalOperator(Vec d);

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;

 private:
  Vec d_;
};

// Symmetric Toeplitz with zero boundary conditions; g holds the kernel
// values g[0..n-1] for offsets 0..n-1.
class ToeplitzOperator final : public LinearOperator {
 public:
  explicit ToeplitzOperator(Vec kernel);
  const Vec& kernel() const { return g_; }

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;

 private:
  Vec g_;
};

// M = D' diag(w) D with D the (n-1) x n forward-difference matrix. Unit
// weights give the plain first-difference Gram matrix.
class WeightedDiffGramOperator final : public LinearOperator {
 public:
  explicit WeightedDiffGramOperator(Vec weights);
  const Vec& weights() const { return w_; }

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;

 private:
  Vec w_;
};

// 5-point negative Laplacian with Neumann boundary on an nx x ny grid.
class Laplacian2dOperator final : public LinearOperator {
 public:
  Laplacian2dOperator(std::size_t nx, std::size_t ny);
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;

 private:
  std::size_t nx_, ny_;
};

// G = A'A + alpha * M. Self-adjoint; each apply costs exactly one forward,
// one adjoint and one M application.
class GramOperator final : public LinearOperator {
 public:
  GramOperator(const LinearOperator& A, const LinearOperator& M, double alpha);
  double alpha() const { return alpha_; }
  const LinearOperator& a() const { return a_; }
  const LinearOperator& m() const { return m_; }

 protected:
  void do_apply(const double* x, double* y) const override;
  void do_adjoint(const double* x, double* y) const override;

 private:
  const LinearOperator& a_;
  const LinearOperator& m_;
  double alpha_;
};

GramOperator make_gram(const LinearOperator& A, const LinearOperator& M,
                       double alpha);

// --- inner solves ---------------------------------------------------------

struct InnerSolveConfig {
  double tol = 1e-6;
  std::size_t max_iter = 0;  // 0 means 2n
  bool record_stats = false;
};

InnerSolveConfig inner_default();  // tol 1e-6
InnerSolveConfig inner_relaxed();  // tol 1e-4 profile

struct CgResult {
  Vec x;
  std::size_t iterations = 0;
  double relres = 0.0;
  bool truncated = false;  // hit max_iter above tolerance
  std::vector<double> residual_norms;  // per iteration, when record_stats
  std::vector<Vec> iterates;           // per iteration, when record_stats
};

// Plain conjugate gradients on an SPD operator, cold start unless x0 is
// given. Serial reductions keep results reproducible. Signals indefiniteness
// and non-finite values via NumericalError; hitting max_iter only sets the
// truncated flag.
CgResult cg_solve(const LinearOperator& G, const Vec& rhs,
                  const InnerSolveConfig& cfg = {}, const Vec* x0 = nullptr);

// Strategy for the inner solves G s = rhs of the bidiagonalization.
class InnerSolver {
 public:
  virtual ~InnerSolver() = default;
  virtual Vec solve(const LinearOperator& G, const Vec& rhs) = 0;
  virtual std::string name() const = 0;

  std::uint64_t total_solves() const { return solves_; }
  std::uint64_t total_iterations() const { return iterations_; }
  std::uint64_t truncations() const { return truncations_; }

 protected:
  std::uint64_t solves_ = 0;
  std::uint64_t iterations_ = 0;
  std::uint64_t truncations_ = 0;
};

class CgInnerSolver final : public InnerSolver {
 public:
  explicit CgInnerSolver(InnerSolveConfig cfg = {}) : cfg_(cfg) {}
  Vec solve(const LinearOperator& G, const Vec& rhs) override;
  std::string name() const override;
  const InnerSolveConfig& config() const { return cfg_; }

 private:
  InnerSolveConfig cfg_;
};

// Dense Cholesky of an explicitly assembled G; used where the experiments
// call for exact inner solves.
class DirectInnerSolver final : public InnerSolver {
 public:
  explicit DirectInnerSolver(const Eigen::MatrixXd& G);
  Vec solve(const LinearOperator& G, const Vec& rhs) override;
  std::string name() const override { return "direct"; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Assemble a dense copy of an operator by applying it to unit vectors.
Eigen::MatrixXd materialize(const LinearOperator& op);

}  // namespace pgkb
