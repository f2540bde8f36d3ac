#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pgkb/operators.hpp"
#include "pgkb/pgkb.hpp"
#include "pgkb/vec.hpp"

namespace pgkb {

// Running Givens update for min_y ||B_k y - beta_1 e_1||. After i updates x
// is the subspace-regularized iterate x_i and phi_bar equals both the next
// rotation input and the true residual norm ||A x_i - b||.
struct GivensState {
  Vec x;
  Vec p;
  double rho_bar = 0.0;
  double phi_bar = 0.0;
  std::size_t i = 0;
  // per-step coefficients (phi_i/rho_i, theta_{i+1}/rho_i) kept so earlier
  // iterates can be replayed against the stored W columns
  std::vector<double> step_scale;
  std::vector<double> dir_scale;
};

GivensState givens_init(const Vec& w1, double alpha1, double beta1);
void givens_update(GivensState& gs, double alpha_next, double beta_next,
                   const Vec& w_next);

enum class StopKind { DP, LCurve, MaxIter };

struct StopRule {
  StopKind kind = StopKind::DP;
  double tau = 1.01;     // discrepancy safety factor
  double e_norm = 0.0;   // required for DP
  std::size_t max_iter = 60;
};

bool dp_check(double phi_bar_next, const StopRule& rule);

// Retrospective corner of the log-log L-curve: points are first pruned to a
// penalty-monotone subsequence (upward spurs dropped), then the interior
// point maximizing discrete Menger curvature wins; ties and fully collinear
// input resolve to the smallest index. Returns a 0-based position into the
// input arrays. Needs at least 4 points.
std::size_t lcurve_corner(const std::vector<double>& log_res,
                          const std::vector<double>& log_pen);

struct HistoryRow {
  std::size_t k = 0;
  double residual_norm = 0.0;  // phi_bar_{k+1} = ||A x_k - b||
  double penalty_norm = 0.0;   // (x_k' M x_k)^{1/2}
  double rel_error = 0.0;      // vs truth when provided, else NaN
  bool stopped = false;
};

struct SolveResult {
  Vec x;
  std::size_t k_stop = 0;
  std::vector<HistoryRow> history;
  bool stopped = false;    // the rule picked the iterate (vs running out)
  bool breakdown = false;
  double wall_seconds = 0.0;
  std::uint64_t a_forward = 0, a_adjoint = 0, m_applies = 0;
  std::uint64_t inner_iterations = 0;
};

// Subspace-projection regularization: bidiagonalize, update x_k by Givens
// rotations, stop by the chosen rule. L-curve runs to max_iter (or
// breakdown) and replays the corner iterate.
SolveResult run_spr(const LinearOperator& A, const LinearOperator& M,
                    double alpha, const Vec& b, const StopRule& rule,
                    InnerSolver& inner, const Vec* x_true = nullptr,
                    PgkbOptions popts = {});

// CSV with a schema/config comment line; rel_error is blank without truth.
void write_history_csv(const std::string& path, const SolveResult& result,
                       const std::string& config_echo);

}  // namespace pgkb
