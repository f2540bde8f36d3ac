#include "pgkb/spr.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "pgkb/errors.hpp"

namespace pgkb {

GivensState givens_init(const Vec& w1, double alpha1, double beta1) {
  if (!(alpha1 > 0.0) || !(beta1 > 0.0))
    throw ConfigError("givens_init: alpha_1 and beta_1 must be positive");
  GivensState gs;
  gs.x.assign(w1.size(), 0.0);
  gs.p = w1;
  gs.rho_bar = alpha1;
  gs.phi_bar = beta1;
  return gs;
}

void givens_update(GivensState& gs, double alpha_next, double beta_next,
                   const Vec& w_next) {
  if (w_next.size() != gs.x.size())
    throw ConfigError("givens_update: dimension mismatch");
  const double rho = std::hypot(gs.rho_bar, beta_next);
  if (rho == 0.0)
    throw NumericalError("givens_update: zero rotation pivot");
  const double c = gs.rho_bar / rho;
  const double s = beta_next / rho;
  const double theta_next = s * alpha_next;
  const double phi = c * gs.phi_bar;

  const double step = phi / rho;
  axpy(step, gs.p, gs.x);
  const double dir = theta_next / rho;
  for (std::size_t j = 0; j < gs.p.size(); ++j)
    gs.p[j] = w_next[j] - dir * gs.p[j];

  gs.rho_bar = -c * alpha_next;
  gs.phi_bar = s * gs.phi_bar;
  gs.step_scale.push_back(step);
  gs.dir_scale.push_back(dir);
  ++gs.i;
}

bool dp_check(double phi_bar_next, const StopRule& rule) {
  return phi_bar_next <= rule.tau * rule.e_norm;
}

std::size_t lcurve_corner(const std::vector<double>& log_res,
                          const std::vector<double>& log_pen) {
  if (log_res.size() != log_pen.size())
    throw ConfigError("lcurve_corner: size mismatch");
  if (log_res.size() < 4)
    throw ConfigError("lcurve_corner: need at least 4 points");

  // Prune to a penalty-monotone subsequence: a point that sticks up above
  // later penalties is a spur and gets dropped retrospectively.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < log_pen.size(); ++i) {
    while (!keep.empty() && log_pen[keep.back()] > log_pen[i]) keep.pop_back();
    keep.push_back(i);
  }
  if (keep.size() < 3) return keep.front();

  double best = -1.0;
  std::size_t corner = keep[1];
  for (std::size_t j = 1; j + 1 < keep.size(); ++j) {
    const double x1 = log_res[keep[j - 1]], y1 = log_pen[keep[j - 1]];
    const double x2 = log_res[keep[j]], y2 = log_pen[keep[j]];
    const double x3 = log_res[keep[j + 1]], y3 = log_pen[keep[j + 1]];
    const double area2 =
        std::abs(x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2));
    const double d12 = std::hypot(x2 - x1, y2 - y1);
    const double d23 = std::hypot(x3 - x2, y3 - y2);
    const double d13 = std::hypot(x3 - x1, y3 - y1);
    const double denom = d12 * d23 * d13;
    const double kappa = denom > 0.0 ? 2.0 * area2 / denom : 0.0;
    if (kappa > best) {
      best = kappa;
      corner = keep[j];
    }
  }
  return corner;
}

namespace {

double penalty_norm_of(const LinearOperator& M, const Vec& x) {
  const Vec mx = M.apply(x);
  return std::sqrt(std::max(0.0, dot(x, mx)));
}

double rel_error_of(const Vec& x, const Vec& x_true) {
  Vec d = x;
  axpy(-1.0, x_true, d);
  return nrm2(d) / nrm2(x_true);
}

// x_j = sum_{i<=j} step_i p_i with p rebuilt from the stored coefficients.
Vec replay_iterate(const PgkbState& st, const GivensState& gs,
                   std::size_t j) {
  Vec x(st.W[0].size(), 0.0);
  Vec p = st.W[0];
  for (std::size_t i = 0; i < j; ++i) {
    axpy(gs.step_scale[i], p, x);
    if (i + 1 < j) {
      const Vec& w_next = st.W[i + 1];
      for (std::size_t t = 0; t < p.size(); ++t)
        p[t] = w_next[t] - gs.dir_scale[i] * p[t];
    }
  }
  return x;
}

}  // namespace

SolveResult run_spr(const LinearOperator& A, const LinearOperator& M,
                    double alpha, const Vec& b, const StopRule& rule,
                    InnerSolver& inner, const Vec* x_true,
                    PgkbOptions popts) {
  if (rule.kind == StopKind::DP && !(rule.e_norm > 0.0))
    throw ConfigError("run_spr: DP stopping needs a positive e_norm");
  if (rule.max_iter == 0) throw ConfigError("run_spr: max_iter must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t af0 = A.forward_applies(), aa0 = A.adjoint_applies();
  const std::uint64_t m0 = M.forward_applies();
  const std::uint64_t ii0 = inner.total_iterations();

  SolveResult out;
  PgkbState st = pgkb_start(A, M, alpha, b, inner, popts);
  GivensState gs = givens_init(st.W[0], st.alphas[0], st.beta1);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t i = 1; i <= rule.max_iter; ++i) {
    const bool grew = pgkb_extend(st);
    if (!grew) {
      // Exact termination: one last rotation with the available scalars.
      // A beta breakdown zeroes the residual; an alpha breakdown keeps the
      // produced beta and ends with the least-squares iterate.
      const double beta_next =
          st.breakdown_reason == "alpha" ? st.betas.back() : 0.0;
      givens_update(gs, 0.0, beta_next, Vec(gs.x.size(), 0.0));
      HistoryRow row;
      row.k = i;
      row.residual_norm = gs.phi_bar;
      row.penalty_norm = penalty_norm_of(M, gs.x);
      row.rel_error = x_true ? rel_error_of(gs.x, *x_true) : nan;
      out.history.push_back(row);
      out.k_stop = i;
      out.breakdown = true;
      break;
    }
    givens_update(gs, st.alphas[i], st.betas[i - 1], st.W[i]);

    HistoryRow row;
    row.k = i;
    row.residual_norm = gs.phi_bar;
    row.penalty_norm = penalty_norm_of(M, gs.x);
    row.rel_error = x_true ? rel_error_of(gs.x, *x_true) : nan;
    out.history.push_back(row);
    out.k_stop = i;

    if (rule.kind == StopKind::DP && dp_check(gs.phi_bar, rule)) {
      out.stopped = true;
      break;
    }
  }

  out.x = gs.x;
  if (rule.kind == StopKind::LCurve && !out.history.empty()) {
    if (out.history.size() >= 4) {
      std::vector<double> lr, lp;
      lr.reserve(out.history.size());
      lp.reserve(out.history.size());
      for (const auto& row : out.history) {
        lr.push_back(std::log(std::max(row.residual_norm, 1e-300)));
        lp.push_back(std::log(std::max(row.penalty_norm, 1e-300)));
      }
      const std::size_t at = lcurve_corner(lr, lp);
      out.k_stop = out.history[at].k;
      out.x = replay_iterate(st, gs, out.k_stop);
      out.stopped = true;
    }
  } else if (rule.kind == StopKind::MaxIter) {
    out.stopped = !out.breakdown;
  }
  for (auto& row : out.history) row.stopped = row.k == out.k_stop;

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  out.a_forward = A.forward_applies() - af0;
  out.a_adjoint = A.adjoint_applies() - aa0;
  out.m_applies = M.forward_applies() - m0;
  out.inner_iterations = inner.total_iterations() - ii0;
  return out;
}

void write_history_csv(const std::string& path, const SolveResult& result,
                       const std::string& config_echo) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_history_csv: cannot open " + path);
  out.precision(17);
  out << "# schema=spr-history-v1 " << config_echo << "\n";
  out << "k,residual_norm,penalty_norm,rel_error,stopped_flag\n";
  for (const auto& row : result.history) {
    out << row.k << "," << row.residual_norm << "," << row.penalty_norm
        << ",";
    if (std::isfinite(row.rel_error)) out << row.rel_error;
    out << "," << (row.stopped ? 1 : 0) << "\n";
  }
}

}  // namespace pgkb
