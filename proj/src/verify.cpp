#include "pgkb/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "pgkb/dense_core.hpp"
#include "pgkb/hybrid.hpp"
#include "pgkb/operators.hpp"
#include "pgkb/oracle.hpp"
#include "pgkb/pgkb.hpp"
#include "pgkb/problems.hpp"
#include "pgkb/spr.hpp"
#include "pgkb/vec.hpp"

namespace pgkb::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd to_eigen(const Vec& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Vec to_vec(const Eigen::VectorXd& v) {
  return Vec(v.data(), v.data() + v.size());
}

Eigen::MatrixXd cols_to_matrix(const std::vector<Vec>& cols, std::size_t k) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(cols.at(0).size()),
                      static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j)
    out.col(static_cast<Eigen::Index>(j)) = to_eigen(cols[j]);
  return out;
}

Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols,
                              std::uint64_t seed) {
  Vec g = problems::gaussian_vector(rows * cols, seed);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          g[i * cols + j];
  return A;
}

double rel_error(const Vec& x, const Vec& truth) {
  Vec d = x;
  axpy(-1.0, truth, d);
  return nrm2(d) / nrm2(truth);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Minimum rel_error over a history; returns (min, k at min).
std::pair<double, std::size_t> min_re(const std::vector<HistoryRow>& h) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (const auto& row : h)
    if (std::isfinite(row.rel_error) && row.rel_error < best) {
      best = row.rel_error;
      arg = row.k;
    }
  return {best, arg};
}

struct Check {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << what;
    if (!ok) {
      detail << " [FAILED]";
      pass = false;
    }
  }
  void note(const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << what;
  }
};

CriterionResult finish(const std::string& id, const std::string& name,
                       Check& c, Clock::time_point t0) {
  return {id, name, c.pass, c.detail.str(), seconds_since(t0)};
}

// Semi-convergence experiment driver: runs SPR step by step and stops once
// the rel-error curve is covered 30 steps past the current argmin (enough
// for the rise check) or at hard_cap.
SolveResult semiconv_run(const LinearOperator& A, const LinearOperator& M,
                         double alpha, const Vec& b, InnerSolver& inner,
                         const Vec& truth, std::size_t hard_cap) {
  auto t0 = Clock::now();
  SolveResult out;
  PgkbState st = pgkb_start(A, M, alpha, b, inner);
  GivensState gs = givens_init(st.W[0], st.alphas[0], st.beta1);
  double best = std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
  for (std::size_t i = 1; i <= hard_cap; ++i) {
    if (!pgkb_extend(st)) {
      out.breakdown = true;
      break;
    }
    givens_update(gs, st.alphas[i], st.betas[i - 1], st.W[i]);
    Vec mx = M.apply(gs.x);
    const double pen = std::sqrt(std::max(0.0, dot(gs.x, mx)));
    const double re = rel_error(gs.x, truth);
    out.history.push_back({i, gs.phi_bar, pen, re, false});
    if (re < best) {
      best = re;
      argmin = i;
    }
    if (i >= argmin + 30) break;
  }
  out.k_stop = out.history.size();
  out.x = gs.x;
  out.stopped = !out.breakdown;
  out.wall_seconds = seconds_since(t0);
  return out;
}

// Everything expensive that several criteria share.
struct SharedRuns {
  Level level;

  problems::ProblemInstance d2;  // deriv2, alpha=10 experiments
  SolveResult d2_spr;            // cg tol 1e-6, 60 steps, truth recorded
  double d2_min = 0.0;
  std::size_t d2_arg = 0;

  problems::ProblemInstance g1;  // gauss1d + TV, alpha=1 experiments
  SolveResult g1_lo;             // cg tol 1e-4
  SolveResult g1_hi;             // cg tol 1e-10
  double g1_min = 0.0;           // from the 1e-10 run

  explicit SharedRuns(Level lv) : level(lv) {
    problems::InstanceSpec d2spec;
    d2spec.problem = "deriv2";
    d2spec.n = lv == Level::Full ? 2000 : 500;
    d2spec.reg = "firstdiff";
    d2spec.epsilon = 5e-4;
    d2spec.seed = 11;
    d2 = problems::make_instance(d2spec);
    {
      CgInnerSolver inner(InnerSolveConfig{1e-6, 0, false});
      d2_spr = semiconv_run(*d2.A, *d2.M, 10.0, d2.b, inner, d2.x_true, 60);
      std::tie(d2_min, d2_arg) = min_re(d2_spr.history);
    }

    problems::InstanceSpec g1spec;
    g1spec.problem = "gauss1d";
    g1spec.n = lv == Level::Full ? 800 : 400;
    g1spec.sigma = 10.0;
    g1spec.reg = "tv";
    g1spec.beta = 1e-6;
    g1spec.epsilon = 5e-3;
    g1spec.seed = 3;
    g1 = problems::make_instance(g1spec);
    {
      CgInnerSolver lo(InnerSolveConfig{1e-4, 20000, false});
      g1_lo = semiconv_run(*g1.A, *g1.M, 1.0, g1.b, lo, g1.x_true, 40);
      CgInnerSolver hi(InnerSolveConfig{1e-10, 20000, false});
      g1_hi = semiconv_run(*g1.A, *g1.M, 1.0, g1.b, hi, g1.x_true, 40);
      g1_min = min_re(g1_hi.history).first;
    }
  }
};

// ---- AC1 + AC2: orthogonality and the residual identity on deriv2(200).

void criteria_1_2(std::vector<CriterionResult>& out) {
  auto t0 = Clock::now();
  problems::InstanceSpec spec;
  spec.problem = "deriv2";
  spec.n = 200;
  spec.reg = "firstdiff";
  spec.epsilon = 5e-4;
  spec.seed = 7;
  auto inst = problems::make_instance(spec);

  CgInnerSolver inner(InnerSolveConfig{1e-12, 20000, false});
  PgkbState st = pgkb_start(*inst.A, *inst.M, 10.0, inst.b, inner);
  GivensState gs = givens_init(st.W[0], st.alphas[0], st.beta1);
  const std::size_t k = 20;
  std::vector<Vec> xs;
  std::vector<double> phis;  // phi_bar_{i+1} after step i
  for (std::size_t i = 1; i <= k; ++i) {
    if (!pgkb_extend(st)) break;
    givens_update(gs, st.alphas[i], st.betas[i - 1], st.W[i]);
    xs.push_back(gs.x);
    phis.push_back(gs.phi_bar);
  }

  Check c1;
  c1.require(xs.size() == k, "reached k=20 without breakdown");
  if (xs.size() == k) {
    Eigen::MatrixXd U = cols_to_matrix(st.U, k + 1);
    const double udev =
        (U.transpose() * U -
         Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k) + 1,
                                   static_cast<Eigen::Index>(k) + 1))
            .cwiseAbs()
            .maxCoeff();
    Eigen::MatrixXd W = cols_to_matrix(st.W, k);
    Eigen::MatrixXd GW = cols_to_matrix(st.GW, k);
    const double wdev =
        (W.transpose() * GW -
         Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                   static_cast<Eigen::Index>(k)))
            .cwiseAbs()
            .maxCoeff();
    c1.require(udev <= 1e-10, "max|U21'U21-I| = " + fmt(udev) + " <= 1e-10");
    c1.require(wdev <= 1e-8, "max|W20'GW20-I| = " + fmt(wdev) + " <= 1e-8");
  }
  const double secs = seconds_since(t0);
  c1.require(secs < 10.0, "runtime " + fmt(secs, 3) + "s < 10s");
  out.push_back(finish("AC1", "basis orthogonality", c1, t0));

  auto t1 = Clock::now();
  Check c2;
  double worst = 0.0;
  const double bn = nrm2(inst.b);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vec r = inst.A->apply(xs[i]);
    axpy(-1.0, inst.b, r);
    worst = std::max(worst, std::abs(phis[i] - nrm2(r)) / bn);
  }
  c2.require(worst <= 1e-8,
             "max_k |phi_bar - ||Ax_k-b||| / ||b|| = " + fmt(worst) +
                 " <= 1e-8");
  out.push_back(finish("AC2", "residual recurrence identity", c2, t1));
}

// ---- AC3: filter-factor expansion matches the iterates.

CriterionResult criterion_3() {
  auto t0 = Clock::now();
  Check c;
  const std::size_t m = 60, n = 40, kmax = 10;
  Eigen::MatrixXd A = random_matrix(m, n, 101);
  Eigen::MatrixXd L = problems::first_difference(n);
  Eigen::VectorXd b = to_eigen(problems::gaussian_vector(m, 102));
  const double alpha = 1.0;

  Eigen::MatrixXd G = A.transpose() * A + alpha * L.transpose() * L;
  DirectInnerSolver inner(G);
  DenseOperator Aop(A);
  WeightedDiffGramOperator Mop(Vec(n - 1, 1.0));

  auto g = dense::gsvd_pair(A, L);
  auto spectrum = oracle::generalized_spectrum(g, alpha);

  PgkbState st = pgkb_start(Aop, Mop, alpha, to_vec(b), inner);
  GivensState gs = givens_init(st.W[0], st.alphas[0], st.beta1);
  double worst = 0.0;
  for (std::size_t i = 1; i <= kmax; ++i) {
    if (!pgkb_extend(st)) {
      c.require(false, "breakdown before k=10");
      break;
    }
    givens_update(gs, st.alphas[i], st.betas[i - 1], st.W[i]);
    Eigen::MatrixXd Bk = bidiagonal(st, i).matrix();
    auto fr = oracle::filter_factors(Bk, spectrum);
    Eigen::VectorXd xf = oracle::filtered_expansion(g, b, fr.f);
    const double dev =
        (to_eigen(gs.x) - xf).norm() / to_eigen(gs.x).norm();
    worst = std::max(worst, dev);
  }
  c.require(worst <= 1e-6,
            "max_k rel dev iterate vs filtered expansion = " + fmt(worst) +
                " <= 1e-6");
  const double secs = seconds_since(t0);
  c.require(secs < 5.0, "runtime " + fmt(secs, 3) + "s < 5s");
  return finish("AC3", "iteration filter factors", c, t0);
}

// ---- AC4: generalized spectrum formula vs dense eigensolver.

CriterionResult criterion_4() {
  auto t0 = Clock::now();
  Check c;
  const std::size_t m = 25, n = 20;
  Eigen::MatrixXd A = random_matrix(m, n, 103);
  Eigen::MatrixXd L = problems::first_difference(n);
  const double alpha = 1.0;
  Eigen::MatrixXd AtA = A.transpose() * A;
  Eigen::MatrixXd G = AtA + alpha * L.transpose() * L;

  auto g = dense::gsvd_pair(A, L);
  auto spectrum = oracle::generalized_spectrum(g, alpha);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(AtA, G);
  Eigen::VectorXd lam = ges.eigenvalues();  // ascending
  Eigen::VectorXd xi = spectrum.xi;
  std::sort(xi.data(), xi.data() + xi.size());
  const double dev = (lam - xi).cwiseAbs().maxCoeff();
  c.require(dev <= 1e-8,
            "max|xi - generalized eigenvalues| = " + fmt(dev) + " <= 1e-8");

  Eigen::MatrixXd D = g.Z.transpose() * G * g.Z;
  Eigen::MatrixXd Dref = spectrum.d_alpha.asDiagonal();
  const double ddev = (D - Dref).cwiseAbs().maxCoeff();
  c.require(ddev <= 1e-8, "max|Z'GZ - D_alpha| = " + fmt(ddev) + " <= 1e-8");
  return finish("AC4", "generalized spectrum", c, t0);
}

// ---- AC5: W_k spans the preconditioned Krylov subspace.

CriterionResult criterion_5() {
  auto t0 = Clock::now();
  Check c;
  const std::size_t m = 30, n = 20, kmax = 8;
  Eigen::MatrixXd A = random_matrix(m, n, 104);
  Eigen::MatrixXd L = problems::first_difference(n);
  Eigen::VectorXd b = to_eigen(problems::gaussian_vector(m, 105));
  const double alpha = 1.0;
  Eigen::MatrixXd G = A.transpose() * A + alpha * L.transpose() * L;

  DirectInnerSolver inner(G);
  DenseOperator Aop(A);
  WeightedDiffGramOperator Mop(Vec(n - 1, 1.0));
  PgkbState st = pgkb_start(Aop, Mop, alpha, to_vec(b), inner);
  for (std::size_t i = 1; i < kmax; ++i)
    if (!pgkb_extend(st)) {
      c.require(false, "breakdown before k=8");
      return finish("AC5", "Krylov subspace agreement", c, t0);
    }

  double worst = 0.0;
  for (std::size_t k = 1; k <= kmax; ++k) {
    Eigen::MatrixXd Wk = cols_to_matrix(st.W, k);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Wk);
    Eigen::MatrixXd Qw =
        qr.householderQ() *
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(k));
    Eigen::MatrixXd Kk = oracle::krylov_subspace(G, A, b, k);
    if (static_cast<std::size_t>(Kk.cols()) != k) {
      c.require(false, "Krylov basis rank-deficient at k=" +
                           std::to_string(k));
      return finish("AC5", "Krylov subspace agreement", c, t0);
    }
    worst = std::max(worst, oracle::subspace_distance(Qw, Kk));
  }
  c.require(worst <= 1e-6,
            "max principal angle over k<=8 = " + fmt(worst) + " rad <= 1e-6");
  return finish("AC5", "Krylov subspace agreement", c, t0);
}

// ---- AC6: semi-convergence on deriv2 (Table-1 scale at full level).

CriterionResult criterion_6(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;
  const bool full = sh.level == Level::Full;
  const auto& h = sh.d2_spr.history;
  c.note("n=" + std::to_string(sh.d2.x_true.size()));
  c.require(!h.empty(), "history non-empty");
  if (h.empty()) return finish("AC6", "semi-convergence", c, t0);

  const double lim = full ? 0.02 : 0.05;
  c.require(sh.d2_min <= lim,
            "min RE = " + fmt(sh.d2_min) + " <= " + fmt(lim));
  if (full)
    c.require(sh.d2_arg >= 6 && sh.d2_arg <= 18,
              "argmin k = " + std::to_string(sh.d2_arg) + " in [6,18]");
  else
    c.require(sh.d2_arg >= 3 && sh.d2_arg <= 40,
              "argmin k = " + std::to_string(sh.d2_arg) + " in [3,40]");
  const std::size_t krise = std::min(sh.d2_arg + 30, h.size());
  const double re_rise = h[krise - 1].rel_error;
  c.require(re_rise >= 2.0 * sh.d2_min,
            "RE(k=" + std::to_string(krise) + ") = " + fmt(re_rise) +
                " >= 2x min");
  const double secs = sh.d2_spr.wall_seconds;
  if (full) c.require(secs < 180.0, "solve " + fmt(secs, 3) + "s < 180s");
  else c.note("solve " + fmt(secs, 3) + "s");
  return finish("AC6", "semi-convergence", c, t0);
}

// ---- AC7: discrepancy-principle stop quality on the same run.

CriterionResult criterion_7(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;
  const double thresh = 1.01 * sh.d2.e_norm;
  std::size_t k_dp = 0;
  for (const auto& row : sh.d2_spr.history)
    if (row.residual_norm <= thresh) {
      k_dp = row.k;
      break;
    }
  c.require(k_dp > 0, "DP fired (tau=1.01)");
  if (k_dp > 0) {
    const double re = sh.d2_spr.history[k_dp - 1].rel_error;
    c.require(re <= 2.0 * sh.d2_min,
              "RE(k_DP=" + std::to_string(k_dp) + ") = " + fmt(re) +
                  " <= 2x min RE " + fmt(sh.d2_min));
  }
  return finish("AC7", "discrepancy principle quality", c, t0);
}

// ---- AC8: alpha robustness with exact inner solves (n=500 scale).

CriterionResult criterion_8() {
  auto t0 = Clock::now();
  Check c;
  problems::InstanceSpec spec;
  spec.problem = "deriv2";
  spec.n = 500;
  spec.reg = "firstdiff";
  spec.epsilon = 5e-4;
  spec.seed = 7;
  auto inst = problems::make_instance(spec);
  Eigen::MatrixXd A = problems::deriv2_matrix(spec.n);
  Eigen::MatrixXd L = problems::first_difference(spec.n);
  Eigen::MatrixXd AtA = A.transpose() * A;
  Eigen::MatrixXd LtL = L.transpose() * L;

  StopRule rule;
  rule.kind = StopKind::MaxIter;
  rule.max_iter = 60;
  std::vector<double> mins;
  for (double alpha : {0.001, 1.0, 100.0}) {
    DirectInnerSolver inner(AtA + alpha * LtL);
    auto res = run_spr(*inst.A, *inst.M, alpha, inst.b, rule, inner,
                       &inst.x_true);
    mins.push_back(min_re(res.history).first);
  }
  const double lo = *std::min_element(mins.begin(), mins.end());
  const double hi = *std::max_element(mins.begin(), mins.end());
  c.require(hi <= 1.25 * lo,
            "min RE at alpha {0.001,1,100} = {" + fmt(mins[0]) + ", " +
                fmt(mins[1]) + ", " + fmt(mins[2]) +
                "}; spread max/min = " + fmt(hi / lo) + " <= 1.25");
  return finish("AC8", "alpha robustness", c, t0);
}

// ---- AC9: inner-tolerance robustness on gauss1d + TV.

CriterionResult criterion_9(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;
  const double m_lo = min_re(sh.g1_lo.history).first;
  const double m_hi = sh.g1_min;
  c.note("n=" + std::to_string(sh.g1.x_true.size()));
  c.require(std::abs(m_lo - m_hi) <= 0.10 * m_hi,
            "min RE tol 1e-4 = " + fmt(m_lo) + " vs 1e-10 = " + fmt(m_hi) +
                "; rel gap = " + fmt(std::abs(m_lo - m_hi) / m_hi) +
                " <= 0.10");
  return finish("AC9", "inner-tolerance robustness", c, t0);
}

// ---- AC10: SU hybrid stabilization and accuracy.

void su_stabilization(Check& c, const HybridResult& hy) {
  const std::size_t rows = hy.history.size();
  if (rows < 5) {
    c.require(false, "too few SU steps (" + std::to_string(rows) +
                         ") to assess stabilization");
    return;
  }
  double worst_mu = 0.0, worst_psi = 0.0;
  for (std::size_t i = rows - 4; i < rows; ++i) {
    const auto& prev = hy.history[i - 1];
    const auto& cur = hy.history[i];
    worst_mu = std::max(worst_mu,
                        std::abs(cur.mu - prev.mu) / std::abs(prev.mu));
    worst_psi = std::max(
        worst_psi, std::abs(cur.psi_mu - prev.psi_mu) / prev.psi_mu);
  }
  c.require(worst_mu < 1e-3,
            "max rel change of mu over final 5 recorded steps = " +
                fmt(worst_mu) + " < 1e-3");
  c.require(worst_psi < 1e-3,
            "max rel change of psi over final 5 recorded steps = " +
                fmt(worst_psi) + " < 1e-3");
}

CriterionResult criterion_10(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;

  HybridConfig cfg;
  cfg.mode = HybridMode::SU;
  cfg.tau = 1.01;
  cfg.mu0 = 1.0;
  cfg.max_iter = 60;

  cfg.e_norm = sh.d2.e_norm;
  CgInnerSolver inner_d2(InnerSolveConfig{1e-6, 20000, false});
  auto hy_d2 = run_hybrid(*sh.d2.A, *sh.d2.M, 10.0, sh.d2.b, cfg, inner_d2,
                          &sh.d2.x_true);
  su_stabilization(c, hy_d2);
  const double re_d2 = rel_error(hy_d2.x, sh.d2.x_true);
  c.require(re_d2 <= 2.0 * sh.d2_min,
            "deriv2 SU RE(k=" + std::to_string(hy_d2.k_stop) + ") = " +
                fmt(re_d2) + " <= 2x SPR min " + fmt(sh.d2_min));

  cfg.e_norm = sh.g1.e_norm;
  CgInnerSolver inner_g1(InnerSolveConfig{1e-6, 20000, false});
  auto hy_g1 = run_hybrid(*sh.g1.A, *sh.g1.M, 1.0, sh.g1.b, cfg, inner_g1,
                          &sh.g1.x_true);
  const double re_g1 = rel_error(hy_g1.x, sh.g1.x_true);
  c.require(re_g1 <= 3.0 * sh.g1_min,
            "gauss1d SU RE(k=" + std::to_string(hy_g1.k_stop) + ") = " +
                fmt(re_g1) + " <= 3x SPR min " + fmt(sh.g1_min));
  return finish("AC10", "secant-update hybrid", c, t0);
}

// ---- AC11: WGCV selector vs grid oracle and explicit pseudo-inverse.

CriterionResult criterion_11() {
  auto t0 = Clock::now();
  Check c;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  double worst_cell = 0.0, worst_val = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 7);
    const auto ki = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(ki + 1, ki);
    for (Eigen::Index j = 0; j < ki; ++j) {
      B(j, j) = 0.5 + 1.5 * uni(rng);
      B(j + 1, j) = 0.1 + 0.9 * uni(rng);
    }
    Eigen::MatrixXd C(ki, ki);
    for (Eigen::Index i = 0; i < ki; ++i)
      for (Eigen::Index j = 0; j < ki; ++j) C(i, j) = 2.0 * uni(rng) - 1.0;
    const double beta1 = 1.0 + uni(rng);
    const double omega = (trial % 2 == 0) ? 1.0 : 0.6 + 0.4 * uni(rng);

    WgcvEvaluator ev(B, C, beta1);
    const double mu_star = select_mu_wgcv(ev, omega);

    // 2000-point log grid over the same bracket.
    const double theta1 = ev.theta1();
    const double hi_exp = std::log10(theta1 * theta1);
    const double lo_exp = hi_exp - 12.0;
    const int npts = 2000;
    double best_val = std::numeric_limits<double>::infinity();
    double best_exp = lo_exp;
    for (int i = 0; i < npts; ++i) {
      const double e =
          lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / (npts - 1);
      const double v = ev.value(omega, std::pow(10.0, e));
      if (v < best_val) {
        best_val = v;
        best_exp = e;
      }
    }
    const double cell = (hi_exp - lo_exp) / (npts - 1);
    worst_cell = std::max(
        worst_cell, std::abs(std::log10(mu_star) - best_exp) / cell);

    // Explicit pseudo-inverse evaluation at a few mu.
    for (double f : {1e-8, 1e-3, 0.3, 2.0}) {
      const double mu = f * theta1 * theta1;
      Eigen::MatrixXd N =
          B.transpose() * B + mu * C.transpose() * C;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ki + 1);
      rhs[0] = beta1;
      Eigen::VectorXd y = N.ldlt().solve(B.transpose() * rhs);
      const double num = (B * y - rhs).squaredNorm();
      const double tr =
          static_cast<double>(k + 1) -
          omega * (B * N.ldlt().solve(B.transpose().eval())).trace();
      const double ref = num / (tr * tr);
      const double got = wgcv_function(B, C, beta1, omega, mu);
      worst_val = std::max(worst_val, std::abs(got - ref) / ref);
    }
  }
  c.require(worst_cell <= 1.0,
            "selector vs 2000-pt grid: worst offset = " + fmt(worst_cell) +
                " cells <= 1");
  c.require(worst_val <= 1e-10,
            "wgcv value vs pseudo-inverse: worst rel dev = " +
                fmt(worst_val) + " <= 1e-10");
  return finish("AC11", "WGCV correctness", c, t0);
}

// ---- AC12: Tikhonov oracle self-consistency and SPR vs optimal Tikhonov.

CriterionResult criterion_12(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;

  // Two-route agreement on a dense pair.
  {
    const std::size_t m = 25, n = 20;
    Eigen::MatrixXd A = random_matrix(m, n, 103);
    Eigen::MatrixXd L = problems::first_difference(n);
    Eigen::MatrixXd M = L.transpose() * L;
    Eigen::VectorXd b = to_eigen(problems::gaussian_vector(m, 106));
    auto g = dense::gsvd_pair(A, L);
    double worst = 0.0;
    for (double lam : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
      Eigen::VectorXd xd = oracle::tikhonov_direct(A, M, b, lam);
      Eigen::VectorXd xg = oracle::filtered_expansion(
          g, b, oracle::tikhonov_filter_factors(g, lam));
      worst = std::max(worst, (xd - xg).norm() / xd.norm());
    }
    c.require(worst <= 1e-8,
              "direct vs GSVD route over 7 decades: worst rel dev = " +
                  fmt(worst) + " <= 1e-8");
  }

  // SPR reaches within 1.5x of the dense-sweep-optimal Tikhonov error.
  {
    Eigen::MatrixXd A = materialize(*sh.g1.A);
    Eigen::MatrixXd M = sh.g1.L->transpose() * (*sh.g1.L);
    Eigen::MatrixXd AtA = A.transpose() * A;
    Eigen::VectorXd b = to_eigen(sh.g1.b);
    Eigen::VectorXd Atb = A.transpose() * b;
    Eigen::VectorXd xt = to_eigen(sh.g1.x_true);
    double best = std::numeric_limits<double>::infinity();
    double best_lam = 0.0;
    for (int i = 0; i <= 60; ++i) {
      const double lam = std::pow(10.0, -10.0 + 12.0 * i / 60.0);
      Eigen::VectorXd x = (AtA + lam * M).llt().solve(Atb);
      const double re = (x - xt).norm() / xt.norm();
      if (re < best) {
        best = re;
        best_lam = lam;
      }
    }
    c.require(sh.g1_min <= 1.5 * best,
              "gauss1d SPR min RE " + fmt(sh.g1_min) +
                  " <= 1.5x oracle Tikhonov RE " + fmt(best) +
                  " (lambda=" + fmt(best_lam, 3) + ")");
  }
  return finish("AC12", "oracle self-consistency", c, t0);
}

// ---- Reference-scale window checks on the full deriv2 run.

CriterionResult criterion_p1(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;
  const double thresh = 1.01 * sh.d2.e_norm;
  std::size_t k_dp = 0;
  for (const auto& row : sh.d2_spr.history)
    if (row.residual_norm <= thresh) {
      k_dp = row.k;
      break;
    }
  c.require(k_dp >= 6 && k_dp <= 14,
            "DP stop k = " + std::to_string(k_dp) + " in [6,14]");
  return finish("P1", "reference DP window", c, t0);
}

CriterionResult criterion_p2(const SharedRuns& sh) {
  auto t0 = Clock::now();
  Check c;
  std::vector<double> lr, lp;
  for (const auto& row : sh.d2_spr.history) {
    lr.push_back(std::log(std::max(row.residual_norm, 1e-300)));
    lp.push_back(std::log(std::max(row.penalty_norm, 1e-300)));
  }
  const std::size_t corner = lcurve_corner(lr, lp) + 1;
  c.require(corner >= 4 && corner <= 12,
            "L-curve corner k = " + std::to_string(corner) + " in [4,12]");
  return finish("P2", "reference L-curve window", c, t0);
}

}  // namespace

std::vector<CriterionResult> run_acceptance(Level level) {
  std::vector<CriterionResult> out;
  criteria_1_2(out);
  out.push_back(criterion_3());
  out.push_back(criterion_4());
  out.push_back(criterion_5());
  SharedRuns sh(level);
  out.push_back(criterion_6(sh));
  out.push_back(criterion_7(sh));
  out.push_back(criterion_8());
  out.push_back(criterion_9(sh));
  out.push_back(criterion_10(sh));
  out.push_back(criterion_11());
  out.push_back(criterion_12(sh));
  if (level == Level::Full) {
    out.push_back(criterion_p1(sh));
    out.push_back(criterion_p2(sh));
  }
  return out;
}

bool all_passed(const std::vector<CriterionResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CriterionResult& r) { return r.pass; });
}

void print_report(const std::vector<CriterionResult>& results,
                  std::ostream& os) {
  std::size_t passed = 0;
  for (const auto& r : results) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": "
       << r.detail << " [" << fmt(r.seconds, 3) << "s]\n";
    if (r.pass) ++passed;
  }
  os << passed << "/" << results.size() << " criteria passed\n";
}

}  // namespace pgkb::verify
