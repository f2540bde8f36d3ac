#include "pgkb/hybrid.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pgkb/errors.hpp"

namespace pgkb {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ProjectedRegularizer::ProjectedRegularizer(const LinearOperator& M)
    : m_(&M), wmw_(0, 0) {}

void ProjectedRegularizer::add(const Vec& w) {
  Vec mw = m_->apply(w);
  const auto k = static_cast<Eigen::Index>(w_.size());
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(k + 1, k + 1);
  grown.topLeftCorner(k, k) = wmw_;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double v = dot(w_[static_cast<std::size_t>(j)], mw);
    grown(j, k) = v;
    grown(k, j) = v;
  }
  grown(k, k) = dot(w, mw);
  wmw_ = std::move(grown);
  w_.push_back(w);
  mw_.push_back(std::move(mw));
}

Eigen::MatrixXd ProjectedRegularizer::sqrt_factor(std::size_t k,
                                                  double tol) const {
  const std::size_t kk = k == 0 ? w_.size() : k;
  if (kk > w_.size()) throw ConfigError("sqrt_factor: k out of range");
  const auto ke = static_cast<Eigen::Index>(kk);
  return dense::sym_psd_sqrt(wmw_.topLeftCorner(ke, ke), tol);
}

ProjTikResult projected_tikhonov(const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& C, double beta1,
                                 double mu) {
  const Eigen::Index k = B.cols();
  if (C.cols() != 0 && C.cols() != k)
    throw ConfigError("projected_tikhonov: C column mismatch");
  if (!(mu >= 0.0)) throw ConfigError("projected_tikhonov: mu must be >= 0");

  const Eigen::Index rows = B.rows();
  const Eigen::Index crows = C.cols() == 0 ? 0 : C.rows();
  Eigen::MatrixXd stacked(rows + crows, k);
  stacked.topRows(rows) = B;
  if (crows > 0) stacked.bottomRows(crows) = std::sqrt(mu) * C;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + crows);
  rhs(0) = beta1;

  ProjTikResult out;
  out.y = stacked.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd res = B * out.y;
  res(0) -= beta1;
  out.psi = res.norm();
  return out;
}

WgcvEvaluator::WgcvEvaluator(const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& C, double beta1) {
  rows_ = static_cast<std::size_t>(B.rows());
  Eigen::MatrixXd Ceff = C;
  if (C.cols() == 0) Ceff.resize(0, B.cols());
  const dense::GsvdFactors g = dense::gsvd_pair(B, Ceff);
  r_ = g.r;
  rank_ = g.r + g.q;

  // d = U_A' (beta_1 e_1): the data coordinates of the projected rhs
  const Eigen::VectorXd d = beta1 * g.U_A.row(0).transpose();
  gamma_sq_.reserve(g.q);
  d_mid_sq_.reserve(g.q);
  for (std::size_t i = r_; i < rank_; ++i) {
    const double gam = g.gamma(i);
    gamma_sq_.push_back(gam * gam);
    d_mid_sq_.push_back(d(static_cast<Eigen::Index>(i)) *
                        d(static_cast<Eigen::Index>(i)));
  }
  d_tail_sq_ = 0.0;
  for (std::size_t i = rank_; i < rows_; ++i)
    d_tail_sq_ += d(static_cast<Eigen::Index>(i)) *
                  d(static_cast<Eigen::Index>(i));

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  theta1_ = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double WgcvEvaluator::numerator(double mu) const {
  double acc = d_tail_sq_;
  for (std::size_t i = 0; i < gamma_sq_.size(); ++i) {
    const double one_minus_f = mu / (gamma_sq_[i] + mu);
    acc += one_minus_f * one_minus_f * d_mid_sq_[i];
  }
  return acc;
}

double WgcvEvaluator::trace_weight_sum(double mu) const {
  double acc = static_cast<double>(r_);
  for (double gsq : gamma_sq_) acc += gsq / (gsq + mu);
  return acc;
}

double WgcvEvaluator::numerator_deriv(double mu) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < gamma_sq_.size(); ++i) {
    const double den = gamma_sq_[i] + mu;
    acc += 2.0 * mu * gamma_sq_[i] / (den * den * den) * d_mid_sq_[i];
  }
  return acc;
}

double WgcvEvaluator::trace_weight_sum_deriv(double mu) const {
  double acc = 0.0;
  for (double gsq : gamma_sq_) {
    const double den = gsq + mu;
    acc -= gsq / (den * den);
  }
  return acc;
}

double WgcvEvaluator::value(double omega, double mu) const {
  const double denom = static_cast<double>(rows_) - omega * trace_weight_sum(mu);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return numerator(mu) / (denom * denom);
}

double wgcv_function(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                     double beta1, double omega, double mu) {
  return WgcvEvaluator(B, C, beta1).value(omega, mu);
}

double select_mu_wgcv(const WgcvEvaluator& ev, double omega) {
  const double t1 = ev.theta1();
  if (!(t1 > 0.0)) throw NumericalError("select_mu_wgcv: B has no mass");
  const double hi = std::log10(t1 * t1);
  const double lo = hi - 12.0;
  const auto r = dense::minimize_scalar(
      [&](double t) { return ev.value(omega, std::pow(10.0, t)); }, lo, hi,
      1e-10, 200);
  return std::pow(10.0, r.x);
}

double select_mu_wgcv(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                      double beta1, double omega) {
  return select_mu_wgcv(WgcvEvaluator(B, C, beta1), omega);
}

double su_update(double mu_prev, double psi0, double psi_mu, double tau_e) {
  if (!(mu_prev >= 0.0)) throw ConfigError("su_update: mu_prev must be >= 0");
  const double denom = psi_mu - psi0;
  if (denom == 0.0) return mu_prev;  // flat response: keep the parameter
  return std::abs((tau_e - psi0) / denom) * mu_prev;
}

double omega_hat_for(const WgcvEvaluator& ev, double mu_target) {
  const double np = ev.numerator_deriv(mu_target);
  const double s = ev.trace_weight_sum(mu_target);
  const double sp = ev.trace_weight_sum_deriv(mu_target);
  const double n = ev.numerator(mu_target);
  const double denom = np * s - 2.0 * n * sp;
  if (denom == 0.0) return kNaN;
  const double what = np * static_cast<double>(ev.rows()) / denom;
  if (!std::isfinite(what) || what <= 0.0) return kNaN;
  return what;
}

namespace {

struct ResidualRecurrence {
  double rho_bar, phi_bar;
  void update(double alpha_next, double beta_next) {
    const double rho = std::hypot(rho_bar, beta_next);
    const double c = rho_bar / rho;
    const double s = beta_next / rho;
    rho_bar = -c * alpha_next;
    phi_bar = s * phi_bar;
  }
};

Vec expand(const PgkbState& st, const Eigen::VectorXd& y) {
  Vec x(st.W[0].size(), 0.0);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    axpy(y(i), st.W[static_cast<std::size_t>(i)], x);
  return x;
}

double rel_error_of(const Vec& x, const Vec& x_true) {
  Vec d = x;
  axpy(-1.0, x_true, d);
  return nrm2(d) / nrm2(x_true);
}

}  // namespace

HybridResult run_hybrid(const LinearOperator& A, const LinearOperator& M,
                        double alpha, const Vec& b, const HybridConfig& cfg,
                        InnerSolver& inner, const Vec* x_true,
                        PgkbOptions popts) {
  if (cfg.mode == HybridMode::SU && !(cfg.e_norm > 0.0))
    throw ConfigError("run_hybrid: SU needs a positive e_norm");
  if (cfg.max_iter == 0) throw ConfigError("run_hybrid: max_iter must be >= 1");
  if (cfg.mode == HybridMode::WGCV &&
      !(cfg.omega > 0.0 && cfg.omega <= 1.0))
    throw ConfigError("run_hybrid: omega must lie in (0, 1]");

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t af0 = A.forward_applies(), aa0 = A.adjoint_applies();
  const std::uint64_t m0 = M.forward_applies();
  const std::uint64_t ii0 = inner.total_iterations();

  HybridResult out;
  PgkbState st = pgkb_start(A, M, alpha, b, inner, popts);
  ProjectedRegularizer proj(M);
  proj.add(st.W[0]);
  ResidualRecurrence rec{st.alphas[0], st.beta1};

  std::vector<Eigen::VectorXd> y_trace;
  std::vector<double> mu_trace, gcv_trace, psi0_trace, psimu_trace;
  std::vector<double> std_min_trace;  // standard-GCV minimizers (adaptive)
  std::vector<double> omega_hats;
  double mu_prev = cfg.mu0;
  double omega_used = cfg.omega;
  const double tau_e = cfg.tau * cfg.e_norm;

  auto emit = [&](std::size_t k, double mu, double omega, double gcv,
                  double psi0, double psi_mu) {
    HybridRow row;
    row.k = k;
    row.mu = mu;
    row.omega = omega;
    row.gcv_value = gcv;
    row.psi0 = psi0;
    row.psi_mu = psi_mu;
    row.rel_error =
        x_true ? rel_error_of(expand(st, y_trace.back()), *x_true) : kNaN;
    out.history.push_back(row);
  };

  for (std::size_t j = 1; j <= cfg.max_iter; ++j) {
    const bool grew = pgkb_extend(st);
    if (!grew) {
      // Final projected problem on the frozen subspace.
      const double beta_last =
          st.breakdown_reason == "alpha" ? st.betas.back() : 0.0;
      rec.update(0.0, beta_last);
      const std::size_t kk = st.k();
      const Eigen::MatrixXd B = bidiagonal(st, kk).matrix();
      const Eigen::MatrixXd C = proj.sqrt_factor(kk);
      double mu, gcv = kNaN, omega = kNaN, psi_mu = kNaN;
      if (cfg.mode == HybridMode::WGCV) {
        WgcvEvaluator ev(B, C, st.beta1);
        mu = select_mu_wgcv(ev, omega_used);
        gcv = ev.value(1.0, mu);
        omega = omega_used;
        y_trace.push_back(projected_tikhonov(B, C, st.beta1, mu).y);
      } else {
        auto pt = projected_tikhonov(B, C, st.beta1, mu_prev);
        psi_mu = pt.psi;
        mu = su_update(mu_prev, rec.phi_bar, pt.psi, tau_e);
        y_trace.push_back(std::move(pt.y));
      }
      emit(kk, mu, omega, gcv, rec.phi_bar, psi_mu);
      out.k_stop = kk;
      out.mu_final = mu;
      out.omega_final = omega_used;
      out.breakdown = true;
      out.x = expand(st, y_trace.back());
      break;
    }

    rec.update(st.alphas[j], st.betas[j - 1]);
    const Eigen::MatrixXd B = bidiagonal(st, j).matrix();
    const Eigen::MatrixXd C = proj.sqrt_factor(j);
    psi0_trace.push_back(rec.phi_bar);

    if (cfg.mode == HybridMode::WGCV) {
      WgcvEvaluator ev(B, C, st.beta1);
      if (cfg.omega_mode == OmegaMode::Adaptive) {
        if (j >= 2) {
          double what = omega_hat_for(ev, std_min_trace.back());
          if (!std::isfinite(what))
            what = omega_hats.empty() ? cfg.omega : omega_hats.back();
          omega_hats.push_back(what);
          const double mean =
              std::accumulate(omega_hats.begin(), omega_hats.end(), 0.0) /
              static_cast<double>(omega_hats.size());
          omega_used = std::min(1.0, std::max(mean, 1e-12));
        }
        std_min_trace.push_back(select_mu_wgcv(ev, 1.0));
      }
      const double mu = select_mu_wgcv(ev, omega_used);
      mu_trace.push_back(mu);
      gcv_trace.push_back(ev.value(1.0, mu));
      y_trace.push_back(projected_tikhonov(B, C, st.beta1, mu).y);
      emit(j, mu, omega_used, gcv_trace.back(), rec.phi_bar, kNaN);

      // stagnation window (arming index k0, returned iterate k0 + s1)
      if (j >= cfg.s1 + 2 && gcv_trace[0] > 0.0) {
        const std::size_t k0 = j - cfg.s1 - 1;  // 1-based step index
        bool all = true;
        for (std::size_t i = k0; i <= k0 + cfg.s1 && all; ++i)
          all = std::abs(gcv_trace[i] - gcv_trace[i - 1]) / gcv_trace[0] <
                cfg.tol1;
        if (all) {
          out.k_stop = k0 + cfg.s1;
          out.mu_final = mu_trace[out.k_stop - 1];
          out.omega_final = omega_used;
          out.x = expand(st, y_trace[out.k_stop - 1]);
          out.stopped = true;
          break;
        }
      }
    } else {  // SU
      auto pt = projected_tikhonov(B, C, st.beta1, mu_prev);
      psimu_trace.push_back(pt.psi);
      const double mu = su_update(mu_prev, rec.phi_bar, pt.psi, tau_e);
      mu_trace.push_back(mu);
      y_trace.push_back(std::move(pt.y));
      emit(j, mu, kNaN, kNaN, rec.phi_bar, psimu_trace.back());
      mu_prev = mu;

      if (j >= cfg.s2 + 2) {
        const std::size_t k0 = j - cfg.s2 - 1;
        bool all = psi0_trace[k0 - 1] <= tau_e;
        for (std::size_t i = k0; i <= k0 + cfg.s2 && all; ++i)
          all = std::abs(psimu_trace[i] - psimu_trace[i - 1]) /
                    psimu_trace[i - 1] <=
                cfg.tol2;
        if (all) {
          out.k_stop = k0 + cfg.s2;
          out.mu_final = mu_trace[out.k_stop - 1];
          if (cfg.final_resolve) {
            const Eigen::MatrixXd Bs = bidiagonal(st, out.k_stop).matrix();
            const Eigen::MatrixXd Cs = proj.sqrt_factor(out.k_stop);
            out.x = expand(st, projected_tikhonov(Bs, Cs, st.beta1,
                                                  out.mu_final)
                                   .y);
          } else {
            out.x = expand(st, y_trace[out.k_stop - 1]);
          }
          out.stopped = true;
          break;
        }
      }
    }

    if (j == cfg.max_iter) {  // ran out without stopping
      out.k_stop = j;
      out.mu_final = mu_trace.back();
      out.omega_final = omega_used;
      out.x = expand(st, y_trace.back());
    }
    proj.add(st.W[j]);
  }

  if (out.x.empty() && !y_trace.empty()) out.x = expand(st, y_trace.back());
  if (cfg.mode == HybridMode::WGCV && out.k_stop >= 1 &&
      out.k_stop <= out.history.size())
    out.omega_final = out.history[out.k_stop - 1].omega;
  else if (cfg.mode == HybridMode::SU)
    out.omega_final = kNaN;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  out.a_forward = A.forward_applies() - af0;
  out.a_adjoint = A.adjoint_applies() - aa0;
  out.m_applies = M.forward_applies() - m0;
  out.inner_iterations = inner.total_iterations() - ii0;
  return out;
}

void write_hybrid_csv(const std::string& path, const HybridResult& result,
                      const std::string& config_echo) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_hybrid_csv: cannot open " + path);
  out.precision(17);
  out << "# schema=hybrid-history-v1 " << config_echo << "\n";
  out << "k,mu,omega,gcv_value,psi0,psi_mu,rel_error\n";
  auto cell = [&](double v) {
    if (std::isfinite(v)) out << v;
  };
  for (const auto& row : result.history) {
    out << row.k << ",";
    cell(row.mu);
    out << ",";
    cell(row.omega);
    out << ",";
    cell(row.gcv_value);
    out << ",";
    cell(row.psi0);
    out << ",";
    cell(row.psi_mu);
    out << ",";
    cell(row.rel_error);
    out << "\n";
  }
}

}  // namespace pgkb
