#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "pgkb/dense_core.hpp"
#include "pgkb/operators.hpp"
#include "pgkb/pgkb.hpp"
#include "pgkb/vec.hpp"

namespace pgkb {

// Grows the projected penalty W_k' M W_k one basis vector at a time (one M
// application each) and produces its compact square-root factor C_k.
class ProjectedRegularizer {
 public:
  explicit ProjectedRegularizer(const LinearOperator& M);
  void add(const Vec& w);
  std::size_t size() const { return w_.size(); }
  const Eigen::MatrixXd& wmw() const { return wmw_; }
  // factor of the leading k x k block (k = 0 means the full block)
  Eigen::MatrixXd sqrt_factor(std::size_t k = 0, double tol = 1e-12) const;

 private:
  const LinearOperator* m_;
  std::vector<Vec> w_, mw_;
  Eigen::MatrixXd wmw_;
};

struct ProjTikResult {
  Eigen::VectorXd y;
  double psi = 0.0;  // ||B y - beta_1 e_1||
};

// min_y ||B y - beta_1 e_1||^2 + mu ||C y||^2 via a stacked least-squares
// solve. mu = 0 falls back to the plain projected problem.
ProjTikResult projected_tikhonov(const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& C, double beta1,
                                 double mu);

// Weighted GCV of the projected problem,
//   G(omega, mu) = ||B y_mu - beta_1 e_1||^2
//                / (trace(I - omega B B_mu^+))^2,
// evaluated through the GSVD of {B, C} so repeated mu probes cost O(k).
class WgcvEvaluator {
 public:
  WgcvEvaluator(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                double beta1);
  double value(double omega, double mu) const;
  double numerator(double mu) const;        // ||B y_mu - beta_1 e_1||^2
  double trace_weight_sum(double mu) const; // sum of filter weights
  double numerator_deriv(double mu) const;
  double trace_weight_sum_deriv(double mu) const;
  double theta1() const { return theta1_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t rows_ = 0;    // rows of B (k+1, or k after breakdown)
  std::size_t rank_ = 0;    // r + q of the pair
  std::size_t r_ = 0;
  std::vector<double> gamma_sq_;  // middle block
  std::vector<double> d_mid_sq_;  // (U_A' beta_1 e_1)_i^2 on the middle block
  double d_tail_sq_ = 0.0;        // residual mass beyond the rank
  double theta1_ = 0.0;           // largest singular value of B
};

double wgcv_function(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                     double beta1, double omega, double mu);

// Minimize G(omega, .) over log10(mu) in [log10(1e-12 theta1^2),
// log10(theta1^2)].
double select_mu_wgcv(const WgcvEvaluator& ev, double omega);
double select_mu_wgcv(const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                      double beta1, double omega);

// Secant update mu_k = |(tau_e - psi0) / (psi_mu - psi0)| * mu_prev with a
// flat-response fallback that keeps mu_prev.
double su_update(double mu_prev, double psi0, double psi_mu, double tau_e);

// omega_hat solving dG/dmu(omega, mu_target) = 0 for the current projected
// pair; used by the adaptive weight rule. Non-finite / non-positive results
// signal "no solution" via NaN.
double omega_hat_for(const WgcvEvaluator& ev, double mu_target);

enum class HybridMode { WGCV, SU };
enum class OmegaMode { Fixed, Adaptive };

struct HybridConfig {
  HybridMode mode = HybridMode::WGCV;
  OmegaMode omega_mode = OmegaMode::Fixed;
  double omega = 1.0;   // fixed weight; also the adaptive seed
  double mu0 = 1.0;     // SU initial regularization parameter
  double tau = 1.01;    // SU discrepancy factor
  double e_norm = 0.0;  // SU needs the noise level
  double tol1 = 1e-6;   // WGCV stagnation tolerance
  std::size_t s1 = 4;
  double tol2 = 1e-3;   // SU stagnation tolerance
  std::size_t s2 = 4;
  std::size_t max_iter = 60;
  bool final_resolve = true;  // SU: re-solve at the stop step with mu_{k2}
};

struct HybridRow {
  std::size_t k = 0;
  double mu = 0.0;
  double omega = 0.0;      // WGCV only (NaN otherwise)
  double gcv_value = 0.0;  // G(1, mu_k), WGCV only (NaN otherwise)
  double psi0 = 0.0;       // phi_bar_{k+1} = psi_k(0)
  double psi_mu = 0.0;     // SU only (NaN otherwise)
  double rel_error = 0.0;  // vs truth when provided, else NaN
};

struct HybridResult {
  Vec x;
  std::size_t k_stop = 0;
  double mu_final = 0.0;
  double omega_final = 0.0;
  std::vector<HybridRow> history;
  bool stopped = false;
  bool breakdown = false;
  double wall_seconds = 0.0;
  std::uint64_t a_forward = 0, a_adjoint = 0, m_applies = 0;
  std::uint64_t inner_iterations = 0;
};

// Hybrid regularization on the growing projected problem. WGCV selects mu by
// weighted GCV each step and stops when the standard GCV values stagnate; SU
// tracks the discrepancy with a secant update of mu and stops when both the
// discrepancy is met and the psi values stagnate. Both windows arm at the
// first k satisfying the condition for s consecutive comparisons and return
// the iterate at k + s.
HybridResult run_hybrid(const LinearOperator& A, const LinearOperator& M,
                        double alpha, const Vec& b, const HybridConfig& cfg,
                        InnerSolver& inner, const Vec* x_true = nullptr,
                        PgkbOptions popts = {});

void write_hybrid_csv(const std::string& path, const HybridResult& result,
                      const std::string& config_echo);

}  // namespace pgkb
