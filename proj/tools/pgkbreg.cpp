// Command-line front end: generate test problems, run the subspace /
// hybrid solvers, and run the verification suite.
//
// Exit codes: 0 success, 2 config error, 3 numerical breakdown,
// 4 verification failure.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pgkb/errors.hpp"
#include "pgkb/hybrid.hpp"
#include "pgkb/io.hpp"
#include "pgkb/operators.hpp"
#include "pgkb/problems.hpp"
#include "pgkb/spr.hpp"
#include "pgkb/vec.hpp"
#include "pgkb/verify.hpp"

namespace {

using pgkb::Vec;

struct GenerateOpts {
  pgkb::problems::InstanceSpec spec;
  std::string out;
};

struct SolveOpts {
  pgkb::problems::InstanceSpec spec;
  std::string instance_dir;  // when set, load files instead of generating
  std::vector<double> alphas;
  std::string method = "spr";
  std::string stop;  // default depends on method
  double tau = 1.01;
  double inner_tol = 1e-6;
  std::size_t inner_maxit = 0;  // 0 means 2n
  std::size_t max_iter = 60;
  double omega = 1.0;
  bool adaptive_omega = false;
  double mu0 = 1.0;
  bool no_final_resolve = false;
  std::string history;  // CSV path; empty writes nothing
};

struct VerifyOpts {
  std::string level = "quick";
};

void add_instance_options(CLI::App* cmd, pgkb::problems::InstanceSpec& spec) {
  cmd->add_option("--problem", spec.problem, "test problem: deriv2 | gauss1d")
      ->capture_default_str();
  cmd->add_option("--n", spec.n, "problem size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sigma", spec.sigma, "gauss1d kernel width (index units)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--reg", spec.reg,
                  "penalty: firstdiff | tv | identity | laplace2d")
      ->capture_default_str();
  cmd->add_option("--beta", spec.beta, "tv smoothing parameter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--nx", spec.nx, "laplace2d grid width (nx*ny = n)");
  cmd->add_option("--ny", spec.ny, "laplace2d grid height (nx*ny = n)");
  cmd->add_option("--noise", spec.epsilon,
                  "relative noise level ||e||/||b_true||")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--seed", spec.seed, "noise seed")->capture_default_str();
}

// A solve target: operators + data, either generated in-process or loaded
// back from an exported instance directory.
struct Target {
  std::unique_ptr<pgkb::LinearOperator> A;
  std::unique_ptr<pgkb::LinearOperator> M;
  Vec b;
  std::optional<Vec> x_true;
  double e_norm = 0.0;
  std::string echo;  // instance part of the CSV config echo
};

Target target_from_spec(const pgkb::problems::InstanceSpec& spec) {
  auto inst = pgkb::problems::make_instance(spec);
  Target t;
  t.A = std::move(inst.A);
  t.M = std::move(inst.M);
  t.b = std::move(inst.b);
  t.x_true = std::move(inst.x_true);
  t.e_norm = inst.e_norm;
  std::ostringstream os;
  os << "problem=" << spec.problem << " n=" << spec.n << " reg=" << spec.reg;
  if (spec.problem == "gauss1d")
    os << " sigma=" << pgkb::io::format_double(spec.sigma);
  if (spec.reg == "tv") os << " beta=" << pgkb::io::format_double(spec.beta);
  if (spec.reg == "laplace2d") os << " nx=" << spec.nx << " ny=" << spec.ny;
  os << " noise=" << pgkb::io::format_double(spec.epsilon)
     << " seed=" << spec.seed;
  t.echo = os.str();
  return t;
}

Target target_from_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  auto file = [&](const char* name) { return (fs::path(dir) / name).string(); };
  if (!fs::exists(file("manifest.txt")))
    throw pgkb::ConfigError("no manifest.txt under " + dir);
  auto man = pgkb::io::read_manifest(file("manifest.txt"));
  Target t;
  t.A = std::make_unique<pgkb::DenseOperator>(
      pgkb::io::read_matrix_market(file("A.mtx")));
  t.M = std::make_unique<pgkb::DenseOperator>(
      pgkb::io::read_matrix_market(file("M.mtx")));
  t.b = pgkb::io::read_vector_csv(file("b.csv"));
  if (fs::exists(file("x_true.csv")))
    t.x_true = pgkb::io::read_vector_csv(file("x_true.csv"));
  if (auto it = man.find("e_norm"); it != man.end())
    t.e_norm = std::stod(it->second);
  std::ostringstream os;
  os << "instance=" << dir;
  for (const char* key : {"problem", "n", "reg", "noise", "seed"})
    if (auto it = man.find(key); it != man.end())
      os << " " << key << "=" << it->second;
  t.echo = os.str();
  return t;
}

double rel_error(const Vec& x, const Vec& truth) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  return std::sqrt(num) / std::sqrt(den);
}

std::string fmt_or_na(double v) {
  if (!std::isfinite(v)) return "na";
  return pgkb::io::format_double(v);
}

// History file name for run `idx` of `count`; a sweep gets one file per
// alpha with the value spliced into the name.
// shortest round-trip form: distinct alphas get distinct, readable tags
std::string alpha_tag(double alpha) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, alpha);
  return std::string(buf, r.ptr);
}

std::string history_path(const std::string& base, double alpha,
                         std::size_t count) {
  if (base.empty() || count == 1) return base;
  std::filesystem::path p(base);
  std::string ext = p.extension().string();
  std::filesystem::path stem = p;
  stem.replace_extension();
  std::ostringstream os;
  os << stem.string() << "_alpha" << alpha_tag(alpha)
     << (ext.empty() ? ".csv" : ext);
  return os.str();
}

int cmd_generate(const GenerateOpts& o) {
  auto inst = pgkb::problems::make_instance(o.spec);
  pgkb::problems::export_instance(inst, o.spec, o.out);
  std::cout << "wrote instance files to " << o.out << "\n";
  return 0;
}

int cmd_solve(const SolveOpts& o) {
  const bool is_spr = o.method == "spr";
  const bool is_hybrid = o.method == "hybrid";
  if (!is_spr && !is_hybrid)
    throw pgkb::ConfigError("unknown method '" + o.method +
                            "' (expected spr | hybrid)");
  std::string stop = o.stop;
  if (stop.empty()) stop = is_spr ? "dp" : "wgcv";
  const bool spr_stop = stop == "dp" || stop == "lcurve" || stop == "maxiter";
  const bool hybrid_stop = stop == "wgcv" || stop == "su";
  if (!spr_stop && !hybrid_stop)
    throw pgkb::ConfigError("unknown stop rule '" + stop +
                            "' (expected dp | lcurve | maxiter | wgcv | su)");
  if (is_spr && !spr_stop)
    throw pgkb::ConfigError("stop '" + stop + "' requires --method hybrid");
  if (is_hybrid && !hybrid_stop)
    throw pgkb::ConfigError("stop '" + stop + "' requires --method spr");

  Target t = o.instance_dir.empty() ? target_from_spec(o.spec)
                                    : target_from_dir(o.instance_dir);
  if ((stop == "dp" || stop == "su") && !(t.e_norm > 0.0))
    throw pgkb::ConfigError("stop '" + stop +
                            "' needs a positive noise norm; generate the "
                            "instance with --noise > 0");

  std::vector<double> alphas = o.alphas;
  if (alphas.empty()) alphas.push_back(1.0);
  for (double a : alphas)
    if (!(a > 0.0))
      throw pgkb::ConfigError("alpha must be positive, got " +
                              pgkb::io::format_double(a));

  pgkb::InnerSolveConfig icfg;
  icfg.tol = o.inner_tol;
  icfg.max_iter = o.inner_maxit;

  const Vec* truth = t.x_true ? &*t.x_true : nullptr;
  for (std::size_t run = 0; run < alphas.size(); ++run) {
    const double alpha = alphas[run];
    pgkb::CgInnerSolver inner(icfg);

    std::ostringstream echo;
    echo << t.echo << " alpha=" << pgkb::io::format_double(alpha)
         << " method=" << o.method << " stop=" << stop
         << " tau=" << pgkb::io::format_double(o.tau)
         << " inner_tol=" << pgkb::io::format_double(o.inner_tol)
         << " inner_maxit=" << o.inner_maxit << " max_iter=" << o.max_iter;

    std::size_t k_stop = 0;
    bool stopped = false, breakdown = false;
    double wall = 0.0, final_re = std::numeric_limits<double>::quiet_NaN();
    double min_re = std::numeric_limits<double>::quiet_NaN();
    std::size_t argmin_k = 0;
    std::uint64_t a_fwd = 0, a_adj = 0, m_app = 0, inner_it = 0;
    std::string extra;

    auto track = [&](std::size_t k, double re) {
      if (std::isfinite(re) && (!std::isfinite(min_re) || re < min_re)) {
        min_re = re;
        argmin_k = k;
      }
    };

    if (is_spr) {
      pgkb::StopRule rule;
      rule.kind = stop == "dp"       ? pgkb::StopKind::DP
                  : stop == "lcurve" ? pgkb::StopKind::LCurve
                                     : pgkb::StopKind::MaxIter;
      rule.tau = o.tau;
      rule.e_norm = t.e_norm;
      rule.max_iter = o.max_iter;
      auto res =
          pgkb::run_spr(*t.A, *t.M, alpha, t.b, rule, inner, truth);
      for (const auto& row : res.history) track(row.k, row.rel_error);
      if (truth) final_re = rel_error(res.x, *truth);
      k_stop = res.k_stop;
      stopped = res.stopped;
      breakdown = res.breakdown;
      wall = res.wall_seconds;
      a_fwd = res.a_forward;
      a_adj = res.a_adjoint;
      m_app = res.m_applies;
      inner_it = res.inner_iterations;
      if (!o.history.empty())
        pgkb::write_history_csv(history_path(o.history, alpha, alphas.size()),
                                res, echo.str());
    } else {
      pgkb::HybridConfig cfg;
      cfg.mode = stop == "wgcv" ? pgkb::HybridMode::WGCV : pgkb::HybridMode::SU;
      cfg.omega_mode = o.adaptive_omega ? pgkb::OmegaMode::Adaptive
                                        : pgkb::OmegaMode::Fixed;
      cfg.omega = o.omega;
      cfg.mu0 = o.mu0;
      cfg.tau = o.tau;
      cfg.e_norm = t.e_norm;
      cfg.max_iter = o.max_iter;
      cfg.final_resolve = !o.no_final_resolve;
      auto res =
          pgkb::run_hybrid(*t.A, *t.M, alpha, t.b, cfg, inner, truth);
      for (const auto& row : res.history) track(row.k, row.rel_error);
      if (truth) final_re = rel_error(res.x, *truth);
      k_stop = res.k_stop;
      stopped = res.stopped;
      breakdown = res.breakdown;
      wall = res.wall_seconds;
      a_fwd = res.a_forward;
      a_adj = res.a_adjoint;
      m_app = res.m_applies;
      inner_it = res.inner_iterations;
      std::ostringstream ex;
      ex << " mu_final=" << pgkb::io::format_double(res.mu_final)
         << " omega_final=" << pgkb::io::format_double(res.omega_final);
      extra = ex.str();
      if (!o.history.empty())
        pgkb::write_hybrid_csv(history_path(o.history, alpha, alphas.size()),
                               res, echo.str());
    }

    std::cout << "summary method=" << o.method << " stop=" << stop
              << " alpha=" << pgkb::io::format_double(alpha)
              << " k_stop=" << k_stop << " stopped=" << (stopped ? 1 : 0)
              << " breakdown=" << (breakdown ? 1 : 0)
              << " final_re=" << fmt_or_na(final_re)
              << " min_re=" << fmt_or_na(min_re) << " argmin_k=" << argmin_k
              << extra << " wall_seconds=" << pgkb::io::format_double(wall)
              << " a_forward=" << a_fwd << " a_adjoint=" << a_adj
              << " m_applies=" << m_app << " inner_iterations=" << inner_it
              << "\n";
  }
  return 0;
}

int cmd_verify(const VerifyOpts& o) {
  pgkb::verify::Level level;
  if (o.level == "quick")
    level = pgkb::verify::Level::Quick;
  else if (o.level == "full")
    level = pgkb::verify::Level::Full;
  else
    throw pgkb::ConfigError("unknown level '" + o.level +
                            "' (expected quick | full)");
  auto results = pgkb::verify::run_acceptance(level);
  pgkb::verify::print_report(results, std::cout);
  return pgkb::verify::all_passed(results) ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pgkbreg: iterative regularization of linear inverse problems "
               "with a general quadratic penalty"};
  app.require_subcommand(1);
  // key = value files with a [generate] / [solve] / [verify] section; the
  // option is accepted before or after the subcommand name
  app.set_config("--config", "",
                 "read options from a key = value file (one [subcommand] "
                 "section)");
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenerateOpts gen;
  auto* cgen = app.add_subcommand(
      "generate", "build a test instance and export it to a directory");
  cgen->configurable();
  add_instance_options(cgen, gen.spec);
  cgen->add_option("--out", gen.out, "output directory")->required();

  SolveOpts sol;
  auto* csol = app.add_subcommand(
      "solve", "run a regularized solve and report its convergence history");
  csol->configurable();
  add_instance_options(csol, sol.spec);
  csol->add_option("--instance", sol.instance_dir,
                   "load an exported instance directory instead of generating");
  csol->add_option("--alpha", sol.alphas,
                   "penalty weight; repeat for an alpha sweep")
      ->check(CLI::PositiveNumber);
  csol->add_option("--method", sol.method, "spr | hybrid")
      ->capture_default_str();
  csol->add_option("--stop", sol.stop,
                   "dp | lcurve | maxiter (spr); wgcv | su (hybrid)");
  csol->add_option("--tau", sol.tau, "discrepancy safety factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  csol->add_option("--inner-tol", sol.inner_tol, "inner CG tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  csol->add_option("--inner-maxit", sol.inner_maxit,
                   "inner CG iteration cap (0 = 2n)");
  csol->add_option("--max-iter", sol.max_iter, "outer iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  csol->add_option("--omega", sol.omega, "weighted GCV weight in (0, 1]")
      ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0))
      ->capture_default_str();
  csol->add_flag("--adaptive-omega", sol.adaptive_omega,
                 "adapt the GCV weight during the run");
  csol->add_option("--mu0", sol.mu0, "secant-update initial mu")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  csol->add_flag("--no-final-resolve", sol.no_final_resolve,
                 "secant update: keep the stop-step iterate instead of "
                 "re-solving with the last mu");
  csol->add_option("--history", sol.history,
                   "write the per-iteration history CSV here");

  VerifyOpts ver;
  auto* cver = app.add_subcommand(
      "verify", "run the acceptance suite against dense oracles");
  cver->configurable();
  cver->add_option("level", ver.level, "quick | full")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits clean, bad usage is a config error
  }

  try {
    if (cgen->parsed()) return cmd_generate(gen);
    if (csol->parsed()) return cmd_solve(sol);
    return cmd_verify(ver);
  } catch (const pgkb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pgkb::NumericalError& e) {
    std::cerr << "numerical breakdown: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
