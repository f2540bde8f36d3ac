#include "pgkb/pgkb.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "pgkb/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace pgkb {

Eigen::MatrixXd Bidiagonal::matrix() const {
  const auto kk = static_cast<Eigen::Index>(alpha.size());
  const bool square = beta.size() + 1 == alpha.size();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(square ? kk : kk + 1, kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    B(i, i) = alpha[static_cast<std::size_t>(i)];
    if (static_cast<std::size_t>(i) < beta.size())
      B(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  return B;
}

void reorth_against(Vec& v, const std::vector<Vec>& basis,
                    const std::vector<Vec>* gram_images) {
  if (gram_images && gram_images->size() != basis.size())
    throw ConfigError("reorth_against: gram image count mismatch");
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const Vec& probe = gram_images ? (*gram_images)[j] : basis[j];
      const double c = dot(probe, v);
      axpy(-c, basis[j], v);
    }
  }
}

PgkbState pgkb_start(const LinearOperator& A, const LinearOperator& M,
                     double alpha, const Vec& b, InnerSolver& inner,
                     PgkbOptions opts) {
  if (b.size() != A.rows()) throw ConfigError("pgkb_start: b size mismatch");
  if (M.rows() != A.cols() || M.cols() != A.cols())
    throw ConfigError("pgkb_start: M must be square matching cols(A)");

  PgkbState st;
  st.A = &A;
  st.M = &M;
  st.alpha = alpha;
  st.G = std::make_unique<GramOperator>(A, M, alpha);
  st.inner = &inner;
  st.opts = opts;

  st.beta1 = nrm2(b);
  if (st.beta1 == 0.0) throw ConfigError("pgkb_start: b is zero");
  st.U.push_back(scaled(b, 1.0 / st.beta1));

  Vec rhs = A.apply_adjoint(st.U[0]);
  Vec s = inner.solve(*st.G, rhs);
  // alpha_1^2 = s'Gs = s'A'u_1 since Gs = A'u_1.
  const double t = dot(s, rhs);
  const double floor = opts.breakdown_rel * st.beta1;
  if (!(t > floor * floor))
    throw NumericalError("pgkb_start: degenerate start (alpha_1 = 0)");
  const double alpha1 = std::sqrt(t);
  st.alphas.push_back(alpha1);
  st.W.push_back(scaled(s, 1.0 / alpha1));
  st.GW.push_back(scaled(rhs, 1.0 / alpha1));
  st.breakdown_tol = opts.breakdown_rel * std::max(alpha1, st.beta1);
  return st;
}

bool pgkb_extend(PgkbState& st) {
  if (st.breakdown) return false;
  if (!st.A || !st.G || !st.inner)
    throw ConfigError("pgkb_extend: state has no operator bindings");
  const std::size_t k = st.k();

  // next u: r = A w_k - alpha_k u_k, reorthogonalized in the 2-inner product
  Vec r = st.A->apply(st.W[k - 1]);
  axpy(-st.alphas[k - 1], st.U[k - 1], r);
  reorth_against(r, st.U);
  const double beta_next = nrm2(r);
  if (beta_next <= st.breakdown_tol) {
    st.breakdown = true;
    st.breakdown_reason = "beta";
    return false;
  }
  st.betas.push_back(beta_next);
  st.U.push_back(scaled(r, 1.0 / beta_next));

  // next w: solve G s = A'u_{k+1}, subtract beta_{k+1} w_k, reorthogonalize
  // in the G-inner product via the cached images, then renormalize against a
  // fresh G application.
  Vec rhs = st.A->apply_adjoint(st.U[k]);
  Vec s = st.inner->solve(*st.G, rhs);
  axpy(-beta_next, st.W[k - 1], s);
  reorth_against(s, st.W, &st.GW);
  Vec gs = st.G->apply(s);
  const double t = dot(s, gs);
  if (!(t > st.breakdown_tol * st.breakdown_tol)) {
    st.breakdown = true;
    st.breakdown_reason = "alpha";
    return false;
  }
  const double alpha_next = std::sqrt(t);
  st.alphas.push_back(alpha_next);
  st.W.push_back(scaled(s, 1.0 / alpha_next));
  st.GW.push_back(scaled(gs, 1.0 / alpha_next));
  return true;
}

Bidiagonal bidiagonal(const PgkbState& st, std::size_t k) {
  if (k == 0 || k > st.k()) throw ConfigError("bidiagonal: k out of range");
  Bidiagonal B;
  B.beta1 = st.beta1;
  B.alpha.assign(st.alphas.begin(), st.alphas.begin() + k);
  const std::size_t nb = std::min(k, st.betas.size());
  B.beta.assign(st.betas.begin(), st.betas.begin() + nb);
  return B;
}

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x62'6b'67'70;  // "pgkb"
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_vec(std::ofstream& out, const Vec& v) {
  put_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}
std::uint64_t get_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::ifstream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
Vec get_vec(std::ifstream& in) {
  Vec v(get_u64(in));
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  return v;
}
void put_vecs(std::ofstream& out, const std::vector<Vec>& vs) {
  put_u64(out, vs.size());
  for (const Vec& v : vs) put_vec(out, v);
}
std::vector<Vec> get_vecs(std::ifstream& in) {
  std::vector<Vec> vs(get_u64(in));
  for (Vec& v : vs) v = get_vec(in);
  return vs;
}

}  // namespace

void save_checkpoint(const std::string& path, const PgkbState& st) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("save_checkpoint: cannot open " + path);
  std::uint32_t header[2] = {kCheckpointMagic, kCheckpointVersion};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  put_f64(out, st.alpha);
  put_f64(out, st.beta1);
  put_f64(out, st.breakdown_tol);
  put_u64(out, st.breakdown ? 1 : 0);
  put_u64(out, st.breakdown_reason == "alpha"  ? 1
               : st.breakdown_reason == "beta" ? 2
                                               : 0);
  Vec alphas(st.alphas), betas(st.betas);
  put_vec(out, alphas);
  put_vec(out, betas);
  put_vecs(out, st.U);
  put_vecs(out, st.W);
  put_vecs(out, st.GW);
  if (!out) throw ConfigError("save_checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, PgkbState& st) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_checkpoint: cannot open " + path);
  std::uint32_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (header[0] != kCheckpointMagic)
    throw ConfigError("load_checkpoint: not a checkpoint file: " + path);
  if (header[1] != kCheckpointVersion)
    throw ConfigError("load_checkpoint: unsupported version");
  st.alpha = get_f64(in);
  st.beta1 = get_f64(in);
  st.breakdown_tol = get_f64(in);
  st.breakdown = get_u64(in) != 0;
  const std::uint64_t reason = get_u64(in);
  st.breakdown_reason = reason == 1 ? "alpha" : reason == 2 ? "beta" : "";
  Vec alphas = get_vec(in), betas = get_vec(in);
  st.alphas.assign(alphas.begin(), alphas.end());
  st.betas.assign(betas.begin(), betas.end());
  st.U = get_vecs(in);
  st.W = get_vecs(in);
  st.GW = get_vecs(in);
  if (!in) throw ConfigError("load_checkpoint: truncated file: " + path);
}

}  // namespace pgkb
