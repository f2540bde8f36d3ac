// End-to-end tests of the pgkbreg binary. The ctest registration passes the
// binary's path as the first program argument.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_binary;

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = "'" + g_binary + "' " + args + " 2>&1";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), p)) > 0)
    r.out.append(buf.data(), got);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "pgkb_test_cli";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// key=value pairs of the last "summary ..." line
std::map<std::string, std::string> parse_summary(const std::string& out) {
  std::map<std::string, std::string> kv;
  std::istringstream is(out);
  std::string line, last;
  while (std::getline(is, line))
    if (line.rfind("summary ", 0) == 0) last = line;
  REQUIRE(!last.empty());
  std::istringstream ls(last);
  std::string tok;
  ls >> tok;  // "summary"
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos)
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> ls;
  std::istringstream is(s);
  std::string line;
  while (std::getline(is, line)) ls.push_back(line);
  return ls;
}

}  // namespace

TEST_CASE("generate is deterministic and writes the full file set") {
  const fs::path d1 = scratch() / "gen1";
  const fs::path d2 = scratch() / "gen2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  const std::string flags =
      "generate --problem gauss1d --n 48 --sigma 6 --reg tv --beta 1e-6 "
      "--noise 0.01 --seed 4 --out ";
  CHECK(run(flags + "'" + d1.string() + "'").code == 0);
  CHECK(run(flags + "'" + d2.string() + "'").code == 0);
  for (const char* f : {"A.mtx", "M.mtx", "L.mtx", "x_true.csv", "b_true.csv",
                        "b.csv", "manifest.txt"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
}

TEST_CASE("solve reports a summary and writes the history csv") {
  const fs::path csv = scratch() / "dp.csv";
  fs::remove(csv);
  const auto r = run(
      "solve --problem deriv2 --n 64 --reg firstdiff --noise 1e-3 --seed 2 "
      "--alpha 10 --method spr --stop dp --history '" +
      csv.string() + "'");
  CHECK(r.code == 0);
  const auto kv = parse_summary(r.out);
  CHECK(kv.at("method") == "spr");
  CHECK(kv.at("stop") == "dp");
  CHECK(kv.at("alpha") == "10");
  CHECK(kv.at("stopped") == "1");
  CHECK(kv.at("breakdown") == "0");
  CHECK(std::stod(kv.at("final_re")) > 0.0);
  CHECK(std::stoul(kv.at("k_stop")) >= 1);
  CHECK(std::stoul(kv.at("inner_iterations")) > 0);

  REQUIRE(fs::exists(csv));
  const auto ls = lines_of(slurp(csv));
  REQUIRE(ls.size() >= 3);
  CHECK(ls[0].rfind("# schema=spr-history-v1 problem=deriv2 n=64", 0) == 0);
  CHECK(ls[1] == "k,residual_norm,penalty_norm,rel_error,stopped_flag");
  // the stop row carries the flag
  const std::size_t k_stop = std::stoul(kv.at("k_stop"));
  const std::string& row = ls[1 + k_stop];
  CHECK(row.rfind(std::to_string(k_stop) + ",", 0) == 0);
  CHECK(row.back() == '1');
}

TEST_CASE("a solve on a loaded instance matches the inline run") {
  const fs::path dir = scratch() / "roundtrip";
  fs::remove_all(dir);
  REQUIRE(run("generate --problem deriv2 --n 48 --reg firstdiff --noise 1e-3 "
              "--seed 9 --out '" +
              dir.string() + "'")
              .code == 0);
  const std::string tail =
      " --alpha 5 --method spr --stop dp --inner-tol 1e-8";
  const auto inline_run = run(
      "solve --problem deriv2 --n 48 --reg firstdiff --noise 1e-3 --seed 9" +
      tail);
  const auto loaded_run =
      run("solve --instance '" + dir.string() + "'" + tail);
  REQUIRE(inline_run.code == 0);
  REQUIRE(loaded_run.code == 0);
  const auto a = parse_summary(inline_run.out);
  const auto b = parse_summary(loaded_run.out);
  // the exported values round-trip exactly; the loaded penalty operator is a
  // dense stand-in for the matrix-free one, so low-bit rounding may differ
  CHECK(a.at("k_stop") == b.at("k_stop"));
  CHECK(a.at("stopped") == b.at("stopped"));
  CHECK(a.at("argmin_k") == b.at("argmin_k"));
  for (const char* key : {"final_re", "min_re"}) {
    CAPTURE(key);
    const double va = std::stod(a.at(key)), vb = std::stod(b.at(key));
    CHECK(std::abs(va - vb) <= 1e-6 * std::abs(va));
  }
}

TEST_CASE("an alpha sweep writes one history per value") {
  const fs::path base = scratch() / "sweep.csv";
  for (const char* tag : {"0.1", "1", "10"})
    fs::remove(scratch() / (std::string("sweep_alpha") + tag + ".csv"));
  const auto r = run(
      "solve --problem deriv2 --n 48 --reg firstdiff --noise 1e-3 --seed 2 "
      "--alpha 0.1 --alpha 1 --alpha 10 --stop maxiter --max-iter 12 "
      "--history '" +
      base.string() + "'");
  CHECK(r.code == 0);
  std::size_t summaries = 0;
  for (const auto& line : lines_of(r.out))
    if (line.rfind("summary ", 0) == 0) ++summaries;
  CHECK(summaries == 3);
  CHECK(!fs::exists(base));  // the sweep splices the alpha into each name
  for (const char* tag : {"0.1", "1", "10"}) {
    CAPTURE(tag);
    const fs::path f = scratch() / (std::string("sweep_alpha") + tag + ".csv");
    REQUIRE(fs::exists(f));
    const auto ls = lines_of(slurp(f));
    CHECK(ls.size() == 2 + 12);  // schema + header + one row per step
  }
}

TEST_CASE("hybrid solves expose the selected parameters") {
  const auto r = run(
      "solve --problem deriv2 --n 64 --reg firstdiff --noise 1e-3 --seed 2 "
      "--alpha 10 --method hybrid --stop su --max-iter 40");
  CHECK(r.code == 0);
  const auto kv = parse_summary(r.out);
  CHECK(kv.count("mu_final") == 1);
  CHECK(std::stod(kv.at("mu_final")) > 0.0);
  CHECK(kv.at("omega_final") == "nan");  // secant mode has no gcv weight

  const auto w = run(
      "solve --problem deriv2 --n 64 --reg firstdiff --noise 1e-3 --seed 2 "
      "--alpha 10 --method hybrid --stop wgcv --max-iter 40");
  CHECK(w.code == 0);
  const auto wkv = parse_summary(w.out);
  CHECK(std::stod(wkv.at("omega_final")) == 1.0);
}

TEST_CASE("noise-free data runs to the iteration cap and fits tightly") {
  const fs::path dir = scratch() / "clean";
  const fs::path csv = scratch() / "clean.csv";
  fs::remove_all(dir);
  fs::remove(csv);
  REQUIRE(run("generate --problem deriv2 --n 48 --reg firstdiff --noise 0 "
              "--seed 1 --out '" +
              dir.string() + "'")
              .code == 0);
  const auto r = run("solve --instance '" + dir.string() +
                     "' --alpha 1 --stop maxiter --max-iter 30 "
                     "--inner-tol 1e-10 --history '" +
                     csv.string() + "'");
  CHECK(r.code == 0);
  const auto kv = parse_summary(r.out);
  CHECK(kv.at("stopped") == "1");  // with --stop maxiter the cap is the rule

  // ||b|| from the exported right-hand side
  double bnorm2 = 0.0;
  const auto blines = lines_of(slurp(dir / "b.csv"));
  for (std::size_t i = 1; i < blines.size(); ++i) {
    const double v = std::stod(blines[i]);
    bnorm2 += v * v;
  }
  const double bnorm = std::sqrt(bnorm2);

  const auto ls = lines_of(slurp(csv));
  REQUIRE(ls.size() == 2 + 30);
  const auto& last = ls.back();
  const double resid = std::stod(last.substr(last.find(',') + 1));
  CHECK(resid <= 1e-6 * bnorm);  // consistent system: residual driven down

  // residual norms decrease monotonically on the way
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const double v = std::stod(ls[i].substr(ls[i].find(',') + 1));
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("configuration errors exit with status 2") {
  CHECK(run("solve --method spr --stop wgcv --noise 1e-3").code == 2);
  CHECK(run("solve --method hybrid --stop dp --noise 1e-3").code == 2);
  CHECK(run("solve --method nonsense --noise 1e-3").code == 2);
  CHECK(run("solve --stop dp --noise 0").code == 2);     // dp needs noise
  CHECK(run("solve --alpha 0 --noise 1e-3").code == 2);  // rejected by parser
  CHECK(run("frobnicate").code == 2);                    // unknown subcommand
  CHECK(run("").code == 2);                              // missing subcommand
  CHECK(run("generate --problem deriv2 --n 32").code == 2);  // --out required
  CHECK(run("solve --instance /nonexistent/dir --noise 1e-3").code == 2);
  CHECK(run("verify wrong-level").code == 2);
  CHECK(run("--help").code == 0);
  CHECK(run("solve --help").code == 0);
}

TEST_CASE("options can come from a config file") {
  const fs::path cfg = scratch() / "solve.ini";
  {
    std::ofstream out(cfg);
    out << "[solve]\n"
        << "problem = deriv2\n"
        << "n = 48\n"
        << "reg = firstdiff\n"
        << "noise = 1e-3\n"
        << "seed = 2\n"
        << "alpha = 10\n"
        << "method = spr\n"
        << "stop = dp\n";
  }
  // the option works on either side of the subcommand name
  const auto r = run("solve --config '" + cfg.string() + "'");
  CHECK(r.code == 0);
  const auto kv = parse_summary(r.out);
  CHECK(kv.at("stop") == "dp");
  CHECK(kv.at("alpha") == "10");
  const auto r2 = run("--config '" + cfg.string() + "' solve");
  CHECK(r2.code == 0);
  CHECK(parse_summary(r2.out).at("stop") == "dp");

  // command line overrides the file
  const auto r3 = run("solve --config '" + cfg.string() + "' --alpha 2");
  CHECK(r3.code == 0);
  CHECK(parse_summary(r3.out).at("alpha") == "2");

  // unknown keys are rejected, not silently dropped
  const fs::path bad = scratch() / "bad.ini";
  {
    std::ofstream out(bad);
    out << "[solve]\nnoize = 1e-3\n";
  }
  CHECK(run("solve --config '" + bad.string() + "'").code == 2);
}

int main(int argc, char** argv) {
  doctest::Context ctx;
  std::vector<char*> pass;
  pass.push_back(argv[0]);
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (!a.empty() && a[0] != '-' && g_binary.empty())
      g_binary = a;
    else
      pass.push_back(argv[i]);
  }
  if (g_binary.empty()) {
    std::fprintf(stderr, "usage: test_cli <path-to-pgkbreg> [doctest args]\n");
    return 1;
  }
  ctx.applyCommandLine(static_cast<int>(pass.size()), pass.data());
  return ctx.run();
}
