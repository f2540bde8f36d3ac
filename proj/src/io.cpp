#include "pgkb/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pgkb/errors.hpp"

namespace pgkb::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out.precision(17);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  return in;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& A) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << A.rows() << " " << A.cols() << "\n";
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) out << A(i, j) << "\n";
}

void write_matrix_market_coordinate(const std::string& path,
                                    const Eigen::MatrixXd& A,
                                    double drop_tol) {
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> nz;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      if (std::abs(A(i, j)) > drop_tol) nz.emplace_back(i, j, A(i, j));
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << nz.size() << "\n";
  for (const auto& [i, j, v] : nz)
    out << (i + 1) << " " << (j + 1) << " " << v << "\n";
}

Eigen::MatrixXd read_matrix_market(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("matrix market: empty file: " + path);

  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  std::transform(format.begin(), format.end(), format.begin(), ::tolower);
  std::transform(field.begin(), field.end(), field.begin(), ::tolower);
  std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(),
                 ::tolower);
  if (banner != "%%MatrixMarket" || object != "matrix")
    throw ConfigError("matrix market: bad banner in " + path);
  if (field != "real")
    throw ConfigError("matrix market: only real matrices supported");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ConfigError("matrix market: unsupported symmetry: " + symmetry);

  while (std::getline(in, line)) {
    if (!trim(line).empty() && trim(line)[0] != '%') break;
  }
  std::istringstream sizes(line);

  if (format == "array") {
    Eigen::Index m, n;
    if (!(sizes >> m >> n))
      throw ConfigError("matrix market: bad size line in " + path);
    Eigen::MatrixXd A(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i) {
        double v;
        if (!(in >> v))
          throw ConfigError("matrix market: truncated data in " + path);
        A(i, j) = v;
        if (symmetry == "symmetric") A(j, i) = v;  // array symmetric: lower
      }
    return A;
  }
  if (format == "coordinate") {
    Eigen::Index m, n;
    std::size_t nnz;
    if (!(sizes >> m >> n >> nnz))
      throw ConfigError("matrix market: bad size line in " + path);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
    for (std::size_t k = 0; k < nnz; ++k) {
      Eigen::Index i, j;
      double v;
      if (!(in >> i >> j >> v))
        throw ConfigError("matrix market: truncated data in " + path);
      if (i < 1 || i > m || j < 1 || j > n)
        throw ConfigError("matrix market: index out of range in " + path);
      A(i - 1, j - 1) = v;
      if (symmetry == "symmetric") A(j - 1, i - 1) = v;
    }
    return A;
  }
  throw ConfigError("matrix market: unsupported format: " + format);
}

void write_vector_csv(const std::string& path, const Vec& v,
                      const std::string& header) {
  auto out = open_out(path);
  out << header << "\n";
  for (double x : v) out << x << "\n";
}

Vec read_vector_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty file: " + path);
  Vec v;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    v.push_back(std::stod(line));
  }
  return v;
}

void write_manifest(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("manifest: malformed line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace pgkb::io
