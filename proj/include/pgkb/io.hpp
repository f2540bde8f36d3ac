#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pgkb/vec.hpp"

namespace pgkb::io {

// Matrix Market. Writing uses the dense "array" format or the sparse
// "coordinate" format (entries with |v| <= drop_tol dropped); reading accepts
// array and coordinate files with the general or symmetric qualifier.
void write_matrix_market(const std::string& path, const Eigen::MatrixXd& A);
void write_matrix_market_coordinate(const std::string& path,
                                    const Eigen::MatrixXd& A,
                                    double drop_tol = 0.0);
Eigen::MatrixXd read_matrix_market(const std::string& path);

// One value per line after a single header line.
void write_vector_csv(const std::string& path, const Vec& v,
                      const std::string& header = "value");
Vec read_vector_csv(const std::string& path);

// "key = value" lines.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv);
std::map<std::string, std::string> read_manifest(const std::string& path);

// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

}  // namespace pgkb::io
