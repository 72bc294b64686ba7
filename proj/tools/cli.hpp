#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace atl::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Entry point of the `atlasso` tool; `args` excludes the program name. Returns the process exit code:
/// 0 success, 1 usage/config/input error, 2 single fit did not converge.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct DataTable {
    Eigen::VectorXd response;
    Eigen::MatrixXd design;
};

/// First column response, remaining columns features. Throws std::runtime_error
/// naming the offending row and column.
DataTable read_data_csv(const std::string& path, bool header);

/// Numbers separated by commas, whitespace or newlines.
Eigen::VectorXd read_vector_file(const std::string& path);

} // namespace atl::cli
