#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace rulewise {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Digest of the raw IEEE-754 bytes of a matrix plus its shape.
std::string matrix_digest(const Eigen::MatrixXd& m);

}  // namespace rulewise
