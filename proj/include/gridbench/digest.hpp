#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "gridbench/types.hpp"

namespace gridbench {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const double> values);
std::string sha256_file(const std::filesystem::path& path);
/// Digest of a matrix's shape and column-major contents.
std::string matrix_digest(const Matrix& m);

}  // namespace gridbench
