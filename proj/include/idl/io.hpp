#pragma once

#include <filesystem>
#include <string>

#include "idl/matrix.hpp"

namespace idl {

// Flat binary matrix container: little-endian u64 rows, u64 cols, then
// rows*cols little-endian f64 values in row-major order.
void save_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

// CSV for debugging / plotting
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path);

/// FNV-1a 64-bit digest of a file's bytes, hex encoded
std::string file_digest(const std::filesystem::path& path);

}  // namespace idl
