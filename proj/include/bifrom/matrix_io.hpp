#pragma once

#include <filesystem>

#include "bifrom/types.hpp"

namespace bifrom::io {

// Binary matrix file: "LROMMAT1", rows and cols as u64 little-endian, then
// rows * cols IEEE-754 doubles little-endian in row-major order. Values are
// copied bit for bit, so NaN payloads and signed zeros survive.
inline constexpr char kMatrixMagic[8] = {'L', 'R', 'O', 'M', 'M', 'A', 'T', '1'};

void save_matrix(const std::filesystem::path& path, const Matrix& matrix);
Matrix load_matrix(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never see a partial file.
void save_matrix_atomic(const std::filesystem::path& path, const Matrix& matrix);

}  // namespace bifrom::io
