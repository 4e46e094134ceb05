#include "bifrom/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "bifrom/error.hpp"

namespace bifrom::io {
namespace {

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::vector<unsigned char> encode(const Matrix& m) {
  std::vector<unsigned char> out(std::begin(kMatrixMagic), std::end(kMatrixMagic));
  const auto rows = static_cast<std::uint64_t>(m.rows());
  const auto cols = static_cast<std::uint64_t>(m.cols());
  out.reserve(24 + 8 * rows * cols);
  put_u64(out, rows);
  put_u64(out, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  return out;
}

std::string where(const std::filesystem::path& path) { return " (" + path.string() + ")"; }

}  // namespace

void save_matrix(const std::filesystem::path& path, const Matrix& matrix) {
  const std::vector<unsigned char> bytes = encode(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open matrix file for writing" + where(path));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing matrix file" + where(path));
}

void save_matrix_atomic(const std::filesystem::path& path, const Matrix& matrix) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  save_matrix(tmp, matrix);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot move matrix file into place" + where(path));
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, "matrix file not found" + where(path));
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "failed reading matrix file" + where(path));

  if (bytes.size() < 8) throw Error(ErrorCode::TruncatedFile, "matrix file shorter than its magic" + where(path));
  if (std::memcmp(bytes.data(), kMatrixMagic, 8) != 0) throw Error(ErrorCode::BadMagic, "not a matrix file" + where(path));
  if (bytes.size() < 24) throw Error(ErrorCode::TruncatedFile, "matrix header cut short" + where(path));

  const std::uint64_t rows = get_u64(bytes.data() + 8);
  const std::uint64_t cols = get_u64(bytes.data() + 16);
  const std::uint64_t limit = (std::uint64_t{1} << 60) / 8;
  if (rows > limit || cols > limit || (cols != 0 && rows > limit / cols)) {
    throw Error(ErrorCode::TruncatedFile, "matrix header declares an impossible size" + where(path));
  }
  const std::uint64_t expected = 24 + 8 * rows * cols;
  if (bytes.size() < expected) throw Error(ErrorCode::TruncatedFile, "matrix data cut short" + where(path));
  if (bytes.size() > expected) throw Error(ErrorCode::IoFailure, "trailing bytes after matrix data" + where(path));

  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* p = bytes.data() + 24;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, p += 8) m(i, j) = std::bit_cast<double>(get_u64(p));
  }
  return m;
}

}  // namespace bifrom::io
