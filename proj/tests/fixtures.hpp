#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "bifrom/fom.hpp"
#include "bifrom/random.hpp"
#include "bifrom/select.hpp"

namespace fixtures {

using bifrom::Matrix;
using bifrom::Vector;

inline const bifrom::fom::FomConfig& default_config() {
  static const bifrom::fom::FomConfig cfg{};
  return cfg;
}

// 8 x 9 snapshots at the default configuration, computed once per process.
inline const bifrom::fom::SnapshotSet& snapshots_8x9() {
  static const bifrom::fom::SnapshotSet set = bifrom::fom::generate_snapshots(default_config(), {8, 9}, 0);
  return set;
}

inline const bifrom::select::LocalRomSet& local_8x9() {
  static const bifrom::select::LocalRomSet set = [] {
    const auto ops = bifrom::fom::assemble_operators(default_config());
    return bifrom::select::build_local_roms(snapshots_8x9(), ops, {});
  }();
  return set;
}

inline Vector random_vector(bifrom::Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline Matrix random_matrix(bifrom::Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("bifrom_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
