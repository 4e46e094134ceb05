#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bifrom/ann.hpp"
#include "bifrom/fom.hpp"
#include "bifrom/rom.hpp"
#include "bifrom/types.hpp"

namespace bifrom::pipeline {

// Everything a workspace run depends on. Text form: one `key = value` per
// line, `#` starts a comment, unknown or repeated keys are rejected.
struct Config {
  fom::FomConfig fom{};
  TensorGrid snapshot_grid{8, 9};
  TensorGrid reference_grid{40, 41};
  std::uint64_t seed = 0;

  double global_tol = 1e-6;
  int k = 8;
  int restarts = 10;
  double tol1 = 1e-4;
  double tol2 = 1e-6;

  std::vector<int> hidden{2048, 1024};
  double learning_rate = 1e-3;
  int max_epochs_per_round = 500;
  int max_rounds = 20;
  double plateau_tol = 1e-10;

  double podnn_tol = 1e-6;
  double podnn_validation = 0.0;

  rom::RomSolverOptions rom{};

  // Worker threads; 0 picks the hardware count. Not part of the hash since
  // results do not depend on it.
  int threads = 0;

  void validate() const;
  ann::TrainConfig train_config(std::uint64_t stream) const;
};

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

// Canonical text: every key in a fixed order, doubles with 17 significant
// digits. parse_config(to_text(c)) reproduces c.
std::string to_text(const Config& config);

// FNV-1a 64 over the canonical text without the seed and thread lines,
// printed as 16 lowercase hex digits.
std::string config_hash(const Config& config);

// BIFROM_SEED, when set, replaces the seed. A malformed value is a
// configuration error.
void apply_environment(Config& config);

std::vector<std::string> config_keys();

}  // namespace bifrom::pipeline
