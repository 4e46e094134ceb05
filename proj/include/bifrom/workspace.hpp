#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bifrom/config.hpp"
#include "bifrom/persist.hpp"

namespace bifrom::pipeline {

// Manifest: UTF-8 `key=value` lines, sorted by key.
//   format_version=1
//   config_hash=<16 hex digits>
//   seed=<u64>
//   stage.<name>=done
//   files.<name>=<comma-separated artifact names>
// A stage counts as complete only while its flag is set and every file it
// recorded is still present.
class Workspace {
 public:
  static constexpr const char* kFormatVersion = "1";

  // Opens (creating if needed) the workspace at root. An explicit config
  // must hash to the value recorded in an existing manifest; without one the
  // workspace's own config.txt is used, or the defaults for a new workspace.
  // BIFROM_SEED is applied in both cases, and a seed differing from the
  // manifest's is rejected as well.
  // With create == false a missing workspace is a MissingArtifact error.
  static Workspace open(const std::filesystem::path& root, const std::optional<Config>& explicit_config,
                        bool create = true);

  // Read-only view of an existing workspace; never writes.
  static Workspace inspect(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const Config& config() const { return config_; }
  Store& store() { return store_; }
  const Store& store() const { return store_; }

  bool complete(const std::string& stage) const;
  // Throws MissingArtifact naming the stage and the command that produces it.
  void require(const std::string& stage, const std::string& produced_by) const;

  // Records the files written through the store since begin_stage().
  void begin_stage(const std::string& stage);
  void finish_stage(const std::string& stage);
  // Drops the flag of a stage and of everything registered as depending on
  // it. Files are left in place and overwritten on rebuild.
  void invalidate(const std::string& stage);
  void add_dependency(const std::string& stage, const std::string& upstream);

  std::string manifest_text() const;

 private:
  Workspace(std::filesystem::path root, Config config);
  void write_manifest() const;
  static std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);

  std::filesystem::path root_;
  Config config_;
  Store store_;
  std::map<std::string, std::string> entries_;
  std::multimap<std::string, std::string> downstream_;
};

// Exclusive writer lock: a `.lock` file created with O_EXCL, removed on
// destruction. A second writer fails with IoFailure.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(const std::filesystem::path& root);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Stage names.
namespace stage {
inline constexpr const char* kSnapshots = "snapshots";
inline constexpr const char* kReference = "reference";
inline constexpr const char* kGlobal = "global";
inline constexpr const char* kPodNn = "podnn";
std::string local(bool overlap);                            // local-on / local-off
std::string selector(bool overlap, const std::string& what);  // local-on.classifier, ...
}  // namespace stage

}  // namespace bifrom::pipeline
