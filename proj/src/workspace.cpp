#include "bifrom/workspace.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "bifrom/error.hpp"

namespace bifrom::pipeline {
namespace {

constexpr const char* kManifest = "manifest.txt";
constexpr const char* kConfigFile = "config.txt";

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot move " + path.string() + " into place");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

namespace stage {
std::string local(bool overlap) { return overlap ? "local-on" : "local-off"; }
std::string selector(bool overlap, const std::string& what) { return local(overlap) + "." + what; }
}  // namespace stage

Workspace::Workspace(std::filesystem::path root, Config config)
    : root_(std::move(root)), config_(std::move(config)), store_(root_) {
  add_dependency(stage::kGlobal, stage::kSnapshots);
  add_dependency(stage::kPodNn, stage::kSnapshots);
  for (bool overlap : {true, false}) {
    add_dependency(stage::local(overlap), stage::kSnapshots);
    for (const char* what : {"classifier", "regression", "independent", "oracle"}) {
      add_dependency(stage::selector(overlap, what), stage::local(overlap));
    }
    add_dependency(stage::selector(overlap, "oracle"), stage::kReference);
  }
}

std::map<std::string, std::string> Workspace::read_manifest(const std::filesystem::path& path) {
  std::map<std::string, std::string> entries;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "malformed manifest line: " + line);
    entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto version = entries.find("format_version");
  if (version == entries.end() || version->second != kFormatVersion) {
    throw Error(ErrorCode::InvalidConfig, "unsupported workspace manifest version in " + path.string());
  }
  return entries;
}

Workspace Workspace::open(const std::filesystem::path& root, const std::optional<Config>& explicit_config,
                          bool create) {
  if (!create && !std::filesystem::exists(root / kManifest)) {
    throw Error(ErrorCode::MissingArtifact, "no workspace at " + root.string() + "; run `snapshots` first");
  }
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create workspace " + root.string());

  const std::filesystem::path manifest = root / kManifest;
  const bool existing = std::filesystem::exists(manifest);
  Config config;
  if (explicit_config) {
    config = *explicit_config;
  } else if (std::filesystem::exists(root / kConfigFile)) {
    config = load_config(root / kConfigFile);
  }
  apply_environment(config);
  config.validate();

  Workspace ws(root, config);
  if (existing) {
    ws.entries_ = read_manifest(manifest);
    if (ws.entries_["config_hash"] != config_hash(config)) {
      throw Error(ErrorCode::InvalidConfig,
                  "configuration differs from the one this workspace was built with (hash " +
                      ws.entries_["config_hash"] + ", given " + config_hash(config) + ")");
    }
    if (ws.entries_["seed"] != std::to_string(config.seed)) {
      throw Error(ErrorCode::InvalidConfig, "seed " + std::to_string(config.seed) +
                                                " differs from the workspace seed " + ws.entries_["seed"]);
    }
  } else {
    ws.entries_["format_version"] = kFormatVersion;
    ws.entries_["config_hash"] = config_hash(config);
    ws.entries_["seed"] = std::to_string(config.seed);
    write_text_atomic(root / kConfigFile, to_text(config));
    ws.write_manifest();
  }
  return ws;
}

Workspace Workspace::inspect(const std::filesystem::path& root) {
  const std::filesystem::path manifest = root / kManifest;
  if (!std::filesystem::exists(manifest)) {
    throw Error(ErrorCode::MissingArtifact, "no workspace at " + root.string());
  }
  Config config = load_config(root / kConfigFile);
  Workspace ws(root, config);
  ws.entries_ = read_manifest(manifest);
  config.seed = std::stoull(ws.entries_["seed"]);
  ws.config_ = config;
  return ws;
}

bool Workspace::complete(const std::string& name) const {
  const auto flag = entries_.find("stage." + name);
  if (flag == entries_.end() || flag->second != "done") return false;
  const auto files = entries_.find("files." + name);
  if (files == entries_.end()) return false;
  for (const std::string& f : split_commas(files->second)) {
    if (!store_.exists(f)) return false;
  }
  return true;
}

void Workspace::require(const std::string& name, const std::string& produced_by) const {
  if (!complete(name)) {
    throw Error(ErrorCode::MissingArtifact, "stage '" + name + "' has not been run or its files are gone; run `" +
                                                produced_by + "` first");
  }
}

void Workspace::begin_stage(const std::string& name) {
  invalidate(name);
  store_.clear_written();
}

void Workspace::finish_stage(const std::string& name) {
  std::set<std::string> files(store_.written().begin(), store_.written().end());
  std::string list;
  for (const std::string& f : files) list += (list.empty() ? "" : ",") + f;
  entries_["stage." + name] = "done";
  entries_["files." + name] = list;
  store_.clear_written();
  write_manifest();
}

void Workspace::invalidate(const std::string& name) {
  std::vector<std::string> pending{name};
  std::set<std::string> seen;
  bool changed = false;
  while (!pending.empty()) {
    const std::string s = pending.back();
    pending.pop_back();
    if (!seen.insert(s).second) continue;
    changed |= entries_.erase("stage." + s) > 0;
    changed |= entries_.erase("files." + s) > 0;
    const auto range = downstream_.equal_range(s);
    for (auto it = range.first; it != range.second; ++it) pending.push_back(it->second);
  }
  if (changed) write_manifest();
}

void Workspace::add_dependency(const std::string& name, const std::string& upstream) {
  downstream_.emplace(upstream, name);
}

std::string Workspace::manifest_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + "=" + value + "\n";
  return out;
}

void Workspace::write_manifest() const { write_text_atomic(root_ / kManifest, manifest_text()); }

WorkspaceLock::WorkspaceLock(const std::filesystem::path& root) : path_(root / ".lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    const std::string why = errno == EEXIST ? "another writer holds " : "cannot create ";
    throw Error(ErrorCode::IoFailure, "workspace locked: " + why + path_.string());
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkspaceLock::~WorkspaceLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace bifrom::pipeline
