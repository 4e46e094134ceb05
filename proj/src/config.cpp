#include "bifrom/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "bifrom/error.hpp"
#include "bifrom/random.hpp"

namespace bifrom::pipeline {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::InvalidConfig, "config: bad value for " + key + ": '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long out = to_long(key, v);
  if (out < -2147483647L || out > 2147483647L) bad_value(key, v);
  return static_cast<int>(out);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty()) bad_value(key, v);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Key {
  const char* name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
  bool hashed = true;
};

#define BIFROM_DOUBLE_KEY(name, field) \
  Key { name, [](Config& c, const std::string& v) { c.field = to_double(name, v); }, \
        [](const Config& c) { return fmt(c.field); } }
#define BIFROM_INT_KEY(name, field) \
  Key { name, [](Config& c, const std::string& v) { c.field = to_int(name, v); }, \
        [](const Config& c) { return std::to_string(c.field); } }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      BIFROM_INT_KEY("n_interior", fom.n_interior),
      BIFROM_DOUBLE_KEY("mu1_min", fom.box.mu1_min),
      BIFROM_DOUBLE_KEY("mu1_max", fom.box.mu1_max),
      BIFROM_DOUBLE_KEY("mu2_min", fom.box.mu2_min),
      BIFROM_DOUBLE_KEY("mu2_max", fom.box.mu2_max),
      BIFROM_DOUBLE_KEY("dt", fom.dt),
      BIFROM_DOUBLE_KEY("tol", fom.tol),
      Key{"max_steps", [](Config& c, const std::string& v) { c.fom.max_steps = to_long("max_steps", v); },
          [](const Config& c) { return std::to_string(c.fom.max_steps); }},
      BIFROM_DOUBLE_KEY("bias_amplitude", fom.bias_amplitude),
      BIFROM_DOUBLE_KEY("newton_tol", fom.newton_tol),
      BIFROM_INT_KEY("newton_max_iter", fom.newton_max_iter),
      BIFROM_INT_KEY("snapshot_n1", snapshot_grid.n1),
      BIFROM_INT_KEY("snapshot_n2", snapshot_grid.n2),
      BIFROM_INT_KEY("reference_n1", reference_grid.n1),
      BIFROM_INT_KEY("reference_n2", reference_grid.n2),
      BIFROM_DOUBLE_KEY("global_tol", global_tol),
      BIFROM_INT_KEY("k", k),
      BIFROM_INT_KEY("restarts", restarts),
      BIFROM_DOUBLE_KEY("tol1", tol1),
      BIFROM_DOUBLE_KEY("tol2", tol2),
      Key{"hidden", [](Config& c, const std::string& v) { c.hidden = to_int_list("hidden", v); },
          [](const Config& c) { return fmt_list(c.hidden); }},
      BIFROM_DOUBLE_KEY("learning_rate", learning_rate),
      BIFROM_INT_KEY("max_epochs_per_round", max_epochs_per_round),
      BIFROM_INT_KEY("max_rounds", max_rounds),
      BIFROM_DOUBLE_KEY("plateau_tol", plateau_tol),
      BIFROM_DOUBLE_KEY("podnn_tol", podnn_tol),
      BIFROM_DOUBLE_KEY("podnn_validation", podnn_validation),
      Key{"rom_method",
          [](Config& c, const std::string& v) {
            if (v == "newton") c.rom.method = rom::RomMethod::Newton;
            else if (v == "fixed-point") c.rom.method = rom::RomMethod::FixedPoint;
            else bad_value("rom_method", v);
          },
          [](const Config& c) { return std::string(c.rom.method == rom::RomMethod::Newton ? "newton" : "fixed-point"); }},
      BIFROM_DOUBLE_KEY("rom_tol", rom.tol),
      BIFROM_INT_KEY("rom_max_iter", rom.max_iter),
      BIFROM_DOUBLE_KEY("rom_fixed_point_dt", rom.fixed_point_dt),
      Key{"rom_fixed_point_max_iter",
          [](Config& c, const std::string& v) { c.rom.fixed_point_max_iter = to_long("rom_fixed_point_max_iter", v); },
          [](const Config& c) { return std::to_string(c.rom.fixed_point_max_iter); }},
      Key{"seed", [](Config& c, const std::string& v) { c.seed = to_u64("seed", v); },
          [](const Config& c) { return std::to_string(c.seed); }, false},
      Key{"threads", [](Config& c, const std::string& v) { c.threads = to_int("threads", v); },
          [](const Config& c) { return std::to_string(c.threads); }, false},
  };
  return table;
}

#undef BIFROM_DOUBLE_KEY
#undef BIFROM_INT_KEY

std::string render(const Config& config, bool hashed_only) {
  std::string out;
  for (const Key& key : keys()) {
    if (hashed_only && !key.hashed) continue;
    out += key.name;
    out += " = ";
    out += key.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace

void Config::validate() const {
  fom.validate();
  if (snapshot_grid.n1 < 2 || snapshot_grid.n2 < 2) throw Error(ErrorCode::InvalidConfig, "snapshot grid needs n1, n2 >= 2");
  if (reference_grid.n1 < 2 || reference_grid.n2 < 2) {
    throw Error(ErrorCode::InvalidConfig, "reference grid needs n1, n2 >= 2");
  }
  const auto in_unit = [](double t) { return t >= 0.0 && t < 1.0; };
  if (!in_unit(global_tol) || !in_unit(tol1) || !in_unit(tol2) || !in_unit(podnn_tol)) {
    throw Error(ErrorCode::InvalidConfig, "POD tolerances must lie in [0, 1)");
  }
  if (tol2 > tol1) throw Error(ErrorCode::InvalidConfig, "tol2 must not exceed tol1");
  if (k < 1 || k > snapshot_grid.size()) throw Error(ErrorCode::InvalidConfig, "k must lie in [1, snapshot count]");
  if (restarts < 1) throw Error(ErrorCode::InvalidConfig, "restarts must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw Error(ErrorCode::InvalidConfig, "hidden layer sizes must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
  if (max_epochs_per_round < 1 || max_rounds < 1) throw Error(ErrorCode::InvalidConfig, "epoch budgets must be >= 1");
  if (!(plateau_tol >= 0.0)) throw Error(ErrorCode::InvalidConfig, "plateau_tol must be >= 0");
  if (!in_unit(podnn_validation)) throw Error(ErrorCode::InvalidConfig, "podnn_validation must lie in [0, 1)");
  if (!(rom.tol > 0.0) || rom.max_iter < 1 || !(rom.fixed_point_dt > 0.0) || rom.fixed_point_max_iter < 1) {
    throw Error(ErrorCode::InvalidConfig, "reduced solver settings must be positive");
  }
  if (threads < 0) throw Error(ErrorCode::InvalidConfig, "threads must be >= 0");
}

ann::TrainConfig Config::train_config(std::uint64_t stream) const {
  ann::TrainConfig cfg;
  cfg.learning_rate = learning_rate;
  cfg.max_epochs_per_round = max_epochs_per_round;
  cfg.max_rounds = max_rounds;
  cfg.plateau_tol = plateau_tol;
  cfg.seed = derive_seed(seed, stream);
  return cfg;
}

Config parse_config(const std::string& text) {
  Config config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* match = nullptr;
    for (const Key& k : keys()) {
      if (key == k.name) match = &k;
    }
    if (!match) throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    match->set(config, value);
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_text(const Config& config) { return render(config, false); }

std::string config_hash(const Config& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : render(config, true)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_environment(Config& config) {
  const char* env = std::getenv("BIFROM_SEED");
  if (env == nullptr) return;
  config.seed = to_u64("BIFROM_SEED", trim(env));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : keys()) out.emplace_back(k.name);
  return out;
}

}  // namespace bifrom::pipeline
