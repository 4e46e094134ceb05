#include <doctest.h>

#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "bifrom/cli.hpp"
#include "bifrom/config.hpp"
#include "bifrom/error.hpp"
#include "bifrom/matrix_io.hpp"
#include "bifrom/persist.hpp"
#include "bifrom/pipeline.hpp"
#include "bifrom/plot.hpp"
#include "bifrom/workspace.hpp"
#include "fixtures.hpp"

using namespace bifrom;
using namespace bifrom::pipeline;
using fixtures::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no bifrom::Error thrown");
  return ErrorCode::IoFailure;
}

// Small but complete configuration for workspace tests.
Config small_config() {
  Config c;
  c.snapshot_grid = {4, 4};
  c.reference_grid = {5, 4};
  c.k = 2;
  c.restarts = 2;
  c.hidden = {8};
  c.max_epochs_per_round = 50;
  c.max_rounds = 2;
  return c;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (old_.empty()) {
      ::unsetenv(name_);
    } else {
      ::setenv(name_, old_.c_str(), 1);
    }
  }

 private:
  const char* name_;
  std::string old_;
};

int cli(const std::filesystem::path& ws, std::vector<std::string> args) {
  args.insert(args.begin(), {"-w", ws.string()});
  return run_cli(args);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("empty matrix file is the bare header") {
  TempDir dir("io");
  const auto p = dir.path() / "empty.mat";
  io::save_matrix(p, Matrix(0, 0));
  const std::string bytes = slurp(p);
  REQUIRE(bytes.size() == 24);
  CHECK(bytes.substr(0, 8) == "LROMMAT1");
  CHECK(bytes.substr(8) == std::string(16, '\0'));
  const Matrix back = io::load_matrix(p);
  CHECK(back.rows() == 0);
  CHECK(back.cols() == 0);
}

TEST_CASE("byte layout is little-endian row-major") {
  TempDir dir("io");
  const auto p = dir.path() / "m.mat";
  Matrix m(2, 3);
  m << 1.0, 2.0, 3.0,
       4.0, 5.0, 6.0;
  io::save_matrix(p, m);
  const std::string bytes = slurp(p);
  REQUIRE(bytes.size() == 24 + 8 * 6);
  auto u64_at = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(i)]);
    return v;
  };
  CHECK(u64_at(8) == 2);
  CHECK(u64_at(16) == 3);
  for (int k = 0; k < 6; ++k) CHECK(std::bit_cast<double>(u64_at(24 + 8 * static_cast<std::size_t>(k))) == k + 1.0);
}

TEST_CASE("random matrices round-trip bit for bit") {
  TempDir dir("io");
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = static_cast<int>(rng.below(9));
    const int cols = static_cast<int>(rng.below(9));
    Matrix m = fixtures::random_matrix(rng, rows, cols, -1e3, 1e3);
    if (m.size() > 0) m(0) = -0.0;
    if (m.size() > 1) m(1) = std::bit_cast<double>(0x7ff8000000000abcULL);
    if (m.size() > 2) m(2) = -std::numeric_limits<double>::infinity();
    if (m.size() > 3) m(3) = std::numeric_limits<double>::denorm_min();
    const auto p = dir.path() / ("r" + std::to_string(trial) + ".mat");
    io::save_matrix_atomic(p, m);
    CHECK(std::filesystem::file_size(p) == 24 + 8 * static_cast<std::uintmax_t>(m.size()));
    CHECK(bit_equal(io::load_matrix(p), m));
  }
  std::size_t entries = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    CHECK(e.path().extension() == ".mat");
    ++entries;
  }
  CHECK(entries == 20);
}

TEST_CASE("damaged matrix files") {
  TempDir dir("io");
  const auto p = dir.path() / "m.mat";
  Rng rng(1);
  io::save_matrix(p, fixtures::random_matrix(rng, 7, 3));
  const std::string good = slurp(p);

  spit(p, good.substr(0, good.size() - 1));
  CHECK(code_of([&] { io::load_matrix(p); }) == ErrorCode::TruncatedFile);
  spit(p, good.substr(0, 20));
  CHECK(code_of([&] { io::load_matrix(p); }) == ErrorCode::TruncatedFile);
  spit(p, good.substr(0, 5));
  CHECK(code_of([&] { io::load_matrix(p); }) == ErrorCode::TruncatedFile);

  std::string bad = good;
  bad[7] = '2';
  spit(p, bad);
  CHECK(code_of([&] { io::load_matrix(p); }) == ErrorCode::BadMagic);

  spit(p, good + "x");
  CHECK(code_of([&] { io::load_matrix(p); }) == ErrorCode::IoFailure);

  CHECK(code_of([&] { io::load_matrix(dir.path() / "absent.mat"); }) == ErrorCode::MissingArtifact);
  CHECK(code_of([&] { io::save_matrix(dir.path() / "no" / "such" / "dir.mat", Matrix(1, 1)); }) ==
        ErrorCode::IoFailure);
}

TEST_CASE("configuration text") {
  const Config defaults;
  const Config parsed = parse_config(to_text(defaults));
  CHECK(to_text(parsed) == to_text(defaults));
  CHECK(config_hash(parsed) == config_hash(defaults));
  CHECK(config_hash(defaults).size() == 16);

  const Config c = parse_config("# comment\nk = 4\nhidden = 64, 32\n\nsnapshot_n1=6\nsnapshot_n2 = 7 # trailing\n");
  CHECK(c.k == 4);
  CHECK(c.hidden == std::vector<int>{64, 32});
  CHECK(c.snapshot_grid.n1 == 6);
  CHECK(c.snapshot_grid.n2 == 7);

  CHECK(code_of([] { parse_config("colour = blue\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("k = 2\nk = 3\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("k = two\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("k\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("tol2 = 1e-3\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("rom_method = secant\n"); }) == ErrorCode::InvalidConfig);

  for (const auto& key : config_keys()) CHECK(to_text(defaults).find(key + " = ") != std::string::npos);
}

TEST_CASE("hash ignores seed and threads") {
  Config a;
  Config b = a;
  b.seed = 17;
  b.threads = 3;
  CHECK(config_hash(a) == config_hash(b));
  b.k = 7;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("seed from the environment") {
  Config c;
  {
    ScopedEnv env("BIFROM_SEED", "12345");
    apply_environment(c);
    CHECK(c.seed == 12345);
  }
  {
    ScopedEnv env("BIFROM_SEED", "12x");
    CHECK(code_of([&] { apply_environment(c); }) == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("artifacts round-trip through the store") {
  TempDir dir("store");
  Store store(dir.path());
  const auto& snaps = fixtures::snapshots_8x9();
  save(store, "snaps", snaps);
  const auto back = load_snapshot_set(store, "snaps");
  CHECK(bit_equal(back.states, snaps.states));
  CHECK(back.params == snaps.params);
  CHECK(back.grid.n1 == 8);
  CHECK(back.steps == snaps.steps);
  CHECK(back.seed == snaps.seed);

  const auto& local = fixtures::local_8x9();
  save(store, "local", local);
  const auto lb = load_local_rom_set(store, "local");
  REQUIRE(lb.k() == local.k());
  CHECK(lb.clustering.labels == local.clustering.labels);
  for (int k = 0; k < local.k(); ++k) {
    const auto& a = local.roms[static_cast<std::size_t>(k)];
    const auto& b = lb.roms[static_cast<std::size_t>(k)];
    CHECK(bit_equal(a.basis.modes, b.basis.modes));
    CHECK(bit_equal(a.a_diff, b.a_diff));
    for (int i = 0; i < a.dim(); ++i) CHECK(bit_equal(a.tensor[static_cast<std::size_t>(i)], b.tensor[static_cast<std::size_t>(i)]));
    CHECK(lb.bases.clusters[static_cast<std::size_t>(k)].neighbors == local.bases.clusters[static_cast<std::size_t>(k)].neighbors);
  }

  const auto net = ann::mlp_init({2, 5, 3}, ann::OutputMode::Softmax, 8);
  save(store, "net", net);
  const auto nb = load_mlp(store, "net");
  CHECK(nb.dims == net.dims);
  CHECK(nb.mode == net.mode);
  CHECK(bit_equal(nb.layers[1].weights, net.layers[1].weights));

  CHECK(code_of([&] { load_mlp(store, "nothing"); }) == ErrorCode::MissingArtifact);
}

TEST_CASE("workspace stages, isolation and regeneration") {
  TempDir dir("ws");
  const auto root = dir.path() / "w";
  {
    Workspace ws = Workspace::open(root, small_config());
    CHECK_FALSE(ws.complete(stage::kSnapshots));
    CHECK(code_of([&] { ws.require(stage::kSnapshots, "snapshots"); }) == ErrorCode::MissingArtifact);
    run_snapshots(ws);
    build_global(ws);
    CHECK(ws.complete(stage::kSnapshots));
    CHECK(ws.complete(stage::kGlobal));
    CHECK(ws.manifest_text().find("format_version=1\n") != std::string::npos);
  }
  const auto snap_file = root / "snapshots" / "states.mat";
  const auto global_file = root / "global" / "tensor.mat";
  const std::string snap_bytes = slurp(snap_file);
  const std::string global_bytes = slurp(global_file);
  const auto snap_time = std::filesystem::last_write_time(snap_file);

  std::filesystem::remove(global_file);
  {
    Workspace ws = Workspace::open(root, std::nullopt);
    CHECK(ws.complete(stage::kSnapshots));
    CHECK_FALSE(ws.complete(stage::kGlobal));
    run_snapshots(ws);
    build_global(ws);
    CHECK(ws.complete(stage::kGlobal));
  }
  CHECK(slurp(snap_file) == snap_bytes);
  CHECK(std::filesystem::last_write_time(snap_file) == snap_time);
  CHECK(slurp(global_file) == global_bytes);

  // Regenerating an upstream stage drops everything built on it.
  {
    Workspace ws = Workspace::open(root, std::nullopt);
    run_snapshots(ws, true);
    CHECK(ws.complete(stage::kSnapshots));
    CHECK_FALSE(ws.complete(stage::kGlobal));
  }

  Config other = small_config();
  other.k = 3;
  CHECK(code_of([&] { Workspace::open(root, other); }) == ErrorCode::InvalidConfig);
  {
    ScopedEnv env("BIFROM_SEED", "5");
    CHECK(code_of([&] { Workspace::open(root, std::nullopt); }) == ErrorCode::InvalidConfig);
  }
  CHECK(code_of([&] { Workspace::open(dir.path() / "absent", std::nullopt, false); }) ==
        ErrorCode::MissingArtifact);
}

TEST_CASE("single writer") {
  TempDir dir("lock");
  {
    WorkspaceLock first(dir.path());
    CHECK(code_of([&] { WorkspaceLock second(dir.path()); }) == ErrorCode::IoFailure);
  }
  CHECK_NOTHROW(WorkspaceLock again(dir.path()));
}

TEST_CASE("command-line exit codes") {
  TempDir dir("cli");
  const auto ws = dir.path() / "w";
  CHECK(cli(ws, {"evaluate", "--method", "global"}) == kExitMissing);
  CHECK_FALSE(std::filesystem::exists(ws / "manifest.txt"));
  CHECK(cli(ws, {"frobnicate"}) == kExitConfig);
  CHECK(cli(ws, {"build", "--method", "sideways"}) == kExitConfig);

  const auto bad = dir.path() / "bad.txt";
  spit(bad, "snapshot_n1 = 4\nflux_capacitor = 1\n");
  CHECK(cli(ws, {"-c", bad.string(), "snapshots"}) == kExitConfig);

  const auto slow = dir.path() / "slow.txt";
  spit(slow, "snapshot_n1 = 3\nsnapshot_n2 = 3\nmax_steps = 10\n");
  CHECK(cli(dir.path() / "slow", {"-c", slow.string(), "snapshots"}) == kExitConvergence);

  CHECK(exit_code_for(ErrorCode::BadMagic) == kExitMissing);
  CHECK(exit_code_for(ErrorCode::TruncatedFile) == kExitMissing);
  CHECK(exit_code_for(ErrorCode::SingularJacobian) == kExitConvergence);
  CHECK(exit_code_for(ErrorCode::InvalidK) == kExitConfig);
}

TEST_CASE("72 snapshots through the command line") {
  TempDir dir("cli72");
  const auto ws = dir.path() / "w";
  REQUIRE(cli(ws, {"snapshots"}) == kExitOk);
  const Matrix states = io::load_matrix(ws / "snapshots" / "states.mat");
  CHECK(states.cols() == 72);
  CHECK(cli(ws, {"evaluate", "--method", "podnn"}) == kExitMissing);
}

TEST_CASE("small pipeline through the command line") {
  TempDir dir("clirun");
  const auto cfg_file = dir.path() / "small.txt";
  spit(cfg_file, to_text(small_config()));
  const auto ws = dir.path() / "w";
  const std::string c = cfg_file.string();
  REQUIRE(cli(ws, {"-c", c, "snapshots"}) == kExitOk);
  CHECK(cli(ws, {"compare"}) == kExitMissing);
  REQUIRE(cli(ws, {"reference"}) == kExitOk);
  REQUIRE(cli(ws, {"build", "--method", "global"}) == kExitOk);
  REQUIRE(cli(ws, {"build", "--method", "local", "--criterion", "regression"}) == kExitOk);
  REQUIRE(cli(ws, {"build", "--method", "podnn"}) == kExitOk);
  REQUIRE(cli(ws, {"evaluate", "--method", "local"}) == kExitOk);
  REQUIRE(cli(ws, {"compare"}) == kExitOk);
  REQUIRE(cli(ws, {"plot"}) == kExitOk);

  const std::string errors = slurp(ws / "reports" / "errors.csv");
  CHECK(errors.rfind("method,samples,mean_l2,mean_linf\n", 0) == 0);
  CHECK(errors.find("\nglobal,16,") != std::string::npos);
  CHECK(errors.find("\nlocal-regression,16,") != std::string::npos);
  CHECK(errors.find("\nlocal-oracle,16,") != std::string::npos);
  CHECK(errors.find("\npodnn,16,") != std::string::npos);
  CHECK(std::filesystem::exists(ws / "reports" / "method_global_points.csv"));
  CHECK(slurp(ws / "diagram.csv").rfind("mu1,mu2,observable,converged\n", 0) == 0);
  CHECK(slurp(ws / "diagram.svg").find("<svg") != std::string::npos);
  CHECK(slurp(ws / "diagram.txt").rfind("mu1 mu2 value\n", 0) == 0);

  // A second writer is refused while the lock is held.
  {
    WorkspaceLock held(ws);
    CHECK(cli(ws, {"build", "--method", "global", "--force"}) == kExitConfig);
  }
}

TEST_CASE("diagram CSV parsing and plotting") {
  eval::BifurcationDiagram d;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 4; ++i) d.points.push_back({0.5 + 0.5 * i, 0.06 + 0.045 * j, 0.1 * i * j, i != 2, -1});
  }
  std::stringstream csv;
  eval::write_diagram_csv(csv, d);
  const auto back = plot::read_diagram_csv(csv);
  REQUIRE(back.points.size() == d.points.size());
  for (std::size_t k = 0; k < d.points.size(); ++k) {
    CHECK(back.points[k].mu1 == d.points[k].mu1);
    CHECK(back.points[k].observable == d.points[k].observable);
    CHECK(back.points[k].converged == d.points[k].converged);
  }
  std::ostringstream svg;
  plot::write_svg(svg, back);
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("</svg>") != std::string::npos);
  std::ostringstream cols;
  plot::write_columns(cols, back);
  std::istringstream lines(cols.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 13);

  std::istringstream wrong("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(plot::read_diagram_csv(wrong), Error);
}

}  // TEST_SUITE
