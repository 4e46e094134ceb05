#include "bifrom/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

#include "bifrom/error.hpp"
#include "bifrom/parallel.hpp"

namespace bifrom::pipeline {
namespace {

constexpr std::uint64_t kClassifierStream = 1;
constexpr std::uint64_t kRegressionStream = 2;
constexpr std::uint64_t kIndependentStream = 3;
constexpr std::uint64_t kPodNnStream = 4;

double since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void note(const std::string& text) { std::cerr << text << '\n'; }

std::string secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", s);
  return buf;
}

bool skip(const Workspace& ws, const std::string& name, bool force) {
  if (force || !ws.complete(name)) return false;
  note(name + ": up to date");
  return true;
}

std::string local_dir(bool overlap) { return stage::local(overlap); }

const char* selector_name(select::Criterion c) {
  switch (c) {
    case select::Criterion::ClassifierAnn: return "classifier";
    case select::Criterion::RegressionAnnJoint: return "regression";
    case select::Criterion::RegressionAnnIndependent: return "independent";
    case select::Criterion::OracleOptimal: return "oracle";
    default: return nullptr;
  }
}

fom::SnapshotSet generate(const Config& cfg, const TensorGrid& grid, const std::string& what) {
  const auto start = std::chrono::steady_clock::now();
  fom::SnapshotSet set;
  try {
    set = fom::generate_snapshots(cfg.fom, grid, cfg.seed);
  } catch (const Error& e) {
    throw Error(e.code(), what + ": " + e.what());
  }
  note(what + ": " + std::to_string(set.count()) + " steady states (" + std::to_string(grid.n1) + " x " +
       std::to_string(grid.n2) + ") in " + secs(since(start)));
  return set;
}

}  // namespace

void run_snapshots(Workspace& ws, bool force) {
  if (skip(ws, stage::kSnapshots, force)) return;
  ws.begin_stage(stage::kSnapshots);
  save(ws.store(), "snapshots", generate(ws.config(), ws.config().snapshot_grid, "snapshots"));
  ws.finish_stage(stage::kSnapshots);
}

void run_reference(Workspace& ws, bool force) {
  if (skip(ws, stage::kReference, force)) return;
  ws.begin_stage(stage::kReference);
  save(ws.store(), "reference", generate(ws.config(), ws.config().reference_grid, "reference"));
  ws.finish_stage(stage::kReference);
}

void build_global(Workspace& ws, bool force) {
  ws.require(stage::kSnapshots, "snapshots");
  if (skip(ws, stage::kGlobal, force)) return;
  const auto start = std::chrono::steady_clock::now();
  const fom::SnapshotSet snaps = load_snapshot_set(ws.store(), "snapshots");
  const fom::DiscreteOperators ops = fom::assemble_operators(ws.config().fom);
  ws.begin_stage(stage::kGlobal);
  const pod::Basis basis = pod::compute_pod(snaps.states, ws.config().global_tol, ops.h());
  save(ws.store(), "global", rom::assemble_reduced(basis, ops));
  ws.finish_stage(stage::kGlobal);
  note("global: L = " + std::to_string(basis.dim()) + " in " + secs(since(start)));
}

void build_podnn(Workspace& ws, bool force) {
  ws.require(stage::kSnapshots, "snapshots");
  if (skip(ws, stage::kPodNn, force)) return;
  const auto start = std::chrono::steady_clock::now();
  const Config& cfg = ws.config();
  const fom::SnapshotSet snaps = load_snapshot_set(ws.store(), "snapshots");
  ws.begin_stage(stage::kPodNn);
  const podnn::PodNnModel model = podnn::build_podnn(snaps, cfg.fom.mesh_width(), cfg.fom.box, cfg.podnn_tol,
                                                     cfg.hidden, cfg.train_config(kPodNnStream), cfg.podnn_validation);
  save(ws.store(), "podnn", model);
  ws.finish_stage(stage::kPodNn);
  note("podnn: L = " + std::to_string(model.basis.dim()) + ", loss " + eval::format_double(model.final_loss) +
       " after " + std::to_string(model.epochs) + " epochs in " + secs(since(start)));
}

void build_local(Workspace& ws, bool overlap, std::optional<select::Criterion> criterion, bool force) {
  ws.require(stage::kSnapshots, "snapshots");
  const std::string name = stage::local(overlap);
  if (!skip(ws, name, force)) {
    const auto start = std::chrono::steady_clock::now();
    const Config& cfg = ws.config();
    const fom::SnapshotSet snaps = load_snapshot_set(ws.store(), "snapshots");
    const fom::DiscreteOperators ops = fom::assemble_operators(cfg.fom);
    select::LocalRomOptions options;
    options.k = cfg.k;
    options.restarts = cfg.restarts;
    options.seed = cfg.seed;
    options.tol1 = cfg.tol1;
    options.tol2 = cfg.tol2;
    options.overlap = overlap;
    ws.begin_stage(name);
    const select::LocalRomSet set = select::build_local_roms(snaps, ops, options);
    save(ws.store(), local_dir(overlap) + "/roms", set);
    save(ws.store(), local_dir(overlap) + "/error_table", select::build_error_table(set, snaps, cfg.rom));
    ws.finish_stage(name);
    std::string dims;
    for (const auto& r : set.roms) dims += (dims.empty() ? "" : " ") + std::to_string(r.dim());
    note(name + ": K = " + std::to_string(set.k()) + ", dims [" + dims + "] in " + secs(since(start)));
  }

  if (criterion) {
    if (selector_name(*criterion)) build_selector(ws, overlap, *criterion, force);
    return;
  }
  for (select::Criterion c : {select::Criterion::ClassifierAnn, select::Criterion::RegressionAnnJoint,
                              select::Criterion::RegressionAnnIndependent}) {
    build_selector(ws, overlap, c, force);
  }
  if (ws.complete(stage::kReference)) build_selector(ws, overlap, select::Criterion::OracleOptimal, force);
}

void build_selector(Workspace& ws, bool overlap, select::Criterion criterion, bool force) {
  const char* what = selector_name(criterion);
  if (!what) return;
  ws.require(stage::local(overlap), std::string("build --method local --overlap ") + (overlap ? "on" : "off"));
  if (criterion == select::Criterion::OracleOptimal) ws.require(stage::kReference, "reference");
  const std::string name = stage::selector(overlap, what);
  if (skip(ws, name, force)) return;

  const auto start = std::chrono::steady_clock::now();
  const Config& cfg = ws.config();
  const LocalModel model = load_local(ws, overlap);
  const std::string dir = local_dir(overlap) + "/" + what;
  ws.begin_stage(name);
  switch (criterion) {
    case select::Criterion::ClassifierAnn: {
      const ann::TrainResult r =
          select::train_classifier_selector(model.artifacts, cfg.hidden, cfg.train_config(kClassifierStream));
      if (!r.perfect_match) {
        note(name + ": training accuracy " + eval::format_double(r.accuracy) + " after " +
             std::to_string(r.rounds) + " rounds (no perfect match)");
      }
      save(ws.store(), dir, r.net);
      break;
    }
    case select::Criterion::RegressionAnnJoint:
      save(ws.store(), dir,
           select::train_regression_selector(model.artifacts, *model.artifacts.error_table, cfg.hidden,
                                             cfg.train_config(kRegressionStream)));
      break;
    case select::Criterion::RegressionAnnIndependent: {
      const auto nets = select::train_independent_selectors(model.artifacts, *model.artifacts.error_table, cfg.hidden,
                                                            cfg.train_config(kIndependentStream));
      for (std::size_t k = 0; k < nets.size(); ++k) save(ws.store(), dir + "/net" + std::to_string(k), nets[k]);
      break;
    }
    case select::Criterion::OracleOptimal: {
      const fom::SnapshotSet reference = load_snapshot_set(ws.store(), "reference");
      const select::ReferenceErrors errors =
          select::reference_errors(model.roms, model.snapshots, reference, cfg.fom.box, cfg.rom);
      save(ws.store(), dir, errors);
      save(ws.store(), dir, select::oracle_selection(errors, reference));
      break;
    }
    default: break;
  }
  ws.finish_stage(name);
  note(name + ": done in " + secs(since(start)));
}

LocalModel load_local(const Workspace& ws, bool overlap) {
  ws.require(stage::kSnapshots, "snapshots");
  ws.require(stage::local(overlap), std::string("build --method local --overlap ") + (overlap ? "on" : "off"));
  const Store& store = ws.store();
  const std::string dir = local_dir(overlap);
  LocalModel m;
  m.snapshots = load_snapshot_set(store, "snapshots");
  m.roms = load_local_rom_set(store, dir + "/roms");
  m.artifacts = select::base_artifacts(m.roms, m.snapshots, ws.config().fom.box);
  m.artifacts.error_table = load_error_table(store, dir + "/error_table");
  if (ws.complete(stage::selector(overlap, "classifier"))) m.artifacts.classifier = load_mlp(store, dir + "/classifier");
  if (ws.complete(stage::selector(overlap, "regression"))) {
    m.artifacts.regression = load_regression_selector(store, dir + "/regression");
  }
  if (ws.complete(stage::selector(overlap, "independent"))) {
    std::vector<select::RegressionSelector> nets;
    for (int k = 0; k < m.roms.k(); ++k) {
      nets.push_back(load_regression_selector(store, dir + "/independent/net" + std::to_string(k)));
    }
    m.artifacts.independent = std::move(nets);
  }
  if (ws.complete(stage::selector(overlap, "oracle"))) m.artifacts.oracle = load_oracle_labels(store, dir + "/oracle");
  return m;
}

std::optional<MethodKind> parse_method(const std::string& name) {
  if (name == "global") return MethodKind::Global;
  if (name == "local") return MethodKind::Local;
  if (name == "podnn") return MethodKind::PodNn;
  if (name == "reference") return MethodKind::Reference;
  return std::nullopt;
}

std::string method_tag(const MethodSpec& spec) {
  switch (spec.kind) {
    case MethodKind::Global: return "global";
    case MethodKind::PodNn: return "podnn";
    case MethodKind::Reference: return "reference";
    case MethodKind::Local: return eval::local_tag(spec.criterion) + (spec.overlap ? "" : "-no-overlap");
  }
  return "unknown";
}

eval::BifurcationDiagram evaluate(Workspace& ws, const MethodSpec& spec) {
  const Config& cfg = ws.config();
  const std::vector<ParameterPoint> points = grid_points(cfg.fom.box, cfg.reference_grid);
  const auto start = std::chrono::steady_clock::now();
  eval::BifurcationDiagram diagram;
  switch (spec.kind) {
    case MethodKind::Global: {
      ws.require(stage::kGlobal, "build --method global");
      const fom::SnapshotSet snaps = load_snapshot_set(ws.store(), "snapshots");
      const rom::ReducedOperators global = load_reduced(ws.store(), "global");
      diagram = eval::bifurcation_diagram(eval::global_rom_method(global, snaps, cfg.fom.box, cfg.rom), points);
      break;
    }
    case MethodKind::Local: {
      const LocalModel model = load_local(ws, spec.overlap);
      // Fails early with MissingArtifact when the criterion's artifact is absent.
      select::select_cluster(spec.criterion, model.artifacts, points.front());
      eval::Method method =
          eval::local_rom_method(model.roms, model.artifacts, spec.criterion, model.snapshots, cfg.rom);
      diagram = eval::bifurcation_diagram(method, points);
      break;
    }
    case MethodKind::PodNn: {
      ws.require(stage::kPodNn, "build --method podnn");
      const podnn::PodNnModel model = load_podnn(ws.store(), "podnn");
      diagram = eval::bifurcation_diagram(eval::podnn_method(model), points);
      break;
    }
    case MethodKind::Reference: {
      ws.require(stage::kReference, "reference");
      const fom::SnapshotSet reference = load_snapshot_set(ws.store(), "reference");
      diagram = eval::bifurcation_diagram(eval::reference_method(reference, cfg.fom.box), points);
      break;
    }
  }
  diagram.source = method_tag(spec);
  note("evaluate " + diagram.source + ": " + std::to_string(points.size()) + " points in " + secs(since(start)));
  return diagram;
}

std::vector<eval::MethodReport> compare(Workspace& ws) {
  ws.require(stage::kReference, "reference");
  const Config& cfg = ws.config();
  const fom::SnapshotSet reference = load_snapshot_set(ws.store(), "reference");
  std::vector<eval::MethodReport> reports;

  const bool have_snapshots = ws.complete(stage::kSnapshots);
  const int samples = cfg.snapshot_grid.size();
  if (have_snapshots && ws.complete(stage::kGlobal)) {
    const fom::SnapshotSet snaps = load_snapshot_set(ws.store(), "snapshots");
    const rom::ReducedOperators global = load_reduced(ws.store(), "global");
    reports.push_back(
        eval::evaluate_method(eval::global_rom_method(global, snaps, cfg.fom.box, cfg.rom), reference, samples));
  }
  for (bool overlap : {true, false}) {
    if (!have_snapshots || !ws.complete(stage::local(overlap))) continue;
    build_selector(ws, overlap, select::Criterion::OracleOptimal);
    const LocalModel model = load_local(ws, overlap);
    const select::ReferenceErrors errors =
        load_reference_errors(ws.store(), local_dir(overlap) + "/oracle");
    for (select::Criterion c : select::all_criteria()) {
      try {
        select::select_cluster(c, model.artifacts, reference.params.front());
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MissingArtifact) continue;
        throw;
      }
      eval::MethodReport r = eval::local_report(c, model.artifacts, errors, reference, samples);
      r.tag = method_tag({MethodKind::Local, c, overlap});
      reports.push_back(std::move(r));
    }
  }
  if (have_snapshots && ws.complete(stage::kPodNn)) {
    const podnn::PodNnModel model = load_podnn(ws.store(), "podnn");
    reports.push_back(eval::evaluate_method(eval::podnn_method(model), reference, samples));
  }
  if (reports.empty()) {
    throw Error(ErrorCode::MissingArtifact, "compare: no method has been built; run `build --method ...` first");
  }
  for (const eval::MethodReport& r : reports) {
    note("compare " + r.tag + ": mean L2 " + eval::format_double(r.mean_l2) + ", mean Linf " +
         eval::format_double(r.mean_linf));
  }
  return reports;
}

}  // namespace bifrom::pipeline
