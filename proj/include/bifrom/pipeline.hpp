#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bifrom/eval.hpp"
#include "bifrom/select.hpp"
#include "bifrom/workspace.hpp"

namespace bifrom::pipeline {

// Offline and online stages over a workspace. Every stage reads only
// artifacts of completed upstream stages and skips itself when already
// complete unless force is set.
void run_snapshots(Workspace& ws, bool force = false);
void run_reference(Workspace& ws, bool force = false);
void build_global(Workspace& ws, bool force = false);
void build_podnn(Workspace& ws, bool force = false);

// Clustering, enriched bases, local operators and the error table, then the
// selection artifact of `criterion`, or every trainable one when absent.
// The oracle additionally needs the reference stage.
void build_local(Workspace& ws, bool overlap, std::optional<select::Criterion> criterion, bool force = false);

// Selection artifacts needed by one criterion (or by all, when absent).
void build_selector(Workspace& ws, bool overlap, select::Criterion criterion, bool force = false);

enum class MethodKind { Global, Local, PodNn, Reference };

struct MethodSpec {
  MethodKind kind = MethodKind::Global;
  select::Criterion criterion = select::Criterion::RegressionAnnJoint;
  bool overlap = true;
};

std::optional<MethodKind> parse_method(const std::string& name);
std::string method_tag(const MethodSpec& spec);

// Probe diagram over the reference grid parameters.
eval::BifurcationDiagram evaluate(Workspace& ws, const MethodSpec& spec);

// Reports for every built method against the reference set: global, the
// local criteria whose artifacts exist (overlap on, then off), POD-NN.
// Reference errors of local ROMs are computed and stored when missing.
std::vector<eval::MethodReport> compare(Workspace& ws);

// Loaded local model with every selection artifact that has been built.
struct LocalModel {
  fom::SnapshotSet snapshots;
  select::LocalRomSet roms;
  select::SelectionArtifacts artifacts;
};
LocalModel load_local(const Workspace& ws, bool overlap);

}  // namespace bifrom::pipeline
