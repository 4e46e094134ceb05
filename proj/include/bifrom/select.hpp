#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bifrom/ann.hpp"
#include "bifrom/cluster.hpp"
#include "bifrom/fom.hpp"
#include "bifrom/rom.hpp"

namespace bifrom::select {

// K local reduced models built from one clustering of the snapshots.
struct LocalRomSet {
  cluster::Clustering clustering;
  cluster::LocalBasisSet bases;
  std::vector<rom::ReducedOperators> roms;

  int k() const { return static_cast<int>(roms.size()); }
};

struct LocalRomOptions {
  int k = 8;
  int restarts = 10;
  std::uint64_t seed = 0;
  double tol1 = 1e-4;
  double tol2 = 1e-6;
  bool overlap = true;
};

LocalRomSet build_local_roms(const fom::SnapshotSet& snapshots, const fom::DiscreteOperators& ops,
                             const LocalRomOptions& options);

// Index of the snapshot nearest to mu in normalized parameter coordinates
// (Euclidean), lowest index on ties.
int nearest_snapshot(const ParameterBox& box, const std::vector<ParameterPoint>& params, const ParameterPoint& mu);

// Initial guesses for an online solve at mu, as basis coefficients: the
// projection of the nearest snapshot, then of the nearest snapshot with a
// nonzero u-field when that is a different one.
std::vector<Vector> initial_guesses(const pod::Basis& basis, const fom::SnapshotSet& snapshots,
                                    const ParameterBox& box, const ParameterPoint& mu);

// Sentinel recorded for local solves that do not converge.
inline constexpr double kErrorSentinel = 1e30;

struct ErrorTable {
  Matrix errors;     // Ns x K relative u-field L2 errors
  Matrix converged;  // Ns x K, 1 or 0
};

// Every local ROM solved at every snapshot parameter, initialized from the
// projection of that snapshot.
ErrorTable build_error_table(const LocalRomSet& local, const fom::SnapshotSet& snapshots,
                             const rom::RomSolverOptions& solver = {});

// Row-normalized inverse errors: t_ik = inv_ik / ||inv_i||_2 with
// inv_ik = 1 / max(err_ik, 1e-12).
Matrix regression_targets(const ErrorTable& table);

enum class Criterion {
  ParameterCentroid,
  ClosestSnapshot,
  ClassifierAnn,
  RegressionAnnJoint,
  RegressionAnnIndependent,
  NextBestApproxSnapshot,
  OracleOptimal,
};

const char* to_string(Criterion c);
std::optional<Criterion> parse_criterion(const std::string& name);
const std::vector<Criterion>& all_criteria();

struct RegressionSelector {
  ann::Mlp net;
  ann::Standardizer scaling;
};

struct OracleLabels {
  std::vector<ParameterPoint> params;
  std::vector<int> labels;
};

// Everything a criterion may need. Artifacts are optional; a criterion
// whose artifact is absent reports MissingArtifact.
struct SelectionArtifacts {
  ParameterBox box{};
  std::vector<ParameterPoint> snapshot_params;
  std::vector<int> snapshot_labels;
  std::vector<ParameterPoint> parameter_centroids;
  std::optional<ann::Mlp> classifier;
  std::optional<RegressionSelector> regression;
  std::optional<std::vector<RegressionSelector>> independent;
  std::optional<ErrorTable> error_table;
  std::optional<OracleLabels> oracle;
};

SelectionArtifacts base_artifacts(const LocalRomSet& local, const fom::SnapshotSet& snapshots, const ParameterBox& box);

// Cluster index for mu; deterministic, lowest index on ties.
int select_cluster(Criterion criterion, const SelectionArtifacts& artifacts, const ParameterPoint& mu);

// Inputs for every selection network: normalized parameters, one per column.
Matrix normalized_inputs(const ParameterBox& box, const std::vector<ParameterPoint>& params);

ann::TrainResult train_classifier_selector(const SelectionArtifacts& artifacts, const std::vector<int>& hidden,
                                           const ann::TrainConfig& cfg);
RegressionSelector train_regression_selector(const SelectionArtifacts& artifacts, const ErrorTable& table,
                                             const std::vector<int>& hidden, const ann::TrainConfig& cfg);
// One [2, hidden..., 1] network per cluster on that cluster's target column.
std::vector<RegressionSelector> train_independent_selectors(const SelectionArtifacts& artifacts,
                                                            const ErrorTable& table, const std::vector<int>& hidden,
                                                            const ann::TrainConfig& cfg);

// Every local ROM evaluated at every reference point through solve_local.
struct ReferenceErrors {
  Matrix l2;         // Nref x K
  Matrix linf;       // Nref x K
  Matrix converged;  // Nref x K, 1 or 0
};

ReferenceErrors reference_errors(const LocalRomSet& local, const fom::SnapshotSet& snapshots,
                                 const fom::SnapshotSet& reference, const ParameterBox& box,
                                 const rom::RomSolverOptions& solver = {});

// Per reference point, the cluster with the smallest relative L2 error.
OracleLabels oracle_selection(const ReferenceErrors& errors, const fom::SnapshotSet& reference);

// Solution of local ROM k at mu, started from initial_guesses.
struct LocalEvaluation {
  int cluster = 0;
  rom::RomSolution solution;
  StateVector state;
};

LocalEvaluation solve_local(const LocalRomSet& local, int cluster, const fom::SnapshotSet& snapshots,
                            const ParameterBox& box, const ParameterPoint& mu,
                            const rom::RomSolverOptions& solver = {});

}  // namespace bifrom::select
