#include "bifrom/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bifrom/error.hpp"
#include "bifrom/metrics.hpp"
#include "bifrom/parallel.hpp"

namespace bifrom::select {
namespace {

std::vector<int> layer_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

int nearest_point(const ParameterBox& box, const std::vector<ParameterPoint>& points, const ParameterPoint& mu) {
  if (points.empty()) throw Error(ErrorCode::MissingArtifact, "nearest point: empty point set");
  const Eigen::Vector2d x = box.normalize(mu);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double d = (box.normalize(points[j]) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

int argmin_row(const Matrix& m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(row, c) < m(row, best)) best = static_cast<int>(c);
  }
  return best;
}

[[noreturn]] void missing(Criterion c, const char* what) {
  throw Error(ErrorCode::MissingArtifact, std::string(to_string(c)) + " needs " + what);
}

}  // namespace

LocalRomSet build_local_roms(const fom::SnapshotSet& snapshots, const fom::DiscreteOperators& ops,
                             const LocalRomOptions& options) {
  LocalRomSet set;
  set.clustering =
      cluster::kmeans(snapshots.states, ops.h(), snapshots.params, options.k, options.seed, options.restarts);
  set.bases = cluster::enrich_overlap(snapshots.states, ops.h(), set.clustering, snapshots.grid, options.tol1,
                                      options.tol2, options.overlap);
  set.roms.resize(set.bases.clusters.size());
  parallel_for(set.roms.size(), [&](std::size_t k) {
    set.roms[k] = rom::assemble_reduced(set.bases.clusters[k].basis, ops);
  });
  return set;
}

int nearest_snapshot(const ParameterBox& box, const std::vector<ParameterPoint>& params, const ParameterPoint& mu) {
  return nearest_point(box, params, mu);
}

std::vector<Vector> initial_guesses(const pod::Basis& basis, const fom::SnapshotSet& snapshots,
                                    const ParameterBox& box, const ParameterPoint& mu) {
  const int nearest = nearest_snapshot(box, snapshots.params, mu);
  std::vector<ParameterPoint> nonzero_params;
  std::vector<int> nonzero_index;
  const Eigen::Index n = snapshots.states.rows() / 2;
  for (int j = 0; j < snapshots.count(); ++j) {
    if (snapshots.states.col(j).head(n).norm() > eval::kZeroFieldFloor) {
      nonzero_params.push_back(snapshots.params[static_cast<std::size_t>(j)]);
      nonzero_index.push_back(j);
    }
  }
  std::vector<Vector> guesses{pod::project(basis, Vector(snapshots.states.col(nearest)))};
  if (!nonzero_params.empty()) {
    const int j = nonzero_index[static_cast<std::size_t>(nearest_point(box, nonzero_params, mu))];
    if (j != nearest) guesses.push_back(pod::project(basis, Vector(snapshots.states.col(j))));
  }
  return guesses;
}

ErrorTable build_error_table(const LocalRomSet& local, const fom::SnapshotSet& snapshots,
                             const rom::RomSolverOptions& solver) {
  const int ns = snapshots.count();
  const int k = local.k();
  ErrorTable table{Matrix::Zero(ns, k), Matrix::Zero(ns, k)};
  parallel_for(static_cast<std::size_t>(ns) * static_cast<std::size_t>(k), [&](std::size_t flat) {
    const auto i = static_cast<Eigen::Index>(flat / static_cast<std::size_t>(k));
    const auto c = static_cast<Eigen::Index>(flat % static_cast<std::size_t>(k));
    const rom::ReducedOperators& ops = local.roms[static_cast<std::size_t>(c)];
    const Vector snapshot = snapshots.states.col(i);
    const rom::RomSolution sol =
        rom::rom_solve(ops, snapshots.params[static_cast<std::size_t>(i)], pod::project(ops.basis, snapshot), solver);
    if (sol.converged) {
      table.errors(i, c) = eval::relative_errors(rom::lift(ops, sol), snapshot).l2;
      table.converged(i, c) = 1.0;
    } else {
      table.errors(i, c) = kErrorSentinel;
    }
  });
  return table;
}

Matrix regression_targets(const ErrorTable& table) {
  Matrix targets(table.errors.rows(), table.errors.cols());
  for (Eigen::Index i = 0; i < table.errors.rows(); ++i) {
    for (Eigen::Index c = 0; c < table.errors.cols(); ++c) {
      const double err = table.errors(i, c);
      if (!(err >= 0.0)) throw Error(ErrorCode::NonFinite, "regression_targets: invalid table entry");
      targets(i, c) = 1.0 / std::max(err, 1e-12);
    }
    targets.row(i) /= targets.row(i).norm();
  }
  return targets;
}

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::ParameterCentroid: return "centroid";
    case Criterion::ClosestSnapshot: return "closest";
    case Criterion::ClassifierAnn: return "classifier";
    case Criterion::RegressionAnnJoint: return "regression";
    case Criterion::RegressionAnnIndependent: return "regression-independent";
    case Criterion::NextBestApproxSnapshot: return "next-best";
    case Criterion::OracleOptimal: return "oracle";
  }
  return "unknown";
}

const std::vector<Criterion>& all_criteria() {
  static const std::vector<Criterion> all{
      Criterion::ParameterCentroid,        Criterion::ClosestSnapshot,        Criterion::ClassifierAnn,
      Criterion::RegressionAnnJoint,       Criterion::RegressionAnnIndependent, Criterion::NextBestApproxSnapshot,
      Criterion::OracleOptimal,
  };
  return all;
}

std::optional<Criterion> parse_criterion(const std::string& name) {
  for (Criterion c : all_criteria()) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

SelectionArtifacts base_artifacts(const LocalRomSet& local, const fom::SnapshotSet& snapshots, const ParameterBox& box) {
  SelectionArtifacts a;
  a.box = box;
  a.snapshot_params = snapshots.params;
  a.snapshot_labels = local.clustering.labels;
  a.parameter_centroids = local.clustering.parameter_centroids;
  return a;
}

int select_cluster(Criterion criterion, const SelectionArtifacts& a, const ParameterPoint& mu) {
  switch (criterion) {
    case Criterion::ParameterCentroid:
      if (a.parameter_centroids.empty()) missing(criterion, "parameter centroids");
      return nearest_point(a.box, a.parameter_centroids, mu);
    case Criterion::ClosestSnapshot:
      if (a.snapshot_params.empty() || a.snapshot_labels.size() != a.snapshot_params.size()) {
        missing(criterion, "snapshot labels");
      }
      return a.snapshot_labels[static_cast<std::size_t>(nearest_point(a.box, a.snapshot_params, mu))];
    case Criterion::ClassifierAnn:
      if (!a.classifier) missing(criterion, "a trained classifier");
      return ann::argmax(ann::forward(*a.classifier, Vector(a.box.normalize(mu))));
    case Criterion::RegressionAnnJoint: {
      if (!a.regression) missing(criterion, "a trained regression network");
      const Vector raw = ann::forward(a.regression->net, Vector(a.box.normalize(mu)));
      return ann::argmax(a.regression->scaling.invert(raw));
    }
    case Criterion::RegressionAnnIndependent: {
      if (!a.independent || a.independent->empty()) missing(criterion, "independent regression networks");
      Vector scores(static_cast<Eigen::Index>(a.independent->size()));
      const Vector x = a.box.normalize(mu);
      for (std::size_t k = 0; k < a.independent->size(); ++k) {
        const RegressionSelector& s = (*a.independent)[k];
        scores[static_cast<Eigen::Index>(k)] = s.scaling.invert(ann::forward(s.net, x))[0];
      }
      return ann::argmax(scores);
    }
    case Criterion::NextBestApproxSnapshot: {
      if (!a.error_table || a.snapshot_params.empty()) missing(criterion, "the error table");
      const int j = nearest_point(a.box, a.snapshot_params, mu);
      return argmin_row(a.error_table->errors, j);
    }
    case Criterion::OracleOptimal: {
      if (!a.oracle) missing(criterion, "oracle labels from a reference set");
      return a.oracle->labels[static_cast<std::size_t>(nearest_point(a.box, a.oracle->params, mu))];
    }
  }
  throw Error(ErrorCode::InvalidConfig, "select_cluster: unknown criterion");
}

Matrix normalized_inputs(const ParameterBox& box, const std::vector<ParameterPoint>& params) {
  Matrix x(2, static_cast<Eigen::Index>(params.size()));
  for (std::size_t j = 0; j < params.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = box.normalize(params[j]);
  return x;
}

ann::TrainResult train_classifier_selector(const SelectionArtifacts& artifacts, const std::vector<int>& hidden,
                                           const ann::TrainConfig& cfg) {
  const int k = static_cast<int>(artifacts.parameter_centroids.size());
  return ann::train_classifier(normalized_inputs(artifacts.box, artifacts.snapshot_params), artifacts.snapshot_labels,
                               layer_dims(2, hidden, k), cfg);
}

RegressionSelector train_regression_selector(const SelectionArtifacts& artifacts, const ErrorTable& table,
                                             const std::vector<int>& hidden, const ann::TrainConfig& cfg) {
  const Matrix targets = regression_targets(table).transpose();  // K x Ns
  RegressionSelector out;
  out.scaling = ann::Standardizer::fit(targets);
  out.net = ann::train_regressor(normalized_inputs(artifacts.box, artifacts.snapshot_params),
                                 out.scaling.apply(targets), layer_dims(2, hidden, static_cast<int>(targets.rows())),
                                 cfg)
                .net;
  return out;
}

std::vector<RegressionSelector> train_independent_selectors(const SelectionArtifacts& artifacts,
                                                            const ErrorTable& table, const std::vector<int>& hidden,
                                                            const ann::TrainConfig& cfg) {
  const Matrix targets = regression_targets(table).transpose();
  const Matrix inputs = normalized_inputs(artifacts.box, artifacts.snapshot_params);
  std::vector<RegressionSelector> out(static_cast<std::size_t>(targets.rows()));
  for (Eigen::Index k = 0; k < targets.rows(); ++k) {
    const Matrix column = targets.row(k);
    RegressionSelector& s = out[static_cast<std::size_t>(k)];
    s.scaling = ann::Standardizer::fit(column);
    ann::TrainConfig local_cfg = cfg;
    local_cfg.seed = cfg.seed + static_cast<std::uint64_t>(k) + 1;
    s.net = ann::train_regressor(inputs, s.scaling.apply(column), layer_dims(2, hidden, 1), local_cfg).net;
  }
  return out;
}

LocalEvaluation solve_local(const LocalRomSet& local, int cluster, const fom::SnapshotSet& snapshots,
                            const ParameterBox& box, const ParameterPoint& mu, const rom::RomSolverOptions& solver) {
  if (cluster < 0 || cluster >= local.k()) throw Error(ErrorCode::InvalidK, "solve_local: cluster out of range");
  const rom::ReducedOperators& ops = local.roms[static_cast<std::size_t>(cluster)];
  LocalEvaluation out;
  out.cluster = cluster;
  out.solution = rom::rom_solve_stable(ops, mu, initial_guesses(ops.basis, snapshots, box, mu), solver);
  out.state = rom::lift(ops, out.solution);
  return out;
}

ReferenceErrors reference_errors(const LocalRomSet& local, const fom::SnapshotSet& snapshots,
                                 const fom::SnapshotSet& reference, const ParameterBox& box,
                                 const rom::RomSolverOptions& solver) {
  const int nref = reference.count();
  const int k = local.k();
  ReferenceErrors out{Matrix::Zero(nref, k), Matrix::Zero(nref, k), Matrix::Zero(nref, k)};
  parallel_for(static_cast<std::size_t>(nref) * static_cast<std::size_t>(k), [&](std::size_t flat) {
    const auto i = static_cast<Eigen::Index>(flat / static_cast<std::size_t>(k));
    const auto c = static_cast<Eigen::Index>(flat % static_cast<std::size_t>(k));
    const LocalEvaluation ev = solve_local(local, static_cast<int>(c), snapshots, box,
                                           reference.params[static_cast<std::size_t>(i)], solver);
    out.converged(i, c) = ev.solution.converged ? 1.0 : 0.0;
    if (ev.state.allFinite()) {
      const eval::RelativeErrors e = eval::relative_errors(ev.state, reference.states.col(i));
      out.l2(i, c) = e.l2;
      out.linf(i, c) = e.linf;
    } else {
      out.l2(i, c) = kErrorSentinel;
      out.linf(i, c) = kErrorSentinel;
    }
  });
  return out;
}

OracleLabels oracle_selection(const ReferenceErrors& errors, const fom::SnapshotSet& reference) {
  OracleLabels out;
  out.params = reference.params;
  out.labels.resize(static_cast<std::size_t>(errors.l2.rows()));
  for (Eigen::Index i = 0; i < errors.l2.rows(); ++i) out.labels[static_cast<std::size_t>(i)] = argmin_row(errors.l2, i);
  return out;
}

}  // namespace bifrom::select
