#include "bifrom/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "bifrom/error.hpp"
#include "bifrom/parallel.hpp"
#include "bifrom/random.hpp"

namespace bifrom::cluster {
namespace {

constexpr int kMaxLloydIterations = 300;

struct RestartResult {
  std::vector<int> labels;
  Matrix centroids;
  double energy = 0.0;
  std::vector<double> history;
};

double squared_distance(const Matrix& points, Eigen::Index j, const Matrix& centroids, Eigen::Index c,
                        double weight) {
  return weight * (points.col(j) - centroids.col(c)).squaredNorm();
}

Matrix seed_plus_plus(const Matrix& points, double weight, int k, Rng& rng) {
  const Eigen::Index count = points.cols();
  Matrix centroids(points.rows(), k);
  centroids.col(0) = points.col(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(count))));
  Vector nearest = Vector::Constant(count, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index j = 0; j < count; ++j) {
      nearest[j] = std::min(nearest[j], squared_distance(points, j, centroids, c - 1, weight));
    }
    const double total = nearest.sum();
    Eigen::Index pick = count - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index j = 0; j < count; ++j) {
        acc += nearest[j];
        if (acc > target && nearest[j] > 0.0) {
          pick = j;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(count)));
    }
    centroids.col(c) = points.col(pick);
  }
  return centroids;
}

std::vector<int> assign(const Matrix& points, double weight, const Matrix& centroids) {
  std::vector<int> labels(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    int best = 0;
    double best_d = squared_distance(points, j, centroids, 0, weight);
    for (Eigen::Index c = 1; c < centroids.cols(); ++c) {
      const double d = squared_distance(points, j, centroids, c, weight);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(j)] = best;
  }
  return labels;
}

// Moves the point farthest from its centroid into each empty cluster.
void repair_empty(const Matrix& points, double weight, std::vector<int>& labels, Matrix& centroids) {
  const int k = static_cast<int>(centroids.cols());
  for (int c = 0; c < k; ++c) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      const int l = labels[static_cast<std::size_t>(j)];
      if (sizes[static_cast<std::size_t>(l)] < 2) continue;
      const double d = squared_distance(points, j, centroids, l, weight);
      if (d > far_d) {
        far_d = d;
        far = j;
      }
    }
    labels[static_cast<std::size_t>(far)] = c;
    centroids.col(c) = points.col(far);
  }
}

Matrix means(const Matrix& points, const std::vector<int>& labels, int k) {
  Matrix centroids = Matrix::Zero(points.rows(), k);
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const int l = labels[static_cast<std::size_t>(j)];
    centroids.col(l) += points.col(j);
    ++sizes[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < k; ++c) centroids.col(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
  return centroids;
}

RestartResult run_restart(const Matrix& points, double weight, int k, std::uint64_t seed) {
  Rng rng(seed);
  RestartResult result;
  result.centroids = seed_plus_plus(points, weight, k, rng);
  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    std::vector<int> labels = assign(points, weight, result.centroids);
    repair_empty(points, weight, labels, result.centroids);
    const bool stable = labels == result.labels;
    result.labels = std::move(labels);
    result.centroids = means(points, result.labels, k);
    const double energy = clustering_energy(points, weight, result.labels, result.centroids);
    if (!result.history.empty()) {
      const double prev = result.history.back();
      if (energy > prev + 1e-12 * std::max(1.0, prev)) {
        throw std::logic_error("kmeans: Lloyd energy increased from " + std::to_string(prev) + " to " +
                               std::to_string(energy));
      }
    }
    result.history.push_back(energy);
    result.energy = energy;
    if (stable) break;
  }
  return result;
}

}  // namespace

std::vector<int> Clustering::members(int cluster) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == cluster) out.push_back(static_cast<int>(j));
  }
  return out;
}

double clustering_energy(const Matrix& snapshots, double weight, const std::vector<int>& labels,
                         const Matrix& centroids) {
  double energy = 0.0;
  for (Eigen::Index j = 0; j < snapshots.cols(); ++j) {
    energy += squared_distance(snapshots, j, centroids, labels[static_cast<std::size_t>(j)], weight);
  }
  return energy;
}

Clustering kmeans(const Matrix& snapshots, double weight, const std::vector<ParameterPoint>& params, int k,
                  std::uint64_t seed, int restarts) {
  const auto count = static_cast<int>(snapshots.cols());
  if (k < 1 || k > count) {
    throw Error(ErrorCode::InvalidK, "kmeans: K=" + std::to_string(k) + " with " + std::to_string(count) +
                                         " snapshots");
  }
  if (restarts < 1) throw Error(ErrorCode::InvalidConfig, "kmeans: restarts must be >= 1");
  if (static_cast<int>(params.size()) != count) {
    throw Error(ErrorCode::DimensionMismatch, "kmeans: one parameter point per snapshot required");
  }

  std::vector<RestartResult> runs(static_cast<std::size_t>(restarts));
  parallel_for(runs.size(), [&](std::size_t r) {
    runs[r] = run_restart(snapshots, weight, k, derive_seed(seed, r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].energy < runs[best].energy) best = r;
  }

  Clustering out;
  out.k = k;
  out.seed = seed;
  out.restarts = restarts;
  out.best_restart = static_cast<int>(best);
  out.labels = std::move(runs[best].labels);
  out.state_centroids = std::move(runs[best].centroids);
  out.energy = runs[best].energy;
  out.energy_history = std::move(runs[best].history);
  out.parameter_centroids.assign(static_cast<std::size_t>(k), ParameterPoint{});
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < count; ++j) {
    const auto l = static_cast<std::size_t>(out.labels[static_cast<std::size_t>(j)]);
    out.parameter_centroids[l].mu1 += params[static_cast<std::size_t>(j)].mu1;
    out.parameter_centroids[l].mu2 += params[static_cast<std::size_t>(j)].mu2;
    ++sizes[l];
  }
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    out.parameter_centroids[c].mu1 /= sizes[c];
    out.parameter_centroids[c].mu2 /= sizes[c];
  }
  return out;
}

std::vector<double> elbow_report(const Matrix& snapshots, double weight, const std::vector<ParameterPoint>& params,
                                 int k_max, std::uint64_t seed, int restarts) {
  std::vector<double> energies;
  for (int k = 1; k <= k_max; ++k) energies.push_back(kmeans(snapshots, weight, params, k, seed, restarts).energy);
  return energies;
}

std::vector<int> grid_neighbors(const TensorGrid& grid, const std::vector<int>& members) {
  const std::set<int> member_set(members.begin(), members.end());
  std::set<int> out;
  constexpr int offsets[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int m : members) {
    const int i1 = grid.i1_of(m);
    const int i2 = grid.i2_of(m);
    for (const auto& d : offsets) {
      const int j1 = i1 + d[0];
      const int j2 = i2 + d[1];
      if (j1 < 0 || j1 >= grid.n1 || j2 < 0 || j2 >= grid.n2) continue;
      const int idx = grid.index(j1, j2);
      if (!member_set.contains(idx)) out.insert(idx);
    }
  }
  return {out.begin(), out.end()};
}

namespace {

constexpr double kNegligibleNorm = 1e-10;

pod::Basis empty_basis(Eigen::Index rows, double tol, double weight) {
  return pod::Basis{Matrix(rows, 0), Vector(0), tol, weight};
}

}  // namespace

LocalBasisSet enrich_overlap(const Matrix& snapshots, double weight, const Clustering& clustering,
                             const TensorGrid& grid, double tol1, double tol2, bool overlap) {
  if (overlap && tol2 > tol1) throw Error(ErrorCode::InvalidConfig, "enrich_overlap: tol2 must be <= tol1");
  if (snapshots.cols() != grid.size()) {
    throw Error(ErrorCode::DimensionMismatch, "enrich_overlap: snapshot count does not match the grid");
  }

  LocalBasisSet set;
  set.tol1 = tol1;
  set.tol2 = tol2;
  set.overlap = overlap;
  set.clusters.resize(static_cast<std::size_t>(clustering.k));

  parallel_for(set.clusters.size(), [&](std::size_t c) {
    LocalBasis& local = set.clusters[c];
    local.members = clustering.members(static_cast<int>(c));
    Matrix member_states(snapshots.rows(), static_cast<Eigen::Index>(local.members.size()));
    for (std::size_t i = 0; i < local.members.size(); ++i) {
      member_states.col(static_cast<Eigen::Index>(i)) = snapshots.col(local.members[i]);
    }
    // A cluster of zero-branch states carries no shape information; its
    // own POD contributes nothing instead of normalized round-off.
    const bool zero_members = std::sqrt(weight) * member_states.colwise().norm().maxCoeff() <= kNegligibleNorm;
    local.neighbors = overlap ? grid_neighbors(grid, local.members) : std::vector<int>{};
    // Without neighbours there is nothing to enrich with: plain POD at tol2.
    if (!overlap || local.neighbors.empty()) {
      local.basis = zero_members ? empty_basis(snapshots.rows(), tol2, weight)
                                 : pod::compute_pod(member_states, tol2, weight);
      return;
    }

    const pod::Basis first = zero_members ? empty_basis(snapshots.rows(), tol1, weight)
                                          : pod::compute_pod(member_states, tol1, weight);
    std::vector<Vector> residuals;
    for (int j : local.neighbors) {
      const Vector s = snapshots.col(j);
      const Vector r = s - pod::reconstruct(first, pod::project(first, s));
      const double rnorm = std::sqrt(weight * r.squaredNorm());
      if (rnorm > 1e-10) residuals.push_back(r / rnorm);
    }
    local.accepted_residuals = static_cast<int>(residuals.size());

    // The complement is compressed on its own and appended, so the span of
    // the first basis is kept whole and unit-norm residuals cannot crowd out
    // low-energy member modes.
    if (residuals.empty()) {
      local.basis = first;
      local.basis.energy_tol = tol2;
      return;
    }
    Matrix complement(snapshots.rows(), static_cast<Eigen::Index>(residuals.size()));
    for (std::size_t i = 0; i < residuals.size(); ++i) complement.col(static_cast<Eigen::Index>(i)) = residuals[i];
    const pod::Basis extra = pod::compute_pod(complement, tol2, weight);
    local.basis = pod::Basis{Matrix(snapshots.rows(), first.dim() + extra.dim()),
                             Vector(first.dim() + extra.dim()), tol2, weight};
    Matrix stacked(snapshots.rows(), first.dim() + extra.dim());
    stacked << first.modes, extra.modes;
    // Householder QR in the scaled Euclidean metric restores orthonormality
    // lost to round-off; leading columns span the same spaces as before.
    const double scale = std::sqrt(weight);
    const Eigen::HouseholderQR<Matrix> qr(scale * stacked);
    Matrix q = qr.householderQ() * Matrix::Identity(stacked.rows(), stacked.cols());
    const Vector diag = qr.matrixQR().diagonal();
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      if (diag[c] < 0.0) q.col(c) = -q.col(c);
    }
    local.basis.modes = q / scale;
    local.basis.singular_values << first.singular_values, extra.singular_values;
  });
  return set;
}

}  // namespace bifrom::cluster
