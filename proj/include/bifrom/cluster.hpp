#pragma once

#include <cstdint>
#include <vector>

#include "bifrom/pod.hpp"
#include "bifrom/types.hpp"

namespace bifrom::cluster {

struct Clustering {
  int k = 0;
  std::vector<int> labels;
  Matrix state_centroids;  // state size x k
  std::vector<ParameterPoint> parameter_centroids;
  double energy = 0.0;     // sum of squared X-distances to the assigned centroid
  std::uint64_t seed = 0;
  int restarts = 1;
  int best_restart = 0;
  // Energy after every Lloyd iteration of the selected restart.
  std::vector<double> energy_history;

  std::vector<int> members(int cluster) const;
};

// Lloyd iterations in the X-norm with k-means++ seeding, repeated `restarts`
// times; the restart with minimal energy wins (lowest index on ties).
Clustering kmeans(const Matrix& snapshots, double weight, const std::vector<ParameterPoint>& params, int k,
                  std::uint64_t seed, int restarts);

// Within-cluster energy recomputed from scratch.
double clustering_energy(const Matrix& snapshots, double weight, const std::vector<int>& labels,
                         const Matrix& centroids);

// Energy of the best clustering for each K in [1, k_max]. Informational only.
std::vector<double> elbow_report(const Matrix& snapshots, double weight, const std::vector<ParameterPoint>& params,
                                 int k_max, std::uint64_t seed, int restarts);

// Grid points 4-adjacent to any member that are not members themselves,
// sorted ascending.
std::vector<int> grid_neighbors(const TensorGrid& grid, const std::vector<int>& members);

struct LocalBasis {
  pod::Basis basis;
  std::vector<int> members;
  std::vector<int> neighbors;
  int accepted_residuals = 0;
};

struct LocalBasisSet {
  std::vector<LocalBasis> clusters;
  double tol1 = 1e-4;
  double tol2 = 1e-6;
  bool overlap = true;
};

// Per cluster: POD of the members at tol1, enrichment with the normalized
// X-orthogonal residuals of the grid neighbours: a second POD at tol2 of those
// residuals is appended to the first basis. Singular values of an enriched
// basis are the two blocks concatenated, not a sorted spectrum. With
// overlap == false, or for a cluster without grid neighbours, a single POD of
// the members at tol2.
LocalBasisSet enrich_overlap(const Matrix& snapshots, double weight, const Clustering& clustering,
                             const TensorGrid& grid, double tol1, double tol2, bool overlap = true);

}  // namespace bifrom::cluster
