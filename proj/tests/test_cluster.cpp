#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bifrom/cluster.hpp"
#include "bifrom/error.hpp"
#include "fixtures.hpp"

using namespace bifrom;
using fixtures::random_matrix;

namespace {

std::vector<ParameterPoint> dummy_params(int n) {
  std::vector<ParameterPoint> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = {0.5 + 0.01 * i, 0.1};
  return p;
}

double h() { return fixtures::default_config().mesh_width(); }

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("two separated pairs") {
  Matrix pts(2, 4);
  pts << 0.0, 0.0, 10.0, 10.0,
         0.0, 0.2, 10.0, 10.2;
  const auto c = cluster::kmeans(pts, 1.0, dummy_params(4), 2, 1, 3);
  CHECK(c.labels[0] == c.labels[1]);
  CHECK(c.labels[2] == c.labels[3]);
  CHECK(c.labels[0] != c.labels[2]);
  CHECK(c.energy == doctest::Approx(4 * 0.1 * 0.1).epsilon(1e-12));
}

TEST_CASE("one cluster holds the mean and the total variance") {
  Rng rng(1);
  const Matrix s = random_matrix(rng, 6, 9);
  const double w = 0.3;
  const auto c = cluster::kmeans(s, w, dummy_params(9), 1, 0, 2);
  const Vector mean = s.rowwise().mean();
  CHECK((c.state_centroids.col(0) - mean).cwiseAbs().maxCoeff() <= 1e-12);
  const double variance = w * (s.colwise() - mean).squaredNorm();
  CHECK(c.energy == doctest::Approx(variance).epsilon(1e-12));
}

TEST_CASE("one cluster per point") {
  Rng rng(2);
  const Matrix s = random_matrix(rng, 5, 6);
  const auto c = cluster::kmeans(s, 1.0, dummy_params(6), 6, 4, 2);
  CHECK(c.energy == doctest::Approx(0.0));
  const std::set<int> distinct(c.labels.begin(), c.labels.end());
  CHECK(distinct.size() == 6);
}

TEST_CASE("invalid cluster counts") {
  const Matrix s = Matrix::Ones(3, 4);
  for (int k : {0, 5}) {
    try {
      cluster::kmeans(s, 1.0, dummy_params(4), k, 0, 1);
      FAIL("expected InvalidK");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidK);
    }
  }
  CHECK_THROWS_AS(cluster::kmeans(s, 1.0, dummy_params(4), 2, 0, 0), Error);
}

TEST_CASE("clustering invariants on random data") {
  Rng rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 10 + static_cast<int>(rng.below(30));
    const int k = 1 + static_cast<int>(rng.below(6));
    const Matrix s = random_matrix(rng, 7, n);
    const auto params = dummy_params(n);
    const auto c = cluster::kmeans(s, 0.5, params, k, trial, 3);
    CHECK(c.labels.size() == static_cast<std::size_t>(n));
    for (int cl = 0; cl < k; ++cl) CHECK_FALSE(c.members(cl).empty());
    CHECK(std::abs(c.energy - cluster::clustering_energy(s, 0.5, c.labels, c.state_centroids)) <= 1e-10);
    for (std::size_t i = 1; i < c.energy_history.size(); ++i) CHECK(c.energy_history[i] <= c.energy_history[i - 1]);
    for (int cl = 0; cl < k; ++cl) {
      double m1 = 0.0;
      const auto members = c.members(cl);
      for (int j : members) m1 += params[static_cast<std::size_t>(j)].mu1;
      CHECK(c.parameter_centroids[static_cast<std::size_t>(cl)].mu1 ==
            doctest::Approx(m1 / static_cast<double>(members.size())));
    }
  }
}

TEST_CASE("snapshot clustering is bit-reproducible") {
  const auto& set = fixtures::snapshots_8x9();
  const auto a = cluster::kmeans(set.states, h(), set.params, 8, 0, 10);
  for (int run = 0; run < 2; ++run) {
    const auto b = cluster::kmeans(set.states, h(), set.params, 8, 0, 10);
    CHECK(a.labels == b.labels);
    CHECK((a.state_centroids.array() == b.state_centroids.array()).all());
    CHECK(a.energy == b.energy);
    CHECK(a.energy_history == b.energy_history);
  }
}

TEST_CASE("elbow energies fall with K") {
  const auto& set = fixtures::snapshots_8x9();
  const auto energies = cluster::elbow_report(set.states, h(), set.params, 5, 0, 3);
  REQUIRE(energies.size() == 5);
  for (std::size_t i = 1; i < energies.size(); ++i) CHECK(energies[i] <= energies[i - 1] + 1e-12);
}

TEST_CASE("grid neighbours") {
  const TensorGrid grid{8, 9};
  std::vector<int> all(72);
  for (int i = 0; i < 72; ++i) all[static_cast<std::size_t>(i)] = i;
  CHECK(cluster::grid_neighbors(grid, all).empty());

  const int interior = grid.index(3, 4);
  const auto n = cluster::grid_neighbors(grid, {interior});
  CHECK(n == std::vector<int>{grid.index(3, 3), grid.index(2, 4), grid.index(4, 4), grid.index(3, 5)});

  CHECK(cluster::grid_neighbors(grid, {0}) == std::vector<int>{1, 8});
  CHECK(cluster::grid_neighbors(grid, {71}).size() == 2);

  const auto strip = cluster::grid_neighbors(grid, {0, 1, 2});
  CHECK(strip == std::vector<int>{3, 8, 9, 10});
}

TEST_CASE("single cluster without neighbours is plain POD at tol2") {
  const auto& set = fixtures::snapshots_8x9();
  const auto c = cluster::kmeans(set.states, h(), set.params, 1, 0, 1);
  const auto local = cluster::enrich_overlap(set.states, h(), c, set.grid, 1e-4, 1e-6);
  const auto plain = pod::compute_pod(set.states, 1e-6, h());
  REQUIRE(local.clusters.size() == 1);
  CHECK(local.clusters[0].neighbors.empty());
  REQUIRE(local.clusters[0].basis.dim() == plain.dim());
  CHECK((local.clusters[0].basis.modes - plain.modes).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("a neighbour inside the first span adds nothing") {
  // Column 2 is a multiple of column 0, so as a neighbour of cluster {0, 1}
  // its residual vanishes.
  const TensorGrid grid{3, 2};
  Rng rng(4);
  Matrix s = random_matrix(rng, 10, 6);
  s.col(2) = 2.0 * s.col(0);
  cluster::Clustering c;
  c.k = 2;
  c.labels = {0, 0, 1, 1, 1, 1};
  const auto local = cluster::enrich_overlap(s, 1.0, c, grid, 0.0, 0.0);
  CHECK(std::find(local.clusters[0].neighbors.begin(), local.clusters[0].neighbors.end(), 2) !=
        local.clusters[0].neighbors.end());
  // Neighbours of {0, 1} are 2, 3, 4; only 3 and 4 bring new directions.
  CHECK(local.clusters[0].accepted_residuals == 2);
  CHECK(local.clusters[0].basis.dim() == 4);
}

TEST_CASE("enriched bases on the snapshot grid") {
  const auto& set = fixtures::snapshots_8x9();
  const auto& local = fixtures::local_8x9();
  const double tol2 = local.bases.tol2;
  for (std::size_t k = 0; k < local.bases.clusters.size(); ++k) {
    const auto& lb = local.bases.clusters[k];
    const auto& b = lb.basis;
    if (b.dim() > 0) {
      const Matrix g = b.weight * b.modes.transpose() * b.modes;
      CHECK((g - Matrix::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff() <= 1e-10);
    }
    for (int j : lb.neighbors) CHECK(std::find(lb.members.begin(), lb.members.end(), j) == lb.members.end());

    Matrix members(set.states.rows(), static_cast<Eigen::Index>(lb.members.size()));
    for (std::size_t i = 0; i < lb.members.size(); ++i) members.col(static_cast<Eigen::Index>(i)) = set.states.col(lb.members[i]);
    const bool zero = std::sqrt(h()) * members.colwise().norm().maxCoeff() <= 1e-10;
    std::optional<pod::Basis> first;
    if (!zero) first = pod::compute_pod(members, local.bases.tol1, h());

    std::vector<int> check = lb.members;
    check.insert(check.end(), lb.neighbors.begin(), lb.neighbors.end());
    for (int j : check) {
      const Vector s = set.states.col(j);
      const double norm = std::sqrt(h() * s.squaredNorm());
      const double enriched = pod::projection_error(b, s);
      const double before = first ? pod::projection_error(*first, s) : norm;
      CHECK(enriched <= before + 1e-12);
    }
    for (int j : lb.neighbors) {
      const Vector s = set.states.col(j);
      const double norm = std::sqrt(h() * s.squaredNorm());
      if (norm <= 1e-10) continue;
      CHECK(pod::projection_error(b, s) / norm <= 10.0 * std::sqrt(tol2));
    }
  }
}

TEST_CASE("zero-state cluster has an empty first basis") {
  const TensorGrid grid{2, 2};
  Matrix s = Matrix::Zero(4, 4);
  s(0, 2) = 1.0;
  s(1, 3) = 1.0;
  cluster::Clustering c;
  c.k = 2;
  c.labels = {0, 0, 1, 1};
  const auto local = cluster::enrich_overlap(s, 1.0, c, grid, 1e-4, 1e-6);
  // Cluster 0 only sees its neighbours' directions.
  CHECK(local.clusters[0].basis.dim() == 2);
  const auto plain = cluster::enrich_overlap(s, 1.0, c, grid, 1e-4, 1e-6, false);
  CHECK(plain.clusters[0].basis.dim() == 0);
  CHECK(plain.clusters[1].basis.dim() == 2);
}

TEST_CASE("tolerance order is checked") {
  const auto& set = fixtures::snapshots_8x9();
  const auto c = cluster::kmeans(set.states, h(), set.params, 2, 0, 1);
  CHECK_THROWS_AS(cluster::enrich_overlap(set.states, h(), c, set.grid, 1e-6, 1e-4), Error);
}

}  // TEST_SUITE
