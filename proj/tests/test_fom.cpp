#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "bifrom/error.hpp"
#include "bifrom/fom.hpp"
#include "bifrom/parallel.hpp"
#include "fixtures.hpp"

using namespace bifrom;
using fixtures::random_vector;

namespace {

const fom::FomConfig& cfg() { return fixtures::default_config(); }

Vector flip_u(const Vector& w) {
  Vector out = w;
  out.head(w.size() / 2) *= -1.0;
  return out;
}

}  // namespace

TEST_SUITE("fom") {

TEST_CASE("three-node stencil") {
  fom::FomConfig small;
  small.n_interior = 3;
  const auto ops = fom::assemble_operators(small);
  CHECK(ops.h() == 0.25);
  const Matrix d = ops.laplacian_dense();
  for (int i = 0; i < 3; ++i) {
    CHECK(d(i, i) == -32.0);
    if (i + 1 < 3) {
      CHECK(d(i, i + 1) == 16.0);
      CHECK(d(i + 1, i) == 16.0);
    }
  }
  CHECK(d(0, 2) == 0.0);
  const Vector f = Vector::LinSpaced(3, 1.0, 3.0);
  CHECK((ops.apply_laplacian(f) - d * f).norm() == doctest::Approx(0.0));
}

TEST_CASE("quadratic form with a u-only second argument") {
  const auto ops = fom::assemble_operators(cfg());
  Rng rng(11);
  const Vector w = random_vector(rng, ops.state_size());
  const Vector b = ops.restrict_u(w);
  const Vector n = ops.quadratic(w, b);
  const int m = ops.n();
  CHECK(n.head(m).cwiseAbs().maxCoeff() == 0.0);
  CHECK((n.tail(m) - w.head(m).cwiseProduct(w.head(m))).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ops.quadratic(w, Vector::Zero(ops.state_size())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lowest eigenvalue of the negative Laplacian") {
  const auto ops = fom::assemble_operators(cfg());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(-ops.laplacian_dense());
  const double lowest = eig.eigenvalues().minCoeff();
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(std::abs(lowest - pi2) / pi2 < 1e-3);
  CHECK(fixtures::relative_difference(lowest, fom::critical_mu1(cfg(), 1.0)) < 1e-10);
}

TEST_CASE("residual vanishes at zero") {
  const auto ops = fom::assemble_operators(cfg());
  const Vector r = fom::residual(ops, {1.3, 0.1}, Vector::Zero(ops.state_size()));
  CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sign flip of u is an equivariance") {
  const auto ops = fom::assemble_operators(cfg());
  Rng rng(5);
  const int n = ops.n();
  for (int trial = 0; trial < 20; ++trial) {
    const Vector w = random_vector(rng, ops.state_size());
    const ParameterPoint mu{rng.uniform(0.5, 2.0), rng.uniform(0.06, 0.15)};
    const Vector r = fom::residual(ops, mu, w);
    const Vector rf = fom::residual(ops, mu, flip_u(w));
    CHECK((rf.head(n) + r.head(n)).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + r.head(n).cwiseAbs().maxCoeff()));
    CHECK((rf.tail(n) - r.tail(n)).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + r.tail(n).cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("Jacobian columns match central differences") {
  const auto ops = fom::assemble_operators(cfg());
  Rng rng(7);
  const ParameterPoint mu{1.4, 0.09};
  const Vector w = random_vector(rng, ops.state_size());
  const Matrix j = fom::jacobian(ops, mu, w);
  const double eps = 1e-6;
  for (int c = 0; c < ops.state_size(); c += 5) {
    Vector wp = w, wm = w;
    wp[c] += eps;
    wm[c] -= eps;
    const Vector fd = (fom::residual(ops, mu, wp) - fom::residual(ops, mu, wm)) / (2.0 * eps);
    CHECK((fd - j.col(c)).norm() <= 1e-6 * j.col(c).norm());
  }
}

TEST_CASE("below the critical curve the march decays to zero") {
  const auto sol = fom::steady_solve(cfg(), {0.5, 0.1}, fom::bias_guess(cfg(), cfg().bias_amplitude));
  CHECK(sol.converged);
  CHECK(sol.state.norm() <= 1e-6);
}

TEST_CASE("above the critical curve the march matches Newton") {
  const ParameterPoint mu{1.5, 0.1};
  const auto ops = fom::assemble_operators(cfg());
  const auto sol = fom::steady_solve(cfg(), mu, fom::bias_guess(cfg(), cfg().bias_amplitude));
  REQUIRE(sol.converged);
  CHECK(fom::probe(sol.state) > 0.0);
  CHECK(ops.norm(fom::residual(ops, mu, sol.state)) <= 1e-6);

  const auto newton = fom::newton_solve(cfg(), mu, sol.state);
  CHECK(newton.converged);
  CHECK(newton.steps_taken <= 3);
  CHECK(ops.norm(sol.state - newton.state) <= 1e-6);
}

TEST_CASE("zero initial state stays put") {
  const auto sol = fom::steady_solve(cfg(), {1.5, 0.1}, Vector::Zero(cfg().state_size()));
  CHECK(sol.converged);
  CHECK(sol.steps_taken == 1);
  CHECK(sol.final_increment == 0.0);
  CHECK(sol.state.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stopping rule fires on the first small increment") {
  const ParameterPoint mu{1.6, 0.08};
  const Vector w0 = fom::bias_guess(cfg(), cfg().bias_amplitude);
  const auto full = fom::steady_solve(cfg(), mu, w0);
  REQUIRE(full.converged);
  CHECK(full.final_increment < cfg().tol);

  fom::FomConfig shorter = cfg();
  shorter.max_steps = full.steps_taken - 1;
  const auto cut = fom::steady_solve(shorter, mu, w0);
  CHECK_FALSE(cut.converged);
  CHECK(cut.final_increment >= cfg().tol);
}

TEST_CASE("march reports a blow-up as NonFinite") {
  fom::FomConfig wild = cfg();
  wild.dt = 1e3;
  CHECK_THROWS_AS(fom::steady_solve(wild, {2.0, 0.06}, fom::bias_guess(wild, 50.0)), Error);
  try {
    fom::steady_solve(wild, {2.0, 0.06}, fom::bias_guess(wild, 50.0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
}

TEST_CASE("Newton from a small state below critical finds zero") {
  const auto sol = fom::newton_solve(cfg(), {0.7, 0.1}, fom::bias_guess(cfg(), 1e-3));
  CHECK(sol.converged);
  CHECK(sol.state.norm() <= 1e-10);
}

TEST_CASE("Newton reports NoConvergence when out of iterations") {
  fom::FomConfig tight = cfg();
  tight.newton_max_iter = 1;
  try {
    fom::newton_solve(tight, {1.5, 0.1}, fom::bias_guess(tight, 0.1));
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}

TEST_CASE("critical value") {
  const double c = fom::critical_mu1(cfg(), 0.1);
  CHECK(c == doctest::Approx(0.98676).epsilon(1e-5));
  CHECK(std::abs(c - 0.1 * std::numbers::pi * std::numbers::pi) <= 1e-3 * c);
  for (double mu2 : {0.06, 0.075, 0.11, 0.15}) {
    CHECK(fixtures::relative_difference(fom::critical_mu1(cfg(), 2.0 * mu2), 2.0 * fom::critical_mu1(cfg(), mu2)) <=
          1e-15);
  }
}

TEST_CASE("pitchfork on either side of the critical value") {
  const double c = fom::critical_mu1(cfg(), 0.1);
  const Vector w0 = fom::bias_guess(cfg(), cfg().bias_amplitude);
  const auto above = fom::steady_solve(cfg(), {c + 0.2, 0.1}, w0);
  const auto below = fom::steady_solve(cfg(), {c - 0.2, 0.1}, w0);
  REQUIRE(above.converged);
  REQUIRE(below.converged);
  CHECK(fom::probe(above.state) > 1e-2);
  CHECK(std::abs(fom::probe(below.state)) <= 1e-6);
}

TEST_CASE("probe") {
  const auto ops = fom::assemble_operators(cfg());
  CHECK(fom::probe(Vector::Zero(ops.state_size())) == 0.0);
  const Vector w = fom::bias_guess(cfg(), 1.0);
  CHECK(fom::probe(w) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fom::probe(flip_u(w)) == -fom::probe(w));
  Rng rng(3);
  const Vector r = random_vector(rng, ops.state_size());
  CHECK(fom::probe(flip_u(r)) == -fom::probe(r));
}

TEST_CASE("72 snapshots on the 8 x 9 grid") {
  const auto& set = fixtures::snapshots_8x9();
  CHECK(set.count() == 72);
  CHECK(set.states.cols() == 72);
  CHECK(set.states.rows() == cfg().state_size());
  const auto grid = grid_points(cfg().box, {8, 9});
  for (int j = 0; j < set.count(); ++j) {
    CHECK(set.params[static_cast<std::size_t>(j)] == grid[static_cast<std::size_t>(j)]);
    CHECK(set.final_increments[static_cast<std::size_t>(j)] < cfg().tol);
    const auto& mu = set.params[static_cast<std::size_t>(j)];
    if (mu.mu1 < fom::critical_mu1(cfg(), mu.mu2)) CHECK(std::abs(fom::probe(set.states.col(j))) <= 1e-6);
  }
  CHECK(set.params[1].mu1 > set.params[0].mu1);
  CHECK(set.params[1].mu2 == set.params[0].mu2);
}

TEST_CASE("snapshot generation is deterministic across thread counts") {
  const auto& first = fixtures::snapshots_8x9();
  set_thread_count(3);
  const auto again = fom::generate_snapshots(cfg(), {8, 9}, 0);
  set_thread_count(0);
  CHECK((again.states.array() == first.states.array()).all());
  CHECK(again.steps == first.steps);
}

TEST_CASE("snapshot grid needs at least two points per axis") {
  CHECK_THROWS_AS(fom::generate_snapshots(cfg(), {1, 5}, 0), Error);
}

TEST_CASE("onset is monotone along fixed mu2") {
  const Vector w0 = fom::bias_guess(cfg(), cfg().bias_amplitude);
  for (double mu2 : {0.07, 0.1, 0.14}) {
    const double c = fom::critical_mu1(cfg(), mu2);
    for (double offset : {-0.3, -0.1, -0.05}) {
      if (c + offset < cfg().box.mu1_min) continue;
      const auto sol = fom::steady_solve(cfg(), {c + offset, mu2}, w0);
      REQUIRE(sol.converged);
      CHECK(std::abs(fom::probe(sol.state)) <= 1e-6);
    }
    for (double offset : {0.05, 0.1, 0.3}) {
      if (c + offset > cfg().box.mu1_max) continue;
      const auto sol = fom::steady_solve(cfg(), {c + offset, mu2}, w0);
      REQUIRE(sol.converged);
      CHECK(fom::probe(sol.state) > 0.0);
    }
  }
}

TEST_CASE("march and Newton agree on the nonzero branch") {
  const auto ops = fom::assemble_operators(cfg());
  const Vector w0 = fom::bias_guess(cfg(), cfg().bias_amplitude);
  Rng rng(21);
  int tested = 0;
  while (tested < 5) {
    const ParameterPoint mu{rng.uniform(0.5, 2.0), rng.uniform(0.06, 0.15)};
    if (mu.mu1 < fom::critical_mu1(cfg(), mu.mu2) + 0.1) continue;
    const auto march = fom::steady_solve(cfg(), mu, w0);
    REQUIRE(march.converged);
    // Newton from the bias guess may land on another root; start it from
    // the march state at a nearby parameter instead.
    const auto nearby = fom::steady_solve(cfg(), {mu.mu1 + 0.02, mu.mu2}, w0);
    const auto newton = fom::newton_solve(cfg(), mu, nearby.state);
    REQUIRE(newton.converged);
    CHECK(ops.norm(march.state - newton.state) <= 1e-6);
    ++tested;
  }
}

TEST_CASE("configuration validation") {
  fom::FomConfig bad = cfg();
  bad.n_interior = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg();
  bad.dt = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(fom::steady_solve(cfg(), {1.0, 0.1}, Vector::Zero(5)), Error);
}

}  // TEST_SUITE
