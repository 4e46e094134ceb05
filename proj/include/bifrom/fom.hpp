#pragma once

#include <cstdint>
#include <vector>

#include "bifrom/types.hpp"

namespace bifrom::fom {

// Full-order model: the 1D two-field reaction-diffusion system
//
//   u_t = mu2 u_xx + mu1 u - u v
//   v_t = mu2 v_xx - v + u^2,      x in (0, 1), u = v = 0 on the boundary,
//
// discretized with second-order finite differences on n interior nodes. The
// trivial state loses stability at mu1 = mu2 * lambda_1 through a
// supercritical pitchfork; the branch with u >= 0 is the one tracked.
struct FomConfig {
  int n_interior = 63;
  ParameterBox box{};
  double dt = 0.05;
  double tol = 1e-9;
  // Pseudo-time steps close to the critical curve decay at a rate
  // proportional to |mu1 - mu1*|, so points within ~1e-3 of it need well over
  // a million steps.
  long max_steps = 4'000'000;
  double bias_amplitude = 0.1;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;

  void validate() const;
  int state_size() const { return 2 * n_interior; }
  double mesh_width() const { return 1.0 / (n_interior + 1); }
};

// Matrix-free operators of the discretization. The stacked state w = (u, v)
// has 2n entries; the X inner product is <a, b>_X = h * a.b.
class DiscreteOperators {
 public:
  explicit DiscreteOperators(int n_interior);

  int n() const { return n_; }
  int state_size() const { return 2 * n_; }
  double h() const { return h_; }
  double diagonal() const { return -2.0 / (h_ * h_); }
  double off_diagonal() const { return 1.0 / (h_ * h_); }

  // D_h applied to a single field of length n.
  Vector apply_laplacian(const Vector& field) const;
  // blkdiag(D_h, D_h) applied to a stacked state.
  Vector apply_stacked_laplacian(const Vector& state) const;
  Matrix laplacian_dense() const;

  // P_u w keeps the u-block, zeroes the v-block; P_v the opposite.
  Vector restrict_u(const Vector& state) const;
  Vector restrict_v(const Vector& state) const;

  // N(a, b) = (-u_a * v_b, u_a * u_b), entrywise products.
  Vector quadratic(const Vector& a, const Vector& b) const;
  // N_sym(a, b) = (N(a, b) + N(b, a)) / 2.
  Vector quadratic_sym(const Vector& a, const Vector& b) const;

  double inner(const Vector& a, const Vector& b) const { return h_ * a.dot(b); }
  double norm(const Vector& a) const;

 private:
  int n_;
  double h_;
};

DiscreteOperators assemble_operators(const FomConfig& cfg);

// Steady residual mu2 D w + mu1 P_u w - P_v w + N(w, w).
Vector residual(const DiscreteOperators& ops, const ParameterPoint& params, const Vector& w);

// Dense Jacobian of residual() at w.
Matrix jacobian(const DiscreteOperators& ops, const ParameterPoint& params, const Vector& w);

// Number of residual() evaluations performed by this process. Used to check
// that surrogate evaluation never touches the full-order model.
std::uint64_t residual_evaluation_count();

struct SteadySolution {
  ParameterPoint params{};
  StateVector state;
  long steps_taken = 0;
  bool converged = false;
  // Pseudo-time: last relative increment. Newton: last residual X-norm.
  double final_increment = 0.0;
};

// Semi-implicit pseudo-time march (diffusion and v-decay implicit, the rest
// explicit) stopped on ||w^n - w^{n-1}||_X / ||w^n||_X < tol. When ||w^n||_X
// drops below 1e-14 the absolute increment is tested instead.
SteadySolution steady_solve(const FomConfig& cfg, const ParameterPoint& params, const Vector& w0);

// Damped Newton on residual(); step halving (up to 30 times) whenever the
// residual norm would grow. Throws NoConvergence after newton_max_iter.
SteadySolution newton_solve(const FomConfig& cfg, const ParameterPoint& params, const Vector& w0);

// mu2 * lambda_1 with lambda_1 = (2 / h^2)(1 - cos(pi h)), the smallest
// eigenvalue of -D_h.
double critical_mu1(const FomConfig& cfg, double mu2);

// u at the node nearest x = 0.5.
double probe(const Vector& state);

// u0 = amplitude * sin(pi x), v0 = 0.
StateVector bias_guess(const FomConfig& cfg, double amplitude);

struct SnapshotSet {
  TensorGrid grid{};
  std::vector<ParameterPoint> params;
  Matrix states;  // 2n x Ns, column j solves params[j]
  std::vector<long> steps;
  std::vector<double> final_increments;
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(params.size()); }
};

// Steady states on the uniform tensor grid, one per column in grid order.
// Throws NonFinite or NoConvergence naming the offending grid index.
SnapshotSet generate_snapshots(const FomConfig& cfg, const TensorGrid& grid, std::uint64_t seed,
                               double bias_amplitude);
SnapshotSet generate_snapshots(const FomConfig& cfg, const TensorGrid& grid, std::uint64_t seed);

}  // namespace bifrom::fom
