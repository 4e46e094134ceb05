#include "bifrom/fom.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

#include "bifrom/error.hpp"
#include "bifrom/parallel.hpp"

namespace bifrom::fom {
namespace {

std::atomic<std::uint64_t> g_residual_evaluations{0};

// Symmetric tridiagonal matrix with constant diagonal and off-diagonal,
// factored once for repeated Thomas solves.
class ConstantTridiagonal {
 public:
  ConstantTridiagonal(int n, double diag, double off) : off_(off), cprime_(n), inv_denom_(n) {
    double c_prev = 0.0;
    for (int i = 0; i < n; ++i) {
      const double denom = diag - (i > 0 ? off * c_prev : 0.0);
      inv_denom_[i] = 1.0 / denom;
      cprime_[i] = off * inv_denom_[i];
      c_prev = cprime_[i];
    }
  }

  void solve_in_place(Eigen::Ref<Vector> rhs) const {
    const Eigen::Index n = rhs.size();
    rhs[0] *= inv_denom_[0];
    for (Eigen::Index i = 1; i < n; ++i) rhs[i] = (rhs[i] - off_ * rhs[i - 1]) * inv_denom_[i];
    for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] -= cprime_[i] * rhs[i + 1];
  }

 private:
  double off_;
  Vector cprime_;
  Vector inv_denom_;
};

void check_size(const DiscreteOperators& ops, const Vector& w, const char* what) {
  if (w.size() != ops.state_size()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": expected state of length " +
                                                  std::to_string(ops.state_size()) + ", got " +
                                                  std::to_string(w.size()));
  }
}

}  // namespace

void FomConfig::validate() const {
  if (n_interior < 3) throw Error(ErrorCode::InvalidConfig, "n_interior must be >= 3");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidConfig, "dt must be > 0");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be > 0");
  if (max_steps < 1) throw Error(ErrorCode::InvalidConfig, "max_steps must be >= 1");
  if (!(newton_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "newton_tol must be > 0");
  if (newton_max_iter < 1) throw Error(ErrorCode::InvalidConfig, "newton_max_iter must be >= 1");
  if (!std::isfinite(bias_amplitude)) throw Error(ErrorCode::InvalidConfig, "bias_amplitude not finite");
  box.validate();
}

DiscreteOperators::DiscreteOperators(int n_interior) : n_(n_interior), h_(1.0 / (n_interior + 1)) {
  if (n_interior < 3) throw Error(ErrorCode::InvalidConfig, "n_interior must be >= 3");
}

Vector DiscreteOperators::apply_laplacian(const Vector& field) const {
  const double inv_h2 = 1.0 / (h_ * h_);
  Vector out(n_);
  for (int i = 0; i < n_; ++i) {
    const double left = i > 0 ? field[i - 1] : 0.0;
    const double right = i + 1 < n_ ? field[i + 1] : 0.0;
    out[i] = (left - 2.0 * field[i] + right) * inv_h2;
  }
  return out;
}

Vector DiscreteOperators::apply_stacked_laplacian(const Vector& state) const {
  Vector out(2 * n_);
  out.head(n_) = apply_laplacian(state.head(n_));
  out.tail(n_) = apply_laplacian(state.tail(n_));
  return out;
}

Matrix DiscreteOperators::laplacian_dense() const {
  Matrix d = Matrix::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    d(i, i) = diagonal();
    if (i > 0) d(i, i - 1) = off_diagonal();
    if (i + 1 < n_) d(i, i + 1) = off_diagonal();
  }
  return d;
}

Vector DiscreteOperators::restrict_u(const Vector& state) const {
  Vector out = Vector::Zero(2 * n_);
  out.head(n_) = state.head(n_);
  return out;
}

Vector DiscreteOperators::restrict_v(const Vector& state) const {
  Vector out = Vector::Zero(2 * n_);
  out.tail(n_) = state.tail(n_);
  return out;
}

Vector DiscreteOperators::quadratic(const Vector& a, const Vector& b) const {
  Vector out(2 * n_);
  out.head(n_) = -(a.head(n_).array() * b.tail(n_).array());
  out.tail(n_) = a.head(n_).array() * b.head(n_).array();
  return out;
}

Vector DiscreteOperators::quadratic_sym(const Vector& a, const Vector& b) const {
  return 0.5 * (quadratic(a, b) + quadratic(b, a));
}

double DiscreteOperators::norm(const Vector& a) const { return std::sqrt(h_ * a.squaredNorm()); }

DiscreteOperators assemble_operators(const FomConfig& cfg) {
  cfg.validate();
  return DiscreteOperators(cfg.n_interior);
}

Vector residual(const DiscreteOperators& ops, const ParameterPoint& params, const Vector& w) {
  check_size(ops, w, "residual");
  g_residual_evaluations.fetch_add(1, std::memory_order_relaxed);
  const int n = ops.n();
  Vector r = params.mu2 * ops.apply_stacked_laplacian(w) + ops.quadratic(w, w);
  r.head(n) += params.mu1 * w.head(n);
  r.tail(n) -= w.tail(n);
  return r;
}

Matrix jacobian(const DiscreteOperators& ops, const ParameterPoint& params, const Vector& w) {
  check_size(ops, w, "jacobian");
  const int n = ops.n();
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  const Matrix d = ops.laplacian_dense();
  j.topLeftCorner(n, n) = params.mu2 * d;
  j.bottomRightCorner(n, n) = params.mu2 * d;
  for (int i = 0; i < n; ++i) {
    const double u = w[i];
    const double v = w[n + i];
    j(i, i) += params.mu1 - v;      // d/du of mu1 u - u v
    j(i, n + i) += -u;              // d/dv of -u v
    j(n + i, i) += 2.0 * u;         // d/du of u^2
    j(n + i, n + i) += -1.0;        // decay
  }
  return j;
}

std::uint64_t residual_evaluation_count() { return g_residual_evaluations.load(); }

SteadySolution steady_solve(const FomConfig& cfg, const ParameterPoint& params, const Vector& w0) {
  cfg.validate();
  if (w0.size() != cfg.state_size()) {
    throw Error(ErrorCode::DimensionMismatch, "steady_solve: initial state has wrong length");
  }
  if (!w0.allFinite()) throw Error(ErrorCode::NonFinite, "steady_solve: initial state not finite");

  const int n = cfg.n_interior;
  const double h = cfg.mesh_width();
  const double dt = cfg.dt;
  const double inv_h2 = 1.0 / (h * h);
  // (I - dt mu2 D) for u and ((1 + dt) I - dt mu2 D) for v.
  const ConstantTridiagonal solve_u(n, 1.0 + 2.0 * dt * params.mu2 * inv_h2, -dt * params.mu2 * inv_h2);
  const ConstantTridiagonal solve_v(n, 1.0 + dt + 2.0 * dt * params.mu2 * inv_h2,
                                    -dt * params.mu2 * inv_h2);

  SteadySolution out;
  out.params = params;
  Vector w = w0;
  Vector next(2 * n);
  double increment = 0.0;
  for (long step = 1; step <= cfg.max_steps; ++step) {
    auto u = w.head(n).array();
    auto v = w.tail(n).array();
    next.head(n) = u + dt * (params.mu1 * u - u * v);
    next.tail(n) = v + dt * u * u;
    solve_u.solve_in_place(next.head(n));
    solve_v.solve_in_place(next.tail(n));

    const double diff = std::sqrt(h * (next - w).squaredNorm());
    const double size = std::sqrt(h * next.squaredNorm());
    if (!std::isfinite(diff) || !std::isfinite(size)) {
      throw Error(ErrorCode::NonFinite, "steady_solve: state left the finite range at step " +
                                            std::to_string(step) + " (dt too large?)");
    }
    increment = size < 1e-14 ? diff : diff / size;
    w.swap(next);
    out.steps_taken = step;
    if (increment < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.final_increment = increment;
  out.state = std::move(w);
  return out;
}

SteadySolution newton_solve(const FomConfig& cfg, const ParameterPoint& params, const Vector& w0) {
  const DiscreteOperators ops = assemble_operators(cfg);
  check_size(ops, w0, "newton_solve");

  SteadySolution out;
  out.params = params;
  Vector w = w0;
  Vector r = residual(ops, params, w);
  double rnorm = ops.norm(r);
  for (int iter = 0; iter <= cfg.newton_max_iter; ++iter) {
    if (!std::isfinite(rnorm)) throw Error(ErrorCode::NonFinite, "newton_solve: residual not finite");
    if (rnorm < cfg.newton_tol) {
      out.converged = true;
      out.steps_taken = iter;
      out.final_increment = rnorm;
      out.state = std::move(w);
      return out;
    }
    if (iter == cfg.newton_max_iter) break;

    const Eigen::PartialPivLU<Matrix> lu(jacobian(ops, params, w));
    const Vector step = lu.solve(-r);
    if (!step.allFinite()) throw Error(ErrorCode::SingularJacobian, "newton_solve: singular Jacobian");

    double t = 1.0;
    Vector trial = w + step;
    Vector trial_r = residual(ops, params, trial);
    double trial_norm = ops.norm(trial_r);
    for (int halving = 0; halving < 30 && !(trial_norm < rnorm); ++halving) {
      t *= 0.5;
      trial = w + t * step;
      trial_r = residual(ops, params, trial);
      trial_norm = ops.norm(trial_r);
    }
    w = std::move(trial);
    r = std::move(trial_r);
    rnorm = trial_norm;
  }
  throw Error(ErrorCode::NoConvergence, "newton_solve: residual " + std::to_string(rnorm) +
                                            " after " + std::to_string(cfg.newton_max_iter) +
                                            " iterations");
}

double critical_mu1(const FomConfig& cfg, double mu2) {
  const double h = cfg.mesh_width();
  const double lambda1 = 2.0 / (h * h) * (1.0 - std::cos(std::numbers::pi * h));
  return mu2 * lambda1;
}

double probe(const Vector& state) {
  const Eigen::Index n = state.size() / 2;
  return state[(n + 1) / 2 - 1];
}

StateVector bias_guess(const FomConfig& cfg, double amplitude) {
  const int n = cfg.n_interior;
  const double h = cfg.mesh_width();
  StateVector w = StateVector::Zero(2 * n);
  for (int i = 0; i < n; ++i) w[i] = amplitude * std::sin(std::numbers::pi * (i + 1) * h);
  return w;
}

SnapshotSet generate_snapshots(const FomConfig& cfg, const TensorGrid& grid, std::uint64_t seed,
                               double bias_amplitude) {
  cfg.validate();
  if (grid.n1 < 2 || grid.n2 < 2) throw Error(ErrorCode::InvalidConfig, "snapshot grid needs n1, n2 >= 2");

  SnapshotSet set;
  set.grid = grid;
  set.seed = seed;
  set.params = grid_points(cfg.box, grid);
  const auto count = static_cast<std::size_t>(grid.size());
  set.states.resize(cfg.state_size(), grid.size());
  set.steps.assign(count, 0);
  set.final_increments.assign(count, 0.0);

  const StateVector guess = bias_guess(cfg, bias_amplitude);
  parallel_for(count, [&](std::size_t j) {
    SteadySolution sol;
    try {
      sol = steady_solve(cfg, set.params[j], guess);
    } catch (const Error& e) {
      throw Error(e.code(), "grid index " + std::to_string(j) + ": " + e.what());
    }
    if (!sol.converged) {
      throw Error(ErrorCode::NoConvergence,
                  "grid index " + std::to_string(j) + " (mu1=" + std::to_string(set.params[j].mu1) +
                      ", mu2=" + std::to_string(set.params[j].mu2) + ") not converged after " +
                      std::to_string(sol.steps_taken) + " steps, increment " +
                      std::to_string(sol.final_increment));
    }
    set.states.col(static_cast<Eigen::Index>(j)) = sol.state;
    set.steps[j] = sol.steps_taken;
    set.final_increments[j] = sol.final_increment;
  });
  return set;
}

SnapshotSet generate_snapshots(const FomConfig& cfg, const TensorGrid& grid, std::uint64_t seed) {
  return generate_snapshots(cfg, grid, seed, cfg.bias_amplitude);
}

}  // namespace bifrom::fom
