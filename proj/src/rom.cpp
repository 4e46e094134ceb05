#include "bifrom/rom.hpp"

#include <cmath>
#include <optional>
#include <limits>

#include "bifrom/error.hpp"

namespace bifrom::rom {

Matrix ReducedOperators::linear_part(const ParameterPoint& params) const {
  return params.mu2 * a_diff + params.mu1 * a_react + a_decay;
}

ReducedOperators assemble_reduced(const pod::Basis& basis, const fom::DiscreteOperators& ops) {
  if (basis.modes.rows() != ops.state_size()) {
    throw Error(ErrorCode::DimensionMismatch, "assemble_reduced: basis rows do not match the state size");
  }
  const int l = basis.dim();
  const double h = ops.h();
  const Matrix& phi = basis.modes;

  ReducedOperators out;
  out.basis = basis;

  Matrix d_phi(phi.rows(), l);
  Matrix pu_phi(phi.rows(), l);
  Matrix pv_phi(phi.rows(), l);
  for (int j = 0; j < l; ++j) {
    d_phi.col(j) = ops.apply_stacked_laplacian(phi.col(j));
    pu_phi.col(j) = ops.restrict_u(phi.col(j));
    pv_phi.col(j) = ops.restrict_v(phi.col(j));
  }
  out.a_diff = h * (phi.transpose() * d_phi);
  out.a_react = h * (phi.transpose() * pu_phi);
  out.a_decay = -h * (phi.transpose() * pv_phi);
  out.cost.inner_products += 3ULL * static_cast<std::uint64_t>(l) * static_cast<std::uint64_t>(l);

  out.tensor.assign(static_cast<std::size_t>(l), Matrix::Zero(l, l));
  for (int j = 0; j < l; ++j) {
    for (int k = j; k < l; ++k) {
      const Vector q = ops.quadratic_sym(phi.col(j), phi.col(k));
      const Vector coeffs = h * (phi.transpose() * q);
      ++out.cost.quadratic_evaluations;
      out.cost.inner_products += static_cast<std::uint64_t>(l);
      for (int i = 0; i < l; ++i) {
        out.tensor[static_cast<std::size_t>(i)](j, k) = coeffs[i];
        out.tensor[static_cast<std::size_t>(i)](k, j) = coeffs[i];
      }
    }
  }
  return out;
}

Vector reduced_residual(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a) {
  if (a.size() != ops.dim()) throw Error(ErrorCode::DimensionMismatch, "reduced_residual: coefficient length");
  Vector r = ops.linear_part(params) * a;
  for (int i = 0; i < ops.dim(); ++i) r[i] += a.dot(ops.tensor[static_cast<std::size_t>(i)] * a);
  return r;
}

Matrix reduced_jacobian(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a) {
  if (a.size() != ops.dim()) throw Error(ErrorCode::DimensionMismatch, "reduced_jacobian: coefficient length");
  Matrix j = ops.linear_part(params);
  // Symmetry of T[i] in its last two indices gives d/da_j T(a, a)_i = 2 (T[i] a)_j.
  for (int i = 0; i < ops.dim(); ++i) j.row(i) += 2.0 * (ops.tensor[static_cast<std::size_t>(i)] * a).transpose();
  return j;
}

namespace {

RomSolution newton(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a0,
                   const RomSolverOptions& options) {
  RomSolution out;
  Vector a = a0;
  Vector r = reduced_residual(ops, params, a);
  double rnorm = r.norm();
  for (int iter = 0;; ++iter) {
    out.newton_iters = iter;
    if (!std::isfinite(rnorm)) break;
    if (rnorm < options.tol) {
      out.converged = true;
      out.status = RomStatus::Converged;
      break;
    }
    if (iter == options.max_iter) break;

    const Eigen::PartialPivLU<Matrix> lu(reduced_jacobian(ops, params, a));
    const Vector step = lu.solve(-r);
    if (!step.allFinite() || lu.rcond() < 1e-15) {
      out.status = RomStatus::SingularJacobian;
      break;
    }
    double t = 1.0;
    Vector trial = a + step;
    Vector trial_r = reduced_residual(ops, params, trial);
    double trial_norm = trial_r.norm();
    for (int halving = 0; halving < 30 && !(trial_norm < rnorm); ++halving) {
      t *= 0.5;
      trial = a + t * step;
      trial_r = reduced_residual(ops, params, trial);
      trial_norm = trial_r.norm();
    }
    a = std::move(trial);
    r = std::move(trial_r);
    rnorm = trial_norm;
  }
  out.coeffs = std::move(a);
  out.residual_norm = rnorm;
  return out;
}

// Reduced analogue of the full-order pseudo-time march: diffusion and decay
// implicit, reaction and quadratic terms explicit.
RomSolution fixed_point(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a0,
                        const RomSolverOptions& options) {
  const int l = ops.dim();
  const double dt = options.fixed_point_dt;
  const Matrix implicit = Matrix::Identity(l, l) - dt * (params.mu2 * ops.a_diff + ops.a_decay);
  const Eigen::PartialPivLU<Matrix> lu(implicit);

  RomSolution out;
  Vector a = a0;
  double rnorm = reduced_residual(ops, params, a).norm();
  long iter = 0;
  while (std::isfinite(rnorm) && rnorm >= options.tol && iter < options.fixed_point_max_iter) {
    Vector rhs = a + dt * (params.mu1 * (ops.a_react * a));
    for (int i = 0; i < l; ++i) rhs[i] += dt * a.dot(ops.tensor[static_cast<std::size_t>(i)] * a);
    a = lu.solve(rhs);
    rnorm = reduced_residual(ops, params, a).norm();
    ++iter;
  }
  out.converged = std::isfinite(rnorm) && rnorm < options.tol;
  out.status = out.converged ? RomStatus::Converged : RomStatus::NoConvergence;
  out.newton_iters = static_cast<int>(std::min<long>(iter, std::numeric_limits<int>::max()));
  out.residual_norm = rnorm;
  out.coeffs = std::move(a);
  return out;
}

}  // namespace

RomSolution rom_solve(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a0,
                      const RomSolverOptions& options) {
  if (a0.size() != ops.dim()) throw Error(ErrorCode::DimensionMismatch, "rom_solve: initial guess length");
  return options.method == RomMethod::Newton ? newton(ops, params, a0, options)
                                             : fixed_point(ops, params, a0, options);
}

double leading_eigenvalue(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a) {
  if (ops.dim() == 0) return -std::numeric_limits<double>::infinity();
  const Eigen::EigenSolver<Matrix> eig(reduced_jacobian(ops, params, a), false);
  if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  return eig.eigenvalues().real().maxCoeff();
}

bool is_stable(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a, double slack) {
  return leading_eigenvalue(ops, params, a) <= slack;
}

RomSolution rom_solve_stable(const ReducedOperators& ops, const ParameterPoint& params,
                             const std::vector<Vector>& guesses, const RomSolverOptions& options) {
  if (guesses.empty()) throw Error(ErrorCode::InvalidConfig, "rom_solve_stable: no initial guess");
  std::optional<RomSolution> first;
  std::optional<RomSolution> first_converged;
  for (const Vector& guess : guesses) {
    RomSolution sol = rom_solve(ops, params, guess, options);
    if (sol.converged && is_stable(ops, params, sol.coeffs)) return sol;
    if (sol.converged && !first_converged) first_converged = sol;
    if (!first) first = std::move(sol);
  }
  // Newton found only unstable or no roots: follow the reduced pseudo-time
  // dynamics instead, which settle on a stable state, then polish.
  RomSolverOptions march = options;
  march.method = RomMethod::FixedPoint;
  march.tol = std::sqrt(options.tol);
  for (const Vector& guess : guesses) {
    const RomSolution coarse = rom_solve(ops, params, guess, march);
    if (!coarse.converged) continue;
    RomSolverOptions polish = options;
    polish.method = RomMethod::Newton;
    RomSolution sol = rom_solve(ops, params, coarse.coeffs, polish);
    if (sol.converged && is_stable(ops, params, sol.coeffs)) return sol;
  }
  return first_converged ? *first_converged : *first;
}

StateVector lift(const ReducedOperators& ops, const RomSolution& solution) { return lift(ops, solution.coeffs); }

StateVector lift(const ReducedOperators& ops, const Vector& coeffs) { return pod::reconstruct(ops.basis, coeffs); }

}  // namespace bifrom::rom
