#pragma once

#include <cstdint>
#include <vector>

#include "bifrom/fom.hpp"
#include "bifrom/pod.hpp"
#include "bifrom/types.hpp"

namespace bifrom::rom {

// Operation counts recorded during assembly. Matrices need O(L^2) inner
// products, the trilinear tensor L(L+1)/2 quadratic-form evaluations each
// followed by L inner products, so the tensor dominates at O(L^3 N).
struct AssemblyCost {
  std::uint64_t quadratic_evaluations = 0;
  std::uint64_t inner_products = 0;
};

// Galerkin-projected operators, affine in the parameters:
//   r(a) = (mu2 A_diff + mu1 A_react + A_decay) a + T(a, a),
//   T(a, a)_i = sum_jk T[i](j, k) a_j a_k.
struct ReducedOperators {
  pod::Basis basis;
  Matrix a_diff;
  Matrix a_react;
  Matrix a_decay;
  std::vector<Matrix> tensor;  // tensor[i](j, k) = <phi_i, N_sym(phi_j, phi_k)>_X
  AssemblyCost cost{};

  int dim() const { return basis.dim(); }
  Matrix linear_part(const ParameterPoint& params) const;
};

ReducedOperators assemble_reduced(const pod::Basis& basis, const fom::DiscreteOperators& ops);

Vector reduced_residual(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a);
Matrix reduced_jacobian(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a);

enum class RomMethod { Newton, FixedPoint };
enum class RomStatus { Converged, NoConvergence, SingularJacobian };

struct RomSolverOptions {
  RomMethod method = RomMethod::Newton;
  double tol = 1e-10;
  int max_iter = 50;
  // Fixed-point variant: reduced semi-implicit pseudo-time iteration.
  double fixed_point_dt = 0.05;
  long fixed_point_max_iter = 2'000'000;
};

struct RomSolution {
  Vector coeffs;
  bool converged = false;
  RomStatus status = RomStatus::NoConvergence;
  int newton_iters = 0;
  double residual_norm = 0.0;
};

// Never throws on solver failure; the status says what happened.
RomSolution rom_solve(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a0,
                      const RomSolverOptions& options = {});

// Linear stability of a reduced steady state under the Galerkin dynamics
// da/dt = r(a): every Jacobian eigenvalue has real part <= slack.
double leading_eigenvalue(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a);
bool is_stable(const ReducedOperators& ops, const ParameterPoint& params, const Vector& a, double slack = 1e-9);

// Tries the guesses in order and keeps the first converged, stable
// solution. Past a pitchfork the zero state is still a root, so a guess on
// the wrong side of the critical curve can land on the unstable branch;
// the pseudo-time full-order model never selects that one. Falls back to
// the first converged solution, then to the first attempt.
RomSolution rom_solve_stable(const ReducedOperators& ops, const ParameterPoint& params,
                             const std::vector<Vector>& guesses, const RomSolverOptions& options = {});

StateVector lift(const ReducedOperators& ops, const RomSolution& solution);
StateVector lift(const ReducedOperators& ops, const Vector& coeffs);

}  // namespace bifrom::rom
