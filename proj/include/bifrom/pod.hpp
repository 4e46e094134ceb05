#pragma once

#include "bifrom/types.hpp"

namespace bifrom::pod {

// X-orthonormal POD basis: weight * modes^T * modes = I.
struct Basis {
  Matrix modes;            // state size x L
  Vector singular_values;  // L entries, nonincreasing, positive
  double energy_tol = 0.0;
  double weight = 1.0;     // mesh width h of the X inner product

  int dim() const { return static_cast<int>(modes.cols()); }
};

// Method of snapshots: eigendecomposition of the Gram matrix weight * S^T S.
// Keeps the smallest L whose discarded eigenvalue fraction is <= energy_tol;
// eigenvalues below 1e-13 * lambda_max are dropped regardless. The entry of
// largest magnitude in every mode is made positive.
Basis compute_pod(const Matrix& snapshots, double energy_tol, double weight);

// Coefficients a = weight * Phi^T w.
Vector project(const Basis& basis, const Vector& state);
Matrix project(const Basis& basis, const Matrix& states);

StateVector reconstruct(const Basis& basis, const Vector& coeffs);

// ||w - Phi Phi^T_X w||_X
double projection_error(const Basis& basis, const Vector& state);

}  // namespace bifrom::pod
