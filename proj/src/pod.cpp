#include "bifrom/pod.hpp"

#include <cmath>
#include <string>

#include "bifrom/error.hpp"

namespace bifrom::pod {

Basis compute_pod(const Matrix& snapshots, double energy_tol, double weight) {
  if (snapshots.cols() < 1) throw Error(ErrorCode::ZeroSnapshots, "compute_pod: no snapshot columns");
  if (!(energy_tol >= 0.0 && energy_tol < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "compute_pod: energy_tol must lie in [0, 1)");
  }
  if (!(weight > 0.0)) throw Error(ErrorCode::InvalidConfig, "compute_pod: weight must be > 0");
  if (!snapshots.allFinite()) throw Error(ErrorCode::NonFinite, "compute_pod: snapshots not finite");

  const Matrix gram = weight * (snapshots.transpose() * snapshots);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "compute_pod: eigensolver failed");

  // Eigen returns ascending order.
  const Eigen::Index m = gram.rows();
  const Vector lambda = eig.eigenvalues().reverse();
  const Matrix q = eig.eigenvectors().rowwise().reverse();

  const double lambda_max = lambda[0];
  if (!(lambda_max > 0.0)) throw Error(ErrorCode::ZeroSnapshots, "compute_pod: all snapshots are zero");

  Eigen::Index usable = 0;
  while (usable < m && lambda[usable] > 1e-13 * lambda_max) ++usable;
  if (usable == 0) throw Error(ErrorCode::ZeroSnapshots, "compute_pod: all snapshots are zero");

  const double total = lambda.head(usable).sum();
  Eigen::Index keep = usable;
  for (Eigen::Index l = 1; l <= usable; ++l) {
    const double tail = l < usable ? lambda.segment(l, usable - l).sum() : 0.0;
    if (tail / total <= energy_tol) {
      keep = l;
      break;
    }
  }

  Basis basis;
  basis.energy_tol = energy_tol;
  basis.weight = weight;
  basis.singular_values = lambda.head(keep).cwiseSqrt();
  basis.modes.resize(snapshots.rows(), keep);
  for (Eigen::Index i = 0; i < keep; ++i) {
    Vector mode = snapshots * q.col(i) / basis.singular_values[i];
    Eigen::Index arg = 0;
    mode.cwiseAbs().maxCoeff(&arg);
    if (mode[arg] < 0.0) mode = -mode;
    basis.modes.col(i) = mode;
  }
  return basis;
}

Vector project(const Basis& basis, const Vector& state) {
  if (state.size() != basis.modes.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "project: state length " + std::to_string(state.size()) +
                                                  " vs basis rows " + std::to_string(basis.modes.rows()));
  }
  return basis.weight * (basis.modes.transpose() * state);
}

Matrix project(const Basis& basis, const Matrix& states) {
  if (states.rows() != basis.modes.rows()) throw Error(ErrorCode::DimensionMismatch, "project: row mismatch");
  return basis.weight * (basis.modes.transpose() * states);
}

StateVector reconstruct(const Basis& basis, const Vector& coeffs) {
  if (coeffs.size() != basis.dim()) throw Error(ErrorCode::DimensionMismatch, "reconstruct: coefficient length");
  return basis.modes * coeffs;
}

double projection_error(const Basis& basis, const Vector& state) {
  const Vector r = state - reconstruct(basis, project(basis, state));
  return std::sqrt(basis.weight * r.squaredNorm());
}

}  // namespace bifrom::pod
