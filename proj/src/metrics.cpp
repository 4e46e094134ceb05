#include "bifrom/metrics.hpp"

#include "bifrom/error.hpp"

namespace bifrom::eval {

RelativeErrors relative_errors(const StateVector& approx, const StateVector& reference, bool full_state) {
  if (approx.size() != reference.size() || reference.size() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "relative_errors: state lengths differ");
  }
  const Eigen::Index n = full_state ? reference.size() : reference.size() / 2;
  const auto ua = approx.head(n);
  const auto ur = reference.head(n);
  const double diff_l2 = (ua - ur).norm();
  const double diff_linf = n > 0 ? (ua - ur).cwiseAbs().maxCoeff() : 0.0;
  const double ref_l2 = ur.norm();
  const double ref_linf = n > 0 ? ur.cwiseAbs().maxCoeff() : 0.0;

  RelativeErrors out;
  if (ref_l2 > kZeroFieldFloor) {
    out.l2 = diff_l2 / ref_l2;
    out.linf = diff_linf / ref_linf;
  } else {
    out.l2 = diff_l2;
    out.linf = diff_linf;
    out.absolute = true;
  }
  return out;
}

}  // namespace bifrom::eval
