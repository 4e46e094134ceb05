#pragma once

#include "bifrom/types.hpp"

namespace bifrom::eval {

struct RelativeErrors {
  double l2 = 0.0;
  double linf = 0.0;
  // True when the reference u-field is zero and the values are absolute norms.
  bool absolute = false;
};

// Reference u-fields with Euclidean norm at or below this count as zero.
// Zero-branch steady states stop decaying near 1e-14, not at exact zero.
inline constexpr double kZeroFieldFloor = 1e-8;

// Errors over the u-block only:
//   ||u_a - u_r||_2 / ||u_r||_2 and ||u_a - u_r||_inf / ||u_r||_inf.
// With full_state the whole stacked vector is compared instead.
RelativeErrors relative_errors(const StateVector& approx, const StateVector& reference, bool full_state = false);

}  // namespace bifrom::eval
