#include "bifrom/types.hpp"

#include <cmath>

#include "bifrom/error.hpp"

namespace bifrom {

bool ParameterBox::contains(const ParameterPoint& p) const {
  return std::isfinite(p.mu1) && std::isfinite(p.mu2) && p.mu1 >= mu1_min && p.mu1 <= mu1_max &&
         p.mu2 >= mu2_min && p.mu2 <= mu2_max;
}

Eigen::Vector2d ParameterBox::normalize(const ParameterPoint& p) const {
  return {(p.mu1 - mu1_min) / (mu1_max - mu1_min), (p.mu2 - mu2_min) / (mu2_max - mu2_min)};
}

void ParameterBox::validate() const {
  const bool finite = std::isfinite(mu1_min) && std::isfinite(mu1_max) && std::isfinite(mu2_min) &&
                      std::isfinite(mu2_max);
  if (!finite || !(mu1_max > mu1_min) || !(mu2_max > mu2_min)) {
    throw Error(ErrorCode::InvalidConfig, "parameter ranges must be finite and non-degenerate");
  }
}

std::vector<ParameterPoint> grid_points(const ParameterBox& box, const TensorGrid& grid) {
  std::vector<ParameterPoint> points;
  points.reserve(static_cast<std::size_t>(grid.size()));
  for (int i2 = 0; i2 < grid.n2; ++i2) {
    for (int i1 = 0; i1 < grid.n1; ++i1) {
      // Endpoints are hit exactly.
      const double t1 = grid.n1 > 1 ? static_cast<double>(i1) / (grid.n1 - 1) : 0.0;
      const double t2 = grid.n2 > 1 ? static_cast<double>(i2) / (grid.n2 - 1) : 0.0;
      points.push_back({box.mu1_min + t1 * (box.mu1_max - box.mu1_min),
                        box.mu2_min + t2 * (box.mu2_max - box.mu2_min)});
    }
  }
  return points;
}

}  // namespace bifrom
