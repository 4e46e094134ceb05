#pragma once

#include <vector>

#include <Eigen/Dense>

namespace bifrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Stacked (u, v) state: first n entries u at interior nodes, last n entries v.
using StateVector = Eigen::VectorXd;

struct ParameterPoint {
  double mu1 = 0.0;  // reaction strength, the bifurcation parameter
  double mu2 = 0.0;  // diffusivity

  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;
};

// Axis-aligned parameter domain. All nearest-neighbour logic runs in the
// normalized coordinates returned by normalize().
struct ParameterBox {
  double mu1_min = 0.5;
  double mu1_max = 2.0;
  double mu2_min = 0.06;
  double mu2_max = 0.15;

  bool contains(const ParameterPoint& p) const;
  Eigen::Vector2d normalize(const ParameterPoint& p) const;
  void validate() const;
};

// n1 points in mu1 by n2 points in mu2, uniformly spaced over the box,
// stored row-major with mu1 varying fastest.
struct TensorGrid {
  int n1 = 0;
  int n2 = 0;

  int size() const { return n1 * n2; }
  int index(int i1, int i2) const { return i2 * n1 + i1; }
  int i1_of(int index) const { return index % n1; }
  int i2_of(int index) const { return index / n1; }
};

std::vector<ParameterPoint> grid_points(const ParameterBox& box, const TensorGrid& grid);

}  // namespace bifrom
