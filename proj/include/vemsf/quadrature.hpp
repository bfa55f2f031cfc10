#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vemsf/geometry.hpp"

namespace vemsf {

// Quadrature points and weights; weights are strictly positive and sum to the
// measure of the domain they were mapped to.
struct QuadratureRule {
  Eigen::Matrix<double, Eigen::Dynamic, 2> points;  // one point per row
  Eigen::VectorXd weights;
  int exactness = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

// Gauss-Legendre nodes/weights on [-1,1], exact for degree <= 2n-1
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

// Rule on the segment [a,b], exact for polynomials of the given total degree
QuadratureRule segment_rule(const Vec2& a, const Vec2& b, int exactness);

// Rule on a triangle, exact for bivariate polynomials of the given total
// degree; collapsed Gauss-Legendre x Gauss-Jacobi tensor rule (all weights
// positive at every degree)
QuadratureRule triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, int exactness);

}  // namespace vemsf
