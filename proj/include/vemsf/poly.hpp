#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "vemsf/mesh.hpp"
#include "vemsf/quadrature.hpp"

namespace vemsf {

// dim P_k in 2D; zero for negative k
inline int poly_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

// degree-major ordering: (0,0); (1,0),(0,1); (2,0),(1,1),(0,2); ...
inline int monomial_index(int ax, int ay) {
  const int d = ax + ay;
  return d * (d + 1) / 2 + ay;
}
std::pair<int, int> monomial_powers(int idx);

// concatenation of triangle rules over a sub-triangulation
QuadratureRule cell_quadrature(const SubTriangulation& st, int exactness);

enum class BasisKind {
  ScaledMonomial,  // ((x-x_K)/h_K)^alpha
  Orthonormal      // bbox-prescaled monomials, Gram-Schmidt L2(K)-orthonormalized
};

// Polynomial basis on one polygonal cell. Coefficient vectors are always over
// the (pre-scaled) monomials mu_alpha; `ortho()` gives the change of basis to
// the L2-orthonormal family used for moment degrees of freedom.
class CellBasis {
 public:
  CellBasis(const std::vector<Vec2>& polygon, const SubTriangulation& st, int degree,
            BasisKind kind, int quad_exactness);

  int degree() const { return degree_; }
  int dim() const { return poly_dim(degree_); }
  const Vec2& center() const { return center_; }
  const Vec2& scale() const { return scale_; }
  double measure() const { return measure_; }
  double diameter() const { return diameter_; }
  BasisKind kind() const { return kind_; }

  // one point per row of `pts`; columns are basis functions
  Eigen::MatrixXd eval(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts, int deg = -1) const;
  Eigen::MatrixXd eval_dx(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts, int deg = -1) const;
  Eigen::MatrixXd eval_dy(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts, int deg = -1) const;

  // coefficient-space calculus: P_deg -> P_{deg-1} / P_{deg-2}
  Eigen::MatrixXd dx_map(int deg) const;
  Eigen::MatrixXd dy_map(int deg) const;
  Eigen::MatrixXd laplacian_map(int deg) const;

  // (mu_a, mu_b)_K and (grad mu_a, grad mu_b)_K up to `degree`
  const Eigen::MatrixXd& mass() const { return mass_; }
  const Eigen::MatrixXd& stiffness() const { return stiffness_; }

  // columns: coefficients of functions orthonormal for (1/|K|)(.,.)_K;
  // lower-degree leading blocks are themselves orthonormal bases of P_j
  const Eigen::MatrixXd& ortho() const { return ortho_; }

  // integral of each mu_a over the cell boundary
  const Eigen::VectorXd& boundary_integrals() const { return boundary_integrals_; }

 private:
  int degree_;
  BasisKind kind_;
  Vec2 center_;
  Vec2 scale_;
  double measure_;
  double diameter_;
  Eigen::MatrixXd mass_, stiffness_, ortho_;
  Eigen::VectorXd boundary_integrals_;
};

// L2(K) projection of f onto P_deg in CellBasis coefficients
Eigen::VectorXd l2_project(const std::function<double(const Vec2&)>& f, const CellBasis& basis,
                           const SubTriangulation& st, int deg, int quad_exactness);

// Orthonormal Legendre basis on one edge: phi_i(s) = sqrt(2i+1) L_i(s), with
// s in [-1,1] the canonical parameter running a -> b, so that
// (1/|F|)(phi_i, phi_j)_F = delta_ij.
class EdgeBasis {
 public:
  EdgeBasis(const Vec2& a, const Vec2& b, int degree);

  int degree() const { return degree_; }
  int dim() const { return degree_ + 1; }
  double length() const { return length_; }
  const Vec2& a() const { return a_; }
  const Vec2& b() const { return b_; }

  double s_of(const Vec2& p) const { return (p - mid_).dot(tangent_) * 2.0 / length_; }
  Eigen::MatrixXd eval_s(const Eigen::VectorXd& s) const;  // npts x dim
  Eigen::MatrixXd eval(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const;

 private:
  int degree_;
  Vec2 a_, b_, mid_, tangent_;
  double length_;
};

// moments (1/|F|)(f, phi_i)_F, i = 0..deg
Eigen::VectorXd edge_moments(const std::function<double(const Vec2&)>& f, const EdgeBasis& basis,
                             int quad_exactness);

}  // namespace vemsf
