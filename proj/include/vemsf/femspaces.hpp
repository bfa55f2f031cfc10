#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "vemsf/poly.hpp"

namespace vemsf {

// Affine frame of one triangle: x = v0 + J * xi, xi in the unit simplex.
// Scalar polynomials on the triangle are expressed in the xi-monomials
// mu_(a,b) = xi1^a xi2^b (well conditioned regardless of the triangle shape).
struct TriangleFrame {
  Vec2 v0;
  Eigen::Matrix2d J, Jinv;
  double area;

  TriangleFrame() = default;
  TriangleFrame(const Vec2& p0, const Vec2& p1, const Vec2& p2);
  Vec2 xi(const Vec2& x) const { return Jinv * (x - v0); }
};

// xi-monomial values at points: npts x dim P_deg
Eigen::MatrixXd tri_monomials(const TriangleFrame& T, int deg,
                              const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts);
// global-coordinate derivative maps on xi-monomial coefficients: P_deg -> P_{deg-1}
Eigen::MatrixXd tri_dx_map(const TriangleFrame& T, int deg);
Eigen::MatrixXd tri_dy_map(const TriangleFrame& T, int deg);

// Vector-valued H(div) element on a triangle.
//   r >= 1: full vector polynomials P_r(T)^2, dimension (r+1)(r+2), with
//           degrees of freedom
//             - normal moments (1/|e|)(v.n_e, phi_i)_e against the given edge
//               orientation/normal, i = 0..r, per edge;
//             - divergence moments against a mean-free basis of P_{r-1}(T);
//             - interior moments against q*rot(x - x_T), q in P_{r-2}(T),
//               rot(x) = (y, -x).
//   r == 0: the 3-dimensional lowest-order space P_0^2 + span{x - x_T} with
//           one normal moment per edge.
// The working frame starts from the component monomials {(mu_a, 0)} +
// {(0, mu_a)} (r = 0: {(1,0),(0,1),(x-x_T)/h_T}) and is L2(T)/|T|-
// orthonormalized, which keeps every downstream Gram and constraint system
// well scaled even on slivers and at high degree. Coefficients returned by
// shape_coeffs()/raw_div_map() and values from eval_raw() are all over that
// orthonormalized frame.
class TriangleDivBasis {
 public:
  struct EdgeSpec {
    Vec2 a, b;    // canonical parametrization a -> b
    Vec2 normal;  // fixed unit normal the DoFs are taken against
  };

  TriangleDivBasis(const TriangleFrame& frame, int r, const std::array<EdgeSpec, 3>& edges,
                   int quad_exactness);

  int r() const { return r_; }
  int dim() const { return r_ == 0 ? 3 : (r_ + 1) * (r_ + 2); }
  int n_edge_dofs() const { return 3 * (r_ + 1); }
  int n_div_dofs() const { return r_ >= 1 ? poly_dim(r_ - 1) - 1 : 0; }
  int n_rot_dofs() const { return poly_dim(r_ - 2); }
  int n_int_dofs() const { return n_div_dofs() + n_rot_dofs(); }

  const TriangleFrame& frame() const { return frame_; }
  const Eigen::MatrixXd& dof_matrix() const { return dof_matrix_; }
  // columns: raw-basis coefficients of the shape functions (dual to the DoFs)
  const Eigen::MatrixXd& shape_coeffs() const { return shape_coeffs_; }

  // raw-basis component values at points: each npts x dim
  void eval_raw(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts, Eigen::MatrixXd& X,
                Eigen::MatrixXd& Y) const;
  // divergence of the raw basis as xi-monomial coefficients: dim P_{max(r-1,0)} x dim
  Eigen::MatrixXd raw_div_map() const;
  // DoF functional values of a field given over the plain component-monomial
  // frame (x-block then y-block of tri_monomials coefficients; r >= 1 only)
  Eigen::VectorXd dofs_of_monomial(const Eigen::VectorXd& cmono) const;

 private:
  void eval_monomial(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                     Eigen::MatrixXd& X, Eigen::MatrixXd& Y) const;

  TriangleFrame frame_;
  int r_;
  Vec2 x_T;
  double h_T;
  Eigen::MatrixXd ortho_;  // monomial frame -> orthonormalized frame
  Eigen::MatrixXd dof_matrix_, shape_coeffs_;
};

// H(div)-conforming piecewise polynomial space over a sub-triangulation:
// normal components are glued through shared edge DoFs taken against the
// fixed sub-edge normals. DoF layout: per sub-edge blocks of (r+1) normal
// moments, then per-triangle interior blocks.
struct PiecewiseDivSpace {
  int r = 0;
  const SubTriangulation* st = nullptr;
  std::vector<TriangleFrame> frames;
  std::vector<TriangleDivBasis> elems;
  std::vector<std::array<int, 3>> tri_subedge;  // sub-edge index per local edge
  std::vector<std::vector<int>> gather;          // per triangle: global DoF ids
  int n_dofs = 0;
  int n_edge_dofs = 0;  // = (r+1) * #subedges
  Eigen::MatrixXd gram;  // (Phi_i, Phi_j)_K of the glued shape basis

  int edge_block(int subedge) const { return (r + 1) * subedge; }
  int tri_block(int t) const;
  int n_int_per_tri() const { return elems.empty() ? 0 : elems[0].n_int_dofs(); }

  // field values at points inside triangle t for global coefficients c
  void eval_tri(int t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                const Eigen::VectorXd& c, Eigen::VectorXd& vx, Eigen::VectorXd& vy) const;
  // divergence on triangle t as xi-monomial coefficients of degree max(r-1,0)
  Eigen::VectorXd div_tri(int t, const Eigen::VectorXd& c) const;
  // matrix versions (columns = global DoFs)
  Eigen::MatrixXd div_tri_map(int t) const;
};

PiecewiseDivSpace build_piecewise_div_space(const SubTriangulation& st, int r,
                                            int quad_exactness);

// Continuous piecewise P_m space on the sub-triangulation.
struct LagrangeMacroSpace {
  int degree = 1;
  const SubTriangulation* st = nullptr;
  std::vector<TriangleFrame> frames;
  std::vector<Vec2> nodes;
  std::vector<bool> node_on_boundary;           // on the polygon boundary
  std::vector<std::vector<int>> tri_nodes;      // per triangle, lattice order
  std::vector<Eigen::MatrixXd> nodal_coeffs;    // xi-monomial coeffs of nodal basis

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_interior() const;
  std::vector<int> interior_nodes() const;
};

LagrangeMacroSpace build_lagrange_macro(const SubTriangulation& st, int m);

// Rotated gradient (curl q = (dq/dy, -dq/dx)) of a member given by nodal
// values, expressed as a DoF vector of the piecewise div space of degree m-1.
Eigen::VectorXd curl_as_parent_dofs(const LagrangeMacroSpace& lag, const PiecewiseDivSpace& pw,
                                    const Eigen::VectorXd& nodal, int quad_exactness);

}  // namespace vemsf
