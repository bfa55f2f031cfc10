#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "vemsf/vem.hpp"

namespace testsupport {

// Reference reconstruction of the implicit shape functions from their degrees
// of freedom, independent of every projector under test. A member is the
// solution of the local problem "Laplacian is a degree-k polynomial, boundary
// behavior is polynomial edge data, moment constraints tie the function to its
// own degree-k projection"; the oracle discretizes that problem with
// continuous Lagrange elements of degree k+2 on the element sub-triangulation
// refined `refine` times and solves one square linear system. Functionals that
// reduce to the constrained data (DoF moments, pairings with piecewise
// polynomial fields, projection identities) are reproduced to solver
// precision; only genuinely non-polynomial quantities carry discretization
// error.
class VirtualOracle {
 public:
  VirtualOracle(const vemsf::ElementOperators& ops, int refine);

  // fine nodal values of the member with the given local DoF vector
  Eigen::VectorXd solve_nodal(const Eigen::VectorXd& dofs) const;

  double grad_norm2(const Eigen::VectorXd& nodal) const;
  double l2_norm2(const Eigen::VectorXd& nodal) const;
  // (grad v, Phi_j)_K against the macro basis of the operators
  Eigen::VectorXd pair_grad_macro(const Eigen::VectorXd& nodal) const;
  // (grad v, grad mu_b)_K for b < dim P_k
  Eigen::VectorXd pair_grad_poly(const Eigen::VectorXd& nodal) const;
  // (v, mu_b)_K for b < dim P_k
  Eigen::VectorXd cell_moments(const Eigen::VectorXd& nodal) const;

  int n_nodes() const { return fem_.n_nodes(); }
  const vemsf::Vec2& node(int i) const { return fem_.nodes[i]; }

 private:
  void build_geometry(int refine);
  void build_couplings();
  void assemble_nc();
  void assemble_c();

  const vemsf::ElementOperators* ops_;
  std::unique_ptr<vemsf::SubTriangulation> fine_;
  vemsf::LagrangeMacroSpace fem_;
  int exactness_ = 0;

  std::vector<vemsf::QuadratureRule> rules_;     // one per fine triangle
  std::vector<Eigen::MatrixXd> vals_, gx_, gy_;  // nodal basis data at rules_
  std::vector<int> coarse_of_;                   // enclosing coarse triangle

  Eigen::MatrixXd stiff_;  // (grad w_i, grad w_j)_K
  Eigen::MatrixXd momz_;   // (w_i, mu_b)_K
  Eigen::MatrixXd gradz_;  // (grad w_i, grad mu_b)_K
  Eigen::VectorXd bdint_;  // integral of w_i over the cell boundary
  Eigen::MatrixXd edgemom_;  // (1/|F|)(w_i, phi_j^F)_F rows, canonical bases
  Eigen::MatrixXd enh_;      // enhancement rows over nodal values

  Eigen::MatrixXd sys_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd rhs_of_dofs_;    // local DoFs -> system right-hand side
  Eigen::MatrixXd bvals_of_dofs_;  // C: boundary nodal values from DoFs
  std::vector<int> unknown_of_node_;  // C: unknown index, -1 on the boundary
  int n_unknown_ = 0;
};

}  // namespace testsupport
