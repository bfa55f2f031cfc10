#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "vemsf/femspaces.hpp"
#include "vemsf/poly.hpp"

namespace vemsf {

// Macro element flavors:
//   NC       : parent degree r = max(k-1,0) (lowest-order space at k=1),
//              divergence capped at P_{max(k-2,0)}(K), edge traces P_{k-1}(F)
//   C        : parent degree k, divergence in P_{k-1}(K), traces P_k(F)
//   CReduced : parent degree k, divergence capped at P_{k-2}(K), traces P_k(F)
enum class MacroMode { NC, C, CReduced };

int macro_parent_degree(int k, MacroMode mode);
int macro_div_degree(int k, MacroMode mode);
int macro_ring_degree(int k, MacroMode mode);

// Subspace of the piecewise div space with single-polynomial divergence over
// the whole cell and single-polynomial normal traces per polygon edge,
// represented by a nullspace basis of the constraint system (orthonormalized
// in L2(K)).
struct MacroDivSpace {
  MacroMode mode = MacroMode::NC;
  int k = 1;
  PiecewiseDivSpace parent;
  const SubTriangulation* st = nullptr;

  Eigen::MatrixXd basis;  // parent-DoF coefficients, one column per member
  Eigen::MatrixXd gram;   // (Phi_i, Phi_j)_K; identity after orthonormalization

  // cell-basis coefficients (degree div_degree) of div Phi_i, one column each
  Eigen::MatrixXd div_rep;
  // per polygon edge: Legendre coefficients (loop orientation, outward normal)
  // of the normal trace, (parent_degree+1) x dim
  std::vector<Eigen::MatrixXd> trace_rep;

  // diagnostics
  double min_gram_eig = 0.0;  // relative Gram floor before orthonormalization
  double svd_gap = 0.0;             // smallest kept / largest dropped singular value
  double div_fit_residual = 0.0;    // relative, should be ~0
  double trace_fit_residual = 0.0;  // relative, should be ~0

  int dim() const { return static_cast<int>(basis.cols()); }
  int parent_degree() const { return parent.r; }

  void eval_tri(int t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                const Eigen::VectorXd& coeffs, Eigen::VectorXd& vx, Eigen::VectorXd& vy) const;
};

// Throws std::runtime_error if the constraint-rank decision is ambiguous
// (singular values within a factor 10 of the cutoff on both sides).
MacroDivSpace build_macro_div_space(const std::vector<Vec2>& polygon,
                                    const SubTriangulation& st, const CellBasis& cell, int k,
                                    MacroMode mode, int quad_exactness,
                                    double svd_cutoff = 1e-10);

// Combinatorial dimension ledger: per-edge trace blocks + mean-free divergence
// moments + interior Lagrange nodes of the ring degree.
int macro_dof_count(const SubTriangulation& st, int k, MacroMode mode);

// L2(K)-orthogonal projection of an explicit vector field onto the space;
// returns coefficients over the macro basis.
Eigen::VectorXd project_field(const MacroDivSpace& space,
                              const std::function<Vec2(const Vec2&)>& g, int quad_exactness);

// squared L2(K) norm of a member
double macro_norm2(const MacroDivSpace& space, const Eigen::VectorXd& coeffs);

}  // namespace vemsf
