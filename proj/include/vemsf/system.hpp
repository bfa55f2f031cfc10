#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "vemsf/vem.hpp"

namespace vemsf {

// Global numbering: [vertices (C only)] [edge blocks] [cell interior blocks].
// Edge moment DoFs use the edge's canonical (lower -> higher vertex index)
// orientation, so the two incident cells address identical functionals.
struct GlobalDofMap {
  Family family = Family::NC;
  int k = 1;
  int n_vertices = 0;
  int n_edges = 0;
  int n_cells = 0;
  int edge_block_size = 0;
  int cell_block_size = 0;
  int n_dofs = 0;
  std::vector<char> on_boundary;  // per global DoF

  int vertex_dof(int v) const { return v; }
  int edge_dof(int e, int i) const {
    return (family == Family::C ? n_vertices : 0) + e * edge_block_size + i;
  }
  int interior_dof(int c, int i) const {
    return (family == Family::C ? n_vertices : 0) + n_edges * edge_block_size +
           c * cell_block_size + i;
  }

  // global indices in the element's local DoF order
  std::vector<int> cell_dofs(const PolygonalMesh& mesh, int cell) const;
};

GlobalDofMap make_dof_map(const PolygonalMesh& mesh, Family family, int k);

struct AssemblyOptions {
  BasisKind kind = BasisKind::ScaledMonomial;
  SubTriStrategy strategy = SubTriStrategy::InballFan;
  int quad_exactness = -1;  // < 0: 2k + 4
  int threads = 1;
  bool reduced_macro = false;  // C family: divergence capped two degrees down (k >= 2)
  // Dirichlet datum; empty means homogeneous
  std::function<double(const Vec2&)> dirichlet;
};

int effective_exactness(int k, const AssemblyOptions& opts);
MacroMode macro_mode_for(Family family, const AssemblyOptions& opts);

struct SparseSystem {
  GlobalDofMap map;
  Eigen::SparseMatrix<double> A;  // full symmetric matrix over all DoFs
  Eigen::VectorXd b;
  Eigen::VectorXd dirichlet_values;  // nonzero only on boundary DoFs
};

SparseSystem assemble_global(const PolygonalMesh& mesh, Family family, int k,
                             MethodKind method, double alpha,
                             const std::function<double(const Vec2&)>& f,
                             const AssemblyOptions& opts = {});

enum class SolverKind { Auto, DenseLDLT, SparseLDLT, ConjugateGradient };

struct SolveInfo {
  Eigen::VectorXd x;  // all DoFs, boundary entries carry the Dirichlet values
  int iterations = 0;
  double residual = 0.0;
  SolverKind used = SolverKind::Auto;
};

// Symmetric elimination of the Dirichlet DoFs, then Auto: dense LDLT up to
// 2000 unknowns, sparse LDLT beyond; ConjugateGradient: Jacobi, relative
// residual 1e-12, iteration cap 20n. Throws on breakdown or non-convergence.
SolveInfo solve_system(const SparseSystem& sys, SolverKind kind = SolverKind::Auto);

struct ErrorNorms {
  double l2 = 0.0;
  double grad = 0.0;
};

ErrorNorms compute_errors(const PolygonalMesh& mesh, Family family, int k,
                          const Eigen::VectorXd& solution,
                          const std::function<double(const Vec2&)>& u_exact,
                          const std::function<Vec2(const Vec2&)>& grad_exact,
                          const AssemblyOptions& opts = {});

// DoF functional values of an explicit function across the whole mesh
Eigen::VectorXd interpolate_global(const PolygonalMesh& mesh, Family family, int k,
                                   const std::function<double(const Vec2&)>& u,
                                   const AssemblyOptions& opts = {});

struct SpectrumStats {
  double lam_max = 0.0;
  double lam_min_nz = 0.0;
  double lam_min = 0.0;  // most negative eigenvalue (PSD check)
  int n_zero = 0;
  double cond = 0.0;
};

// Dense symmetric eigendecomposition; zero set = {lam <= threshold * lam_max}.
// Throws if every eigenvalue is in the zero set (condition number undefined).
SpectrumStats spectrum_stats(const Eigen::MatrixXd& A, double zero_threshold = 1e-8);

}  // namespace vemsf
