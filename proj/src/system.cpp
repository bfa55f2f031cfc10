#include "vemsf/system.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

#include "vemsf/parallel.hpp"

namespace vemsf {

std::vector<int> GlobalDofMap::cell_dofs(const PolygonalMesh& mesh, int cell) const {
  std::vector<int> g;
  const auto& loop = mesh.cells[cell];
  const auto& ce = mesh.cell_edges[cell];
  if (family == Family::C)
    for (int v : loop) g.push_back(vertex_dof(v));
  for (int e : ce)
    for (int i = 0; i < edge_block_size; ++i) g.push_back(edge_dof(e, i));
  for (int i = 0; i < cell_block_size; ++i) g.push_back(interior_dof(cell, i));
  return g;
}

GlobalDofMap make_dof_map(const PolygonalMesh& mesh, Family family, int k) {
  if (k < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  GlobalDofMap map;
  map.family = family;
  map.k = k;
  map.n_vertices = mesh.n_vertices();
  map.n_edges = mesh.n_edges();
  map.n_cells = mesh.n_cells();
  map.edge_block_size = family == Family::NC ? k : k - 1;
  map.cell_block_size = poly_dim(k - 2);
  map.n_dofs = (family == Family::C ? map.n_vertices : 0) +
               map.n_edges * map.edge_block_size + map.n_cells * map.cell_block_size;
  map.on_boundary.assign(map.n_dofs, 0);
  if (family == Family::C)
    for (int v = 0; v < map.n_vertices; ++v)
      if (mesh.vertex_on_boundary[v]) map.on_boundary[map.vertex_dof(v)] = 1;
  for (int e = 0; e < map.n_edges; ++e)
    if (mesh.edges[e].boundary())
      for (int i = 0; i < map.edge_block_size; ++i) map.on_boundary[map.edge_dof(e, i)] = 1;
  return map;
}

int effective_exactness(int k, const AssemblyOptions& opts) {
  return opts.quad_exactness > 0 ? opts.quad_exactness : 2 * k + 4;
}

MacroMode macro_mode_for(Family family, const AssemblyOptions& opts) {
  if (family == Family::NC) return MacroMode::NC;
  return opts.reduced_macro ? MacroMode::CReduced : MacroMode::C;
}

SparseSystem assemble_global(const PolygonalMesh& mesh, Family family, int k,
                             MethodKind method, double alpha,
                             const std::function<double(const Vec2&)>& f,
                             const AssemblyOptions& opts) {
  SparseSystem sys;
  sys.map = make_dof_map(mesh, family, k);
  const int qe = effective_exactness(k, opts);
  const MacroMode mode = macro_mode_for(family, opts);
  const int nc = mesh.n_cells();

  std::vector<LocalMatrices> local(nc);
  std::vector<std::vector<int>> gather(nc);
  parallel_for(nc, opts.threads, [&](int c) {
    const ElementContext ctx = make_context(mesh, c, opts.strategy);
    const ElementOperators ops(ctx, family, k, mode, opts.kind, qe);
    local[c] = method == MethodKind::SF ? local_matrices_sf(ops, alpha, f)
                                        : local_matrices_standard(ops, alpha, f);
    gather[c] = sys.map.cell_dofs(mesh, c);
  });

  std::vector<Eigen::Triplet<double>> trips;
  sys.b = Eigen::VectorXd::Zero(sys.map.n_dofs);
  for (int c = 0; c < nc; ++c) {
    const auto& g = gather[c];
    const auto& A = local[c].A;
    for (size_t i = 0; i < g.size(); ++i) {
      sys.b[g[i]] += local[c].load[i];
      for (size_t j = 0; j < g.size(); ++j) trips.emplace_back(g[i], g[j], A(i, j));
    }
  }
  sys.A.resize(sys.map.n_dofs, sys.map.n_dofs);
  sys.A.setFromTriplets(trips.begin(), trips.end());

  sys.dirichlet_values = Eigen::VectorXd::Zero(sys.map.n_dofs);
  if (opts.dirichlet) {
    if (family == Family::C)
      for (int v = 0; v < mesh.n_vertices(); ++v)
        if (mesh.vertex_on_boundary[v])
          sys.dirichlet_values[sys.map.vertex_dof(v)] = opts.dirichlet(mesh.vertices[v]);
    const int eb = sys.map.edge_block_size;
    for (int e = 0; e < mesh.n_edges() && eb > 0; ++e) {
      if (!mesh.edges[e].boundary()) continue;
      EdgeBasis basis(mesh.vertices[mesh.edges[e].v0], mesh.vertices[mesh.edges[e].v1], eb - 1);
      const Eigen::VectorXd mom = edge_moments(opts.dirichlet, basis, std::max(qe, 2 * k + 2));
      for (int i = 0; i < eb; ++i) sys.dirichlet_values[sys.map.edge_dof(e, i)] = mom[i];
    }
  }
  return sys;
}

SolveInfo solve_system(const SparseSystem& sys, SolverKind kind) {
  const int n = sys.map.n_dofs;
  std::vector<int> to_reduced(n, -1);
  std::vector<int> interior;
  for (int i = 0; i < n; ++i)
    if (!sys.map.on_boundary[i]) {
      to_reduced[i] = static_cast<int>(interior.size());
      interior.push_back(i);
    }
  const int nr = static_cast<int>(interior.size());

  const Eigen::VectorXd shifted = sys.b - sys.A * sys.dirichlet_values;
  Eigen::VectorXd rhs(nr);
  for (int i = 0; i < nr; ++i) rhs[i] = shifted[interior[i]];

  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < sys.A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, col); it; ++it)
      if (to_reduced[it.row()] >= 0 && to_reduced[it.col()] >= 0)
        trips.emplace_back(to_reduced[it.row()], to_reduced[it.col()], it.value());
  Eigen::SparseMatrix<double> Ar(nr, nr);
  Ar.setFromTriplets(trips.begin(), trips.end());

  SolveInfo info;
  info.used = kind;
  Eigen::VectorXd xr;
  if (kind == SolverKind::Auto) info.used = nr <= 2000 ? SolverKind::DenseLDLT : SolverKind::SparseLDLT;
  switch (info.used) {
    case SolverKind::DenseLDLT: {
      const Eigen::MatrixXd Ad(Ar);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Ad);
      if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("dense factorization failed on the reduced system");
      xr = ldlt.solve(rhs);
      break;
    }
    case SolverKind::SparseLDLT: {
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Ar);
      if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("sparse factorization failed on the reduced system");
      xr = ldlt.solve(rhs);
      break;
    }
    case SolverKind::ConjugateGradient: {
      Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                               Eigen::DiagonalPreconditioner<double>>
          cg(Ar);
      cg.setTolerance(1e-12);
      cg.setMaxIterations(20 * std::max(nr, 1));
      xr = cg.solve(rhs);
      info.iterations = static_cast<int>(cg.iterations());
      if (cg.info() != Eigen::Success)
        throw std::runtime_error("conjugate gradient stalled at relative residual " +
                                 std::to_string(cg.error()));
      break;
    }
    default:
      throw std::logic_error("unresolved solver kind");
  }
  const double rnorm = rhs.norm();
  info.residual = rnorm > 0 ? (Ar * xr - rhs).norm() / rnorm : (Ar * xr - rhs).norm();
  if (!xr.allFinite()) throw std::runtime_error("solver produced non-finite values");

  info.x = sys.dirichlet_values;
  for (int i = 0; i < nr; ++i) info.x[interior[i]] = xr[i];
  return info;
}

ErrorNorms compute_errors(const PolygonalMesh& mesh, Family family, int k,
                          const Eigen::VectorXd& solution,
                          const std::function<double(const Vec2&)>& u_exact,
                          const std::function<Vec2(const Vec2&)>& grad_exact,
                          const AssemblyOptions& opts) {
  const GlobalDofMap map = make_dof_map(mesh, family, k);
  const int qe = std::max(effective_exactness(k, opts), 2 * k + 4);
  const MacroMode mode = macro_mode_for(family, opts);
  const int nc = mesh.n_cells();
  std::vector<double> l2(nc, 0.0), gr(nc, 0.0);
  parallel_for(nc, opts.threads, [&](int c) {
    const ElementContext ctx = make_context(mesh, c, opts.strategy);
    const ElementOperators ops(ctx, family, k, mode, opts.kind, qe);
    const std::vector<int> g = map.cell_dofs(mesh, c);
    Eigen::VectorXd local(g.size());
    for (size_t i = 0; i < g.size(); ++i) local[i] = solution[g[i]];
    const Eigen::VectorXd qc = ops.Q() * local;
    const Eigen::VectorXd gc = ops.project_virtual_gradient(local);
    for (int t = 0; t < ctx.st.n_tris(); ++t) {
      auto p = ctx.st.tri_points(t);
      const QuadratureRule rule = triangle_rule(p[0], p[1], p[2], qe);
      const Eigen::VectorXd uh = ops.basis().eval(rule.points) * qc;
      Eigen::VectorXd vx, vy;
      ops.macro().eval_tri(t, rule.points, gc, vx, vy);
      for (int i = 0; i < rule.size(); ++i) {
        const Vec2 x = rule.points.row(i).transpose();
        const double du = u_exact(x) - uh[i];
        const Vec2 dg = grad_exact(x) - Vec2(vx[i], vy[i]);
        l2[c] += rule.weights[i] * du * du;
        gr[c] += rule.weights[i] * dg.squaredNorm();
      }
    }
  });
  ErrorNorms err;
  for (int c = 0; c < nc; ++c) {
    err.l2 += l2[c];
    err.grad += gr[c];
  }
  err.l2 = std::sqrt(err.l2);
  err.grad = std::sqrt(err.grad);
  return err;
}

Eigen::VectorXd interpolate_global(const PolygonalMesh& mesh, Family family, int k,
                                   const std::function<double(const Vec2&)>& u,
                                   const AssemblyOptions& opts) {
  const GlobalDofMap map = make_dof_map(mesh, family, k);
  const int qe = effective_exactness(k, opts);
  const MacroMode mode = macro_mode_for(family, opts);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(map.n_dofs);
  const int nc = mesh.n_cells();
  std::vector<Eigen::VectorXd> local(nc);
  std::vector<std::vector<int>> gather(nc);
  parallel_for(nc, opts.threads, [&](int c) {
    const ElementContext ctx = make_context(mesh, c, opts.strategy);
    const ElementOperators ops(ctx, family, k, mode, opts.kind, qe);
    local[c] = ops.interpolate(u);
    gather[c] = map.cell_dofs(mesh, c);
  });
  for (int c = 0; c < nc; ++c)
    for (size_t i = 0; i < gather[c].size(); ++i) x[gather[c][i]] = local[c][i];
  return x;
}

SpectrumStats spectrum_stats(const Eigen::MatrixXd& A, double zero_threshold) {
  if (A.rows() == 0) throw std::invalid_argument("empty matrix has no spectrum");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  SpectrumStats st;
  st.lam_max = ev[ev.size() - 1];
  st.lam_min = ev[0];
  const double cut = zero_threshold * std::max(st.lam_max, 0.0);
  st.n_zero = 0;
  st.lam_min_nz = 0.0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] <= cut)
      ++st.n_zero;
    else if (st.lam_min_nz == 0.0)
      st.lam_min_nz = ev[i];
  if (st.n_zero == ev.size())
    throw std::runtime_error("all eigenvalues fall in the declared zero set");
  st.cond = st.lam_max / st.lam_min_nz;
  return st;
}

}  // namespace vemsf
