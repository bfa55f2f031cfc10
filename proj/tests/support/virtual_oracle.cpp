#include "support/virtual_oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "vemsf/femspaces.hpp"
#include "vemsf/macrodiv.hpp"
#include "vemsf/quadrature.hpp"

namespace testsupport {

using vemsf::CellBasis;
using vemsf::EdgeBasis;
using vemsf::ElementContext;
using vemsf::Family;
using vemsf::QuadratureRule;
using vemsf::SubTriangulation;
using vemsf::TriangleFrame;
using vemsf::Vec2;

namespace {

std::pair<Vec2, Vec2> canonical_endpoints(const ElementContext& ctx, int e) {
  const int m = static_cast<int>(ctx.polygon.size());
  const Vec2& pa = ctx.polygon[e];
  const Vec2& pb = ctx.polygon[(e + 1) % m];
  return ctx.edge_sign[e] > 0 ? std::make_pair(pa, pb) : std::make_pair(pb, pa);
}

double dist_to_segment(const Vec2& a, const Vec2& b, const Vec2& q) {
  const Vec2 d = b - a;
  const double t = std::clamp((q - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (q - (a + t * d)).norm();
}

}  // namespace

VirtualOracle::VirtualOracle(const vemsf::ElementOperators& ops, int refine) : ops_(&ops) {
  build_geometry(refine);
  build_couplings();
  if (ops.layout().family == Family::NC)
    assemble_nc();
  else
    assemble_c();
  lu_.compute(sys_);
}

void VirtualOracle::build_geometry(int refine) {
  const ElementContext& ctx = ops_->ctx();
  const int k = ops_->layout().k;
  const int deg = k + 2;
  exactness_ = 2 * deg + 2;

  fine_ = std::make_unique<SubTriangulation>(ctx.st);
  for (int i = 0; i < refine; ++i)
    *fine_ = vemsf::refine_subtriangulation(*fine_);
  fem_ = vemsf::build_lagrange_macro(*fine_, deg);

  const int nt = fine_->n_tris();
  rules_.resize(nt);
  vals_.resize(nt);
  gx_.resize(nt);
  gy_.resize(nt);
  coarse_of_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto p = fine_->tri_points(t);
    rules_[t] = vemsf::triangle_rule(p[0], p[1], p[2], exactness_);
    const TriangleFrame& fr = fem_.frames[t];
    const Eigen::MatrixXd& nc = fem_.nodal_coeffs[t];
    vals_[t] = vemsf::tri_monomials(fr, deg, rules_[t].points) * nc;
    const Eigen::MatrixXd lower = vemsf::tri_monomials(fr, deg - 1, rules_[t].points);
    gx_[t] = lower * (vemsf::tri_dx_map(fr, deg) * nc);
    gy_[t] = lower * (vemsf::tri_dy_map(fr, deg) * nc);

    // locate the coarse triangle containing this one
    const Vec2 c = (p[0] + p[1] + p[2]) / 3.0;
    coarse_of_[t] = -1;
    for (int ct = 0; ct < ctx.st.n_tris() && coarse_of_[t] < 0; ++ct) {
      const auto q = ctx.st.tri_points(ct);
      const double a = vemsf::triangle_area(q[0], q[1], q[2]);
      if (vemsf::cross2(q[0], q[1], c) >= -1e-12 * a &&
          vemsf::cross2(q[1], q[2], c) >= -1e-12 * a &&
          vemsf::cross2(q[2], q[0], c) >= -1e-12 * a)
        coarse_of_[t] = ct;
    }
    if (coarse_of_[t] < 0)
      throw std::runtime_error("fine triangle not contained in a coarse one");
  }
}

void VirtualOracle::build_couplings() {
  const ElementContext& ctx = ops_->ctx();
  const CellBasis& cb = ops_->basis();
  const int k = ops_->layout().k;
  const int nk = vemsf::poly_dim(k);
  const int n = fem_.n_nodes();
  const int m = static_cast<int>(ctx.polygon.size());
  const int nmom = ops_->layout().edge_block_size;

  stiff_.setZero(n, n);
  momz_.setZero(n, nk);
  gradz_.setZero(n, nk);
  bdint_.setZero(n);
  edgemom_.setZero(m * std::max(nmom, 1), n);

  for (int t = 0; t < fine_->n_tris(); ++t) {
    const QuadratureRule& q = rules_[t];
    const Eigen::VectorXd& w = q.weights;
    const std::vector<int>& nodes = fem_.tri_nodes[t];
    const Eigen::MatrixXd loc =
        gx_[t].transpose() * w.asDiagonal() * gx_[t] + gy_[t].transpose() * w.asDiagonal() * gy_[t];
    const Eigen::MatrixXd mu = cb.eval(q.points);
    const Eigen::MatrixXd mloc = vals_[t].transpose() * w.asDiagonal() * mu;
    const Eigen::MatrixXd gloc = gx_[t].transpose() * w.asDiagonal() * cb.eval_dx(q.points) +
                                 gy_[t].transpose() * w.asDiagonal() * cb.eval_dy(q.points);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      momz_.row(nodes[i]) += mloc.row(i);
      gradz_.row(nodes[i]) += gloc.row(i);
      for (std::size_t j = 0; j < nodes.size(); ++j) stiff_(nodes[i], nodes[j]) += loc(i, j);
    }
  }

  // boundary couplings: per fine boundary sub-edge of polygon edge `parent`
  std::vector<EdgeBasis> canonical;
  canonical.reserve(m);
  for (int e = 0; e < m; ++e) {
    auto [ca, cbp] = canonical_endpoints(ctx, e);
    canonical.emplace_back(ca, cbp, std::max(nmom - 1, 0));
  }
  for (const SubTriangulation::SubEdge& se : fine_->edges) {
    if (!se.boundary()) continue;
    const int e = se.parent;
    const QuadratureRule q =
        vemsf::segment_rule(fine_->points[se.a], fine_->points[se.b], exactness_);
    const int t = se.t0;
    const TriangleFrame& fr = fem_.frames[t];
    const Eigen::MatrixXd wv =
        vemsf::tri_monomials(fr, k + 2, q.points) * fem_.nodal_coeffs[t];
    const std::vector<int>& nodes = fem_.tri_nodes[t];
    const Eigen::VectorXd winteg = wv.transpose() * q.weights;
    for (std::size_t i = 0; i < nodes.size(); ++i) bdint_(nodes[i]) += winteg(i);
    if (nmom > 0) {
      const Eigen::MatrixXd phi = canonical[e].eval(q.points);  // npts x nmom
      const Eigen::MatrixXd block =
          phi.transpose() * q.weights.asDiagonal() * wv / canonical[e].length();
      for (int j = 0; j < nmom; ++j)
        for (std::size_t i = 0; i < nodes.size(); ++i)
          edgemom_(e * nmom + j, nodes[i]) += block(j, i);
    }
  }

  // enhancement rows: (v - Pi v, q)_K = 0 for q spanning the L2-orthogonal
  // complement of P_{k-2} within P_k
  const int nlow = vemsf::poly_dim(k - 2);
  Eigen::MatrixXd Gt = cb.stiffness();
  Gt.row(0) = cb.boundary_integrals().transpose();
  Eigen::MatrixXd P(nk, n);
  P = gradz_.transpose();
  P.row(0) = bdint_.transpose();
  const Eigen::MatrixXd ritz = Gt.fullPivLu().solve(P);  // Pi coefficients from nodal values
  const Eigen::MatrixXd tail = cb.ortho().rightCols(nk - nlow);
  enh_ = tail.transpose() * (momz_.transpose() - cb.mass() * ritz);
}

void VirtualOracle::assemble_nc() {
  const ElementContext& ctx = ops_->ctx();
  const int k = ops_->layout().k;
  const int nk = vemsf::poly_dim(k);
  const int nlow = vemsf::poly_dim(k - 2);
  const int n = fem_.n_nodes();
  const int m = static_cast<int>(ctx.polygon.size());
  const int ndof = ops_->layout().n_dofs;
  const CellBasis& cb = ops_->basis();
  const double area = cb.measure();

  // unknowns: [nodal values; edge normal-derivative coefficients; Laplacian]
  const int N = n + m * k + nk;
  sys_.setZero(N, N);
  rhs_of_dofs_.setZero(N, ndof);

  // weak rows: (grad v, grad w) - sum_F (g_F, w)_F + (p, w)_K = 0
  sys_.topLeftCorner(n, n) = stiff_;
  sys_.block(0, n + m * k, n, nk) = momz_;
  for (int e = 0; e < m; ++e)
    for (int j = 0; j < k; ++j) {
      auto [ca, cbp] = canonical_endpoints(ctx, e);
      const double len = (cbp - ca).norm();
      // (phi_j^F, w)_F = |F| * edgemom row
      sys_.block(0, n + e * k + j, n, 1) = -len * edgemom_.row(e * k + j).transpose();
    }

  // DoF rows: edge moments then interior moments
  int row = n;
  for (int e = 0; e < m; ++e)
    for (int j = 0; j < k; ++j, ++row) {
      sys_.block(row, 0, 1, n) = edgemom_.row(e * k + j);
      rhs_of_dofs_(row, ops_->layout().edge_dof(e, j)) = 1.0;
    }
  if (nlow > 0) {
    Eigen::MatrixXd chi;  // interior DoFs from nodal values
    if (cb.kind() == vemsf::BasisKind::Orthonormal)
      chi = cb.ortho().leftCols(nlow).transpose() * momz_.transpose() / area;
    else
      chi = momz_.leftCols(nlow).transpose() / area;
    for (int i = 0; i < nlow; ++i, ++row) {
      sys_.block(row, 0, 1, n) = chi.row(i);
      rhs_of_dofs_(row, ops_->layout().interior_dof(i)) = 1.0;
    }
  }

  // enhancement rows close the system
  sys_.block(row, 0, nk - nlow, n) = enh_;
}

void VirtualOracle::assemble_c() {
  const ElementContext& ctx = ops_->ctx();
  const int k = ops_->layout().k;
  const int nk = vemsf::poly_dim(k);
  const int nlow = vemsf::poly_dim(k - 2);
  const int n = fem_.n_nodes();
  const int m = static_cast<int>(ctx.polygon.size());
  const int ndof = ops_->layout().n_dofs;
  const CellBasis& cb = ops_->basis();
  const double area = cb.measure();

  // boundary nodal values from the per-edge polynomial traces
  bvals_of_dofs_.setZero(n, ndof);
  unknown_of_node_.assign(n, -1);
  n_unknown_ = 0;
  for (int i = 0; i < n; ++i) {
    if (!fem_.node_on_boundary[i]) {
      unknown_of_node_[i] = n_unknown_++;
      continue;
    }
    const Vec2& x = fem_.nodes[i];
    int best = 0;
    double bestd = std::numeric_limits<double>::max();
    for (int e = 0; e < m; ++e) {
      const double d = dist_to_segment(ctx.polygon[e], ctx.polygon[(e + 1) % m], x);
      if (d < bestd) {
        bestd = d;
        best = e;
      }
    }
    const EdgeBasis loop(ctx.polygon[best], ctx.polygon[(best + 1) % m], k);
    Eigen::VectorXd s(1);
    s(0) = loop.s_of(x);
    const Eigen::MatrixXd phi = loop.eval_s(s);  // 1 x (k+1)
    bvals_of_dofs_.row(i) = phi.row(0) * ops_->trace_rows(best);
  }

  // unknowns: [interior nodal values; Laplacian]
  const int N = n_unknown_ + nk;
  sys_.setZero(N, N);
  rhs_of_dofs_.setZero(N, ndof);

  auto scatter_rows = [&](int row0, const Eigen::MatrixXd& rows_over_nodes,
                          int nrows) {
    // split full-node rows into unknown columns and a DoF-dependent rhs shift
    for (int i = 0; i < n; ++i) {
      const int u = unknown_of_node_[i];
      if (u >= 0)
        sys_.block(row0, u, nrows, 1) = rows_over_nodes.col(i);
      else
        rhs_of_dofs_.middleRows(row0, nrows) -= rows_over_nodes.col(i) * bvals_of_dofs_.row(i);
    }
  };

  // weak rows for interior test functions: (grad v, grad w) + (p, w)_K = 0
  Eigen::MatrixXd weak(n_unknown_, n);
  Eigen::MatrixXd weakp(n_unknown_, nk);
  for (int i = 0; i < n; ++i)
    if (unknown_of_node_[i] >= 0) {
      weak.row(unknown_of_node_[i]) = stiff_.row(i);
      weakp.row(unknown_of_node_[i]) = momz_.row(i);
    }
  scatter_rows(0, weak, n_unknown_);
  sys_.block(0, n_unknown_, n_unknown_, nk) = weakp;

  int row = n_unknown_;
  if (nlow > 0) {
    Eigen::MatrixXd chi;
    if (cb.kind() == vemsf::BasisKind::Orthonormal)
      chi = cb.ortho().leftCols(nlow).transpose() * momz_.transpose() / area;
    else
      chi = momz_.leftCols(nlow).transpose() / area;
    scatter_rows(row, chi, nlow);
    for (int i = 0; i < nlow; ++i)
      rhs_of_dofs_(row + i, ops_->layout().interior_dof(i)) += 1.0;
    row += nlow;
  }
  scatter_rows(row, enh_, nk - nlow);
}

Eigen::VectorXd VirtualOracle::solve_nodal(const Eigen::VectorXd& dofs) const {
  const Eigen::VectorXd rhs = rhs_of_dofs_ * dofs;
  const Eigen::VectorXd sol = lu_.solve(rhs);
  const double resid = (sys_ * sol - rhs).norm();
  if (!(resid <= 1e-6 * (1.0 + rhs.norm() + sol.norm())))
    throw std::runtime_error("virtual oracle solve did not converge");
  const int n = fem_.n_nodes();
  if (ops_->layout().family == Family::NC) return sol.head(n);
  Eigen::VectorXd nodal(n);
  for (int i = 0; i < n; ++i)
    nodal(i) = unknown_of_node_[i] >= 0 ? sol(unknown_of_node_[i])
                                        : bvals_of_dofs_.row(i).dot(dofs);
  return nodal;
}

double VirtualOracle::grad_norm2(const Eigen::VectorXd& nodal) const {
  return nodal.dot(stiff_ * nodal);
}

double VirtualOracle::l2_norm2(const Eigen::VectorXd& nodal) const {
  double out = 0.0;
  for (int t = 0; t < fine_->n_tris(); ++t) {
    Eigen::VectorXd loc(fem_.tri_nodes[t].size());
    for (std::size_t i = 0; i < fem_.tri_nodes[t].size(); ++i)
      loc(i) = nodal(fem_.tri_nodes[t][i]);
    const Eigen::VectorXd v = vals_[t] * loc;
    out += v.dot(rules_[t].weights.asDiagonal() * v);
  }
  return out;
}

Eigen::VectorXd VirtualOracle::pair_grad_macro(const Eigen::VectorXd& nodal) const {
  const vemsf::MacroDivSpace& macro = ops_->macro();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(macro.dim());
  for (int j = 0; j < macro.dim(); ++j) {
    Eigen::VectorXd ej = Eigen::VectorXd::Zero(macro.dim());
    ej(j) = 1.0;
    for (int t = 0; t < fine_->n_tris(); ++t) {
      Eigen::VectorXd loc(fem_.tri_nodes[t].size());
      for (std::size_t i = 0; i < fem_.tri_nodes[t].size(); ++i)
        loc(i) = nodal(fem_.tri_nodes[t][i]);
      Eigen::VectorXd vx, vy;
      macro.eval_tri(coarse_of_[t], rules_[t].points, ej, vx, vy);
      out(j) += (gx_[t] * loc).dot(rules_[t].weights.asDiagonal() * vx) +
                (gy_[t] * loc).dot(rules_[t].weights.asDiagonal() * vy);
    }
  }
  return out;
}

Eigen::VectorXd VirtualOracle::pair_grad_poly(const Eigen::VectorXd& nodal) const {
  return gradz_.transpose() * nodal;
}

Eigen::VectorXd VirtualOracle::cell_moments(const Eigen::VectorXd& nodal) const {
  return momz_.transpose() * nodal;
}

}  // namespace testsupport
