#include "vemsf/vem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vemsf {

ElementDofLayout make_layout(Family family, int k, int n_edges) {
  if (k < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  ElementDofLayout l;
  l.family = family;
  l.k = k;
  l.n_edges = n_edges;
  l.edge_block_size = family == Family::NC ? k : k - 1;
  l.n_interior = poly_dim(k - 2);
  l.n_dofs = (family == Family::C ? n_edges : 0) + n_edges * l.edge_block_size + l.n_interior;
  return l;
}

ElementContext make_context(const PolygonalMesh& mesh, int cell, SubTriStrategy strategy) {
  ElementContext ctx;
  ctx.polygon = mesh.cell_points(cell);
  ctx.edge_sign.reserve(mesh.cell_edge_signs[cell].size());
  for (int s : mesh.cell_edge_signs[cell]) ctx.edge_sign.push_back(static_cast<double>(s));
  ctx.st = subtriangulate(mesh, cell, strategy);
  ctx.geo = element_geometry(mesh, cell);
  return ctx;
}

ElementContext make_context(const std::vector<Vec2>& polygon, SubTriStrategy strategy) {
  std::vector<int> loop(polygon.size());
  std::iota(loop.begin(), loop.end(), 0);
  const PolygonalMesh mesh = build_mesh(polygon, {loop});
  return make_context(mesh, 0, strategy);
}

namespace {

// canonical-orientation endpoints of loop edge e
std::pair<Vec2, Vec2> canonical_endpoints(const ElementContext& ctx, int e) {
  const int m = static_cast<int>(ctx.polygon.size());
  const Vec2& pa = ctx.polygon[e];
  const Vec2& pb = ctx.polygon[(e + 1) % m];
  return ctx.edge_sign[e] > 0 ? std::make_pair(pa, pb) : std::make_pair(pb, pa);
}

}  // namespace

ElementOperators::ElementOperators(const ElementContext& ctx, Family family, int k,
                                   MacroMode mode, BasisKind kind, int quad_exactness)
    : ctx_(&ctx),
      layout_(make_layout(family, k, static_cast<int>(ctx.polygon.size()))),
      mode_(mode),
      quad_exactness_(quad_exactness),
      basis_(ctx.polygon, ctx.st, k, kind, quad_exactness) {
  if (family == Family::NC && mode != MacroMode::NC)
    throw std::invalid_argument("nonconforming family pairs with the NC macro space");
  if (family == Family::C && mode == MacroMode::NC)
    throw std::invalid_argument("conforming family pairs with the C or CReduced macro space");

  const int m = static_cast<int>(ctx.polygon.size());
  const int nk = poly_dim(k);
  const int nlow = poly_dim(k - 2);
  const int ndof = layout_.n_dofs;
  const double area = basis_.measure();
  const Eigen::MatrixXd& O = basis_.ortho();

  // ---- trace rows: loop-oriented edge Legendre coefficients from DoFs ----
  const int ntr = family == Family::NC ? k : k + 1;  // known coefficients per edge
  V_.assign(m, Eigen::MatrixXd::Zero(ntr, ndof));
  const int nmom = layout_.edge_block_size;  // moment DoFs per edge
  for (int e = 0; e < m; ++e) {
    double sg = 1.0;
    for (int i = 0; i < nmom; ++i) {
      V_[e](i, layout_.edge_dof(e, i)) = sg;
      sg *= ctx.edge_sign[e];
    }
    if (family == Family::C) {
      // endpoint values pin the top two coefficients: phi_j(+-1) = (+-1)^j sqrt(2j+1)
      Eigen::RowVectorXd ra = Eigen::RowVectorXd::Zero(ndof);
      Eigen::RowVectorXd rb = Eigen::RowVectorXd::Zero(ndof);
      ra(layout_.vertex_dof(e)) = 1.0;
      rb(layout_.vertex_dof((e + 1) % m)) = 1.0;
      for (int j = 0; j <= k - 2; ++j) {
        const double sq = std::sqrt(2.0 * j + 1.0);
        ra -= (j % 2 ? -sq : sq) * V_[e].row(j);
        rb -= sq * V_[e].row(j);
      }
      const double sqa = std::sqrt(2.0 * k - 1.0), sqb = std::sqrt(2.0 * k + 1.0);
      const double pa = (k - 1) % 2 ? -sqa : sqa;  // phi_{k-1}(-1)
      const double pb = k % 2 ? -sqb : sqb;        // phi_k(-1)
      const double det = pa * sqb - pb * sqa;
      V_[e].row(k - 1) = (sqb * ra - pb * rb) / det;
      V_[e].row(k) = (-sqa * ra + pa * rb) / det;
    }
  }

  // ---- D: DoFs of the cell basis functions ----
  D_.setZero(ndof, nk);
  if (family == Family::C) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> vp(m, 2);
    for (int v = 0; v < m; ++v) vp.row(v) = ctx.polygon[v].transpose();
    D_.topRows(m) = basis_.eval(vp);
  }
  for (int e = 0; e < m && nmom > 0; ++e) {
    auto [ca, cb] = canonical_endpoints(ctx, e);
    EdgeBasis eb(ca, cb, nmom - 1);
    const QuadratureRule q = segment_rule(ca, cb, std::max(quad_exactness, 2 * k));
    const Eigen::MatrixXd block =
        eb.eval(q.points).transpose() * q.weights.asDiagonal() * basis_.eval(q.points) /
        eb.length();
    for (int i = 0; i < nmom; ++i) D_.row(layout_.edge_dof(e, i)) = block.row(i);
  }
  if (nlow > 0) {
    if (kind == BasisKind::Orthonormal)
      D_.bottomRows(nlow) = O.leftCols(nlow).transpose() * basis_.mass() / area;
    else
      D_.bottomRows(nlow) = basis_.mass().topRows(nlow) / area;
  }

  // ---- moment recovery: (v, mu_b)_K = (Mom dofs)_b for b < dim P_{k-2} ----
  Eigen::MatrixXd Mom = Eigen::MatrixXd::Zero(nlow, ndof);
  if (nlow > 0) {
    Eigen::MatrixXd Mint = Eigen::MatrixXd::Identity(nlow, nlow);
    if (kind == BasisKind::Orthonormal) {
      // chi = (1/|K|) O_low^T mu-moments  =>  invert the triangular factor
      Mint = O.topLeftCorner(nlow, nlow)
                 .transpose()
                 .triangularView<Eigen::Lower>()
                 .solve(Eigen::MatrixXd::Identity(nlow, nlow));
    }
    Mom.middleCols(layout_.interior_dof(0), nlow) = area * Mint;
  }

  // ---- Ritz projector: stiffness rows + boundary-mean constraint ----
  Eigen::MatrixXd Gt = basis_.stiffness();
  Gt.row(0) = basis_.boundary_integrals().transpose();
  Eigen::MatrixXd Bt = Eigen::MatrixXd::Zero(nk, ndof);
  const Eigen::MatrixXd lap = basis_.laplacian_map(k);  // nlow x nk
  if (nlow > 0) Bt -= lap.transpose() * Mom;
  for (int e = 0; e < m; ++e) {
    const Vec2& pa = ctx.polygon[e];
    const Vec2& pb = ctx.polygon[(e + 1) % m];
    EdgeBasis lb(pa, pb, k - 1);
    const double len = lb.length();
    const Vec2 t = (pb - pa) / len;
    const Vec2 n(t.y(), -t.x());  // outward for a CCW loop
    const QuadratureRule q = segment_rule(pa, pb, std::max(quad_exactness, 2 * k));
    const Eigen::MatrixXd dn =
        n.x() * basis_.eval_dx(q.points) + n.y() * basis_.eval_dy(q.points);
    const Eigen::MatrixXd dmat = lb.eval(q.points).transpose() * q.weights.asDiagonal() * dn / len;
    Bt += len * dmat.transpose() * V_[e].topRows(k);
  }
  Bt.row(0).setZero();
  for (int e = 0; e < m; ++e) {
    const double len = (ctx.polygon[(e + 1) % m] - ctx.polygon[e]).norm();
    Bt.row(0) += len * V_[e].row(0);
  }
  PiStar_ = Gt.fullPivLu().solve(Bt);

  // ---- L2 projector: Ritz + P_{k-2} correction of the moment defect ----
  Q_ = PiStar_;
  if (nlow > 0) {
    const Eigen::MatrixXd defect = Mom - basis_.mass().topRows(nlow) * PiStar_;
    Q_.topRows(nlow) +=
        basis_.mass().topLeftCorner(nlow, nlow).ldlt().solve(defect);
  }

}

// macro space + gradient pairing with the macro basis (by parts), deferred to
// first use: the stabilized assemblies never need them
void ElementOperators::ensure_macro() const {
  if (macro_built_) return;
  const ElementContext& ctx = *ctx_;
  const int k = layout_.k;
  const int m = static_cast<int>(ctx.polygon.size());
  macro_ = build_macro_div_space(ctx.polygon, ctx.st, basis_, k, mode_, quad_exactness_);

  const int ns = poly_dim(macro_div_degree(k, mode_));
  B_ = -macro_.div_rep.transpose() * (basis_.mass().topRows(ns) * Q_);
  const int ntrace = macro_.parent_degree() + 1;
  for (int e = 0; e < m; ++e) {
    const double len = (ctx.polygon[(e + 1) % m] - ctx.polygon[e]).norm();
    B_ += len * macro_.trace_rep[e].transpose() * V_[e].topRows(ntrace);
  }
  macro_built_ = true;
}

Eigen::VectorXd ElementOperators::project_virtual_gradient(const Eigen::VectorXd& dofs) const {
  ensure_macro();
  return macro_.gram.ldlt().solve(B_ * dofs);
}

Eigen::VectorXd ElementOperators::interpolate(
    const std::function<double(const Vec2&)>& u) const {
  const ElementContext& ctx = *ctx_;
  const int m = static_cast<int>(ctx.polygon.size());
  const int k = layout_.k;
  Eigen::VectorXd dofs = Eigen::VectorXd::Zero(layout_.n_dofs);
  if (layout_.family == Family::C)
    for (int v = 0; v < m; ++v) dofs[layout_.vertex_dof(v)] = u(ctx.polygon[v]);
  const int nmom = layout_.edge_block_size;
  for (int e = 0; e < m && nmom > 0; ++e) {
    auto [ca, cb] = canonical_endpoints(ctx, e);
    EdgeBasis eb(ca, cb, nmom - 1);
    const Eigen::VectorXd mom = edge_moments(u, eb, std::max(quad_exactness_, 2 * k + 2));
    for (int i = 0; i < nmom; ++i) dofs[layout_.edge_dof(e, i)] = mom[i];
  }
  if (layout_.n_interior > 0) {
    const int nlow = layout_.n_interior;
    const QuadratureRule q = cell_quadrature(ctx.st, std::max(quad_exactness_, 2 * k + 2));
    Eigen::VectorXd uv(q.size());
    for (int i = 0; i < q.size(); ++i) uv[i] = u(q.points.row(i).transpose());
    const Eigen::VectorXd mom = basis_.eval(q.points).transpose() * q.weights.asDiagonal() * uv;
    Eigen::VectorXd chi;
    if (basis_.kind() == BasisKind::Orthonormal)
      chi = basis_.ortho().leftCols(nlow).transpose() * mom / basis_.measure();
    else
      chi = mom.head(nlow) / basis_.measure();
    for (int i = 0; i < nlow; ++i) dofs[layout_.interior_dof(i)] = chi[i];
  }
  return dofs;
}

namespace {

Eigen::VectorXd load_vector(const ElementOperators& ops,
                            const std::function<double(const Vec2&)>& f) {
  const int k = ops.layout().k;
  const QuadratureRule q =
      cell_quadrature(ops.ctx().st, std::max(ops.quad_exactness(), 2 * k + 2));
  Eigen::VectorXd fv(q.size());
  for (int i = 0; i < q.size(); ++i) fv[i] = f(q.points.row(i).transpose());
  const Eigen::VectorXd mom =
      ops.basis().eval(q.points).transpose() * q.weights.asDiagonal() * fv;
  return ops.Q().transpose() * mom;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

}  // namespace

LocalMatrices local_matrices_sf(const ElementOperators& ops, double alpha,
                                const std::function<double(const Vec2&)>& f) {
  LocalMatrices lm;
  lm.method = MethodKind::SF;
  lm.M = symmetrized(ops.Q().transpose() * ops.basis().mass() * ops.Q());
  lm.A = symmetrized(ops.B().transpose() * ops.macro().gram.ldlt().solve(ops.B())) +
         alpha * lm.M;
  lm.load = load_vector(ops, f);
  return lm;
}

LocalMatrices local_matrices_standard(const ElementOperators& ops, double alpha,
                                      const std::function<double(const Vec2&)>& f) {
  LocalMatrices lm;
  lm.method = MethodKind::Standard;
  lm.M = symmetrized(ops.Q().transpose() * ops.basis().mass() * ops.Q());
  const Eigen::MatrixXd consistency =
      ops.PiStar().transpose() * ops.basis().stiffness() * ops.PiStar();
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(ops.layout().n_dofs, ops.layout().n_dofs) -
                            ops.D() * ops.PiStar();
  lm.A = symmetrized(consistency + S.transpose() * S) + alpha * lm.M;
  lm.load = load_vector(ops, f);
  return lm;
}

}  // namespace vemsf
