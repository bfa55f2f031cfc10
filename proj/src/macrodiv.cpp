#include "vemsf/macrodiv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace vemsf {

int macro_parent_degree(int k, MacroMode mode) {
  return mode == MacroMode::NC ? std::max(k - 1, 0) : k;
}

int macro_div_degree(int k, MacroMode mode) {
  switch (mode) {
    case MacroMode::NC: return std::max(k - 2, 0);
    case MacroMode::C: return k - 1;
    case MacroMode::CReduced: return k - 2;
  }
  return 0;
}

int macro_ring_degree(int k, MacroMode mode) { return mode == MacroMode::NC ? k : k + 1; }

int macro_dof_count(const SubTriangulation& st, int k, MacroMode mode) {
  const int r = macro_parent_degree(k, mode);
  const int s = macro_div_degree(k, mode);
  const int m = macro_ring_degree(k, mode);
  const int interior_nodes = st.n_interior_points() + (m - 1) * st.n_interior_edges() +
                             st.n_tris() * (m - 1) * (m - 2) / 2;
  return st.n_polygon_vertices * (r + 1) + (poly_dim(s) - 1) + interior_nodes;
}

void MacroDivSpace::eval_tri(int t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                             const Eigen::VectorXd& coeffs, Eigen::VectorXd& vx,
                             Eigen::VectorXd& vy) const {
  parent.eval_tri(t, pts, basis * coeffs, vx, vy);
}

namespace {

struct PiecewisePolySpace {
  // block-diagonal description of scalar piecewise polynomials over triangles
  int deg;
  int block;  // poly_dim(deg)
  std::vector<Eigen::MatrixXd> mass;  // per triangle
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;
  int size() const { return block * static_cast<int>(mass.size()); }
};

PiecewisePolySpace piecewise_poly(const SubTriangulation& st,
                                  const std::vector<TriangleFrame>& frames, int deg,
                                  int exactness) {
  PiecewisePolySpace s;
  s.deg = deg;
  s.block = poly_dim(deg);
  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    const QuadratureRule q = triangle_rule(p[0], p[1], p[2], std::max(exactness, 2 * deg));
    const Eigen::MatrixXd V = tri_monomials(frames[t], deg, q.points);
    Eigen::MatrixXd M = V.transpose() * q.weights.asDiagonal() * V;
    M = 0.5 * (M + M.transpose()).eval();
    s.mass.push_back(M);
    s.chol.emplace_back(M);
    if (s.chol.back().info() != Eigen::Success)
      throw std::runtime_error("piecewise polynomial mass block not positive definite");
  }
  return s;
}

}  // namespace

MacroDivSpace build_macro_div_space(const std::vector<Vec2>& polygon,
                                    const SubTriangulation& st, const CellBasis& cell, int k,
                                    MacroMode mode, int quad_exactness, double svd_cutoff) {
  MacroDivSpace sp;
  sp.mode = mode;
  sp.k = k;
  sp.st = &st;
  const int r = macro_parent_degree(k, mode);
  const int s = macro_div_degree(k, mode);
  if (poly_dim(s) < 1)
    throw std::invalid_argument("divergence degree cap below constants (k too small for mode)");

  sp.parent = build_piecewise_div_space(st, r, quad_exactness);
  const PiecewiseDivSpace& pw = sp.parent;
  const int np = pw.n_dofs;
  const int ntri = st.n_tris();

  std::vector<Eigen::MatrixXd> constraint_blocks;

  // (i) divergence in a single global polynomial of degree s:
  // piecewise divergence lives at degree dv; constrain orthogonality to the
  // complement of P_s(K) inside the piecewise space
  const int dv = std::max(r - 1, 0);
  {
    PiecewisePolySpace ppoly = piecewise_poly(st, pw.frames, dv, quad_exactness);
    const int npw = ppoly.size();
    const int ps = poly_dim(s);

    // global cell monomials embedded per triangle (exact L2 fit)
    Eigen::MatrixXd embed = Eigen::MatrixXd::Zero(npw, ps);
    Eigen::MatrixXd divmap = Eigen::MatrixXd::Zero(npw, np);
    for (int t = 0; t < ntri; ++t) {
      auto p = st.tri_points(t);
      const QuadratureRule q =
          triangle_rule(p[0], p[1], p[2], std::max(quad_exactness, dv + std::max(dv, s)));
      const Eigen::MatrixXd Vt = tri_monomials(pw.frames[t], dv, q.points);
      const Eigen::MatrixXd Vg = cell.eval(q.points, s);
      embed.middleRows(t * ppoly.block, ppoly.block) =
          ppoly.chol[t].solve(Vt.transpose() * q.weights.asDiagonal() * Vg);
      divmap.middleRows(t * ppoly.block, ppoly.block) = pw.div_tri_map(t);
    }

    // whitened coordinates y = L^T d, so complement is plain orthogonal
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(npw, ps);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(npw, np);
    for (int t = 0; t < ntri; ++t) {
      const auto LT = ppoly.chol[t].matrixU();
      Y.middleRows(t * ppoly.block, ppoly.block) =
          LT * embed.middleRows(t * ppoly.block, ppoly.block);
      W.middleRows(t * ppoly.block, ppoly.block) =
          LT * divmap.middleRows(t * ppoly.block, ppoly.block);
    }
    if (npw > ps) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      const Eigen::MatrixXd Qfull = qr.householderQ();
      constraint_blocks.push_back(Qfull.rightCols(npw - ps).transpose() * W);
    }
  }

  // (ii) per polygon edge: single-polynomial normal trace. Trace coefficients
  // on each sub-edge are exactly the parent edge-DoF values.
  const int m_poly = st.n_polygon_vertices;
  std::vector<std::vector<int>> edge_subs(m_poly);
  for (int e = 0; e < st.n_edges(); ++e)
    if (st.edges[e].boundary()) edge_subs[st.edges[e].parent].push_back(e);

  for (int f = 0; f < m_poly; ++f) {
    const auto& subs = edge_subs[f];
    if (subs.size() <= 1) continue;  // trace already a single polynomial
    const int nq = static_cast<int>(subs.size());
    const int bl = r + 1;
    EdgeBasis full(polygon[f], polygon[(f + 1) % m_poly], r);
    Eigen::MatrixXd embed(nq * bl, bl);      // global basis in sub-edge coefficients
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(nq * bl, np);
    Eigen::VectorXd scale(nq * bl);          // whitening: sqrt(|e_i|)
    for (int i = 0; i < nq; ++i) {
      const auto& se = st.edges[subs[i]];
      EdgeBasis sub(st.points[se.a], st.points[se.b], r);
      const QuadratureRule q = segment_rule(sub.a(), sub.b(), std::max(quad_exactness, 2 * r));
      embed.middleRows(i * bl, bl) =
          sub.eval(q.points).transpose() * q.weights.asDiagonal() * full.eval(q.points) /
          sub.length();
      for (int j = 0; j < bl; ++j) {
        sel(i * bl + j, pw.edge_block(subs[i]) + j) = 1.0;
        scale[i * bl + j] = std::sqrt(sub.length());
      }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(scale.asDiagonal() * embed);
    const Eigen::MatrixXd Qfull = qr.householderQ();
    constraint_blocks.push_back(Qfull.rightCols(nq * bl - bl).transpose() *
                                (scale.asDiagonal() * sel));
  }

  // nullspace of the stacked constraints
  int ncon = 0;
  for (const auto& b : constraint_blocks) ncon += static_cast<int>(b.rows());
  if (ncon == 0) {
    sp.basis = Eigen::MatrixXd::Identity(np, np);
    sp.svd_gap = std::numeric_limits<double>::infinity();
  } else {
    Eigen::MatrixXd C(ncon, np);
    int at = 0;
    for (const auto& b : constraint_blocks) {
      C.middleRows(at, b.rows()) = b;
      at += static_cast<int>(b.rows());
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    const double cut = svd_cutoff * smax;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > cut) ++rank;
    double largest_dropped = rank < sv.size() ? sv[rank] : 0.0;
    double smallest_kept = rank > 0 ? sv[rank - 1] : std::numeric_limits<double>::infinity();
    sp.svd_gap = largest_dropped > 0.0 ? smallest_kept / largest_dropped
                                       : std::numeric_limits<double>::infinity();
    if (sp.svd_gap < 10.0)
      throw std::runtime_error("constraint rank decision ambiguous: singular value gap " +
                               std::to_string(sp.svd_gap) + " below 10");
    sp.basis = svd.matrixV().rightCols(np - rank);
  }

  // L2(K)-orthonormalize via an SVD of the candidate basis' weighted
  // quadrature values: the computed Gram is the identity by construction,
  // which stays positive definite even when the glued shape basis is badly
  // skewed (slivers, high degree), where an eigendecomposition of the
  // assembled Gram loses definiteness
  {
    std::vector<QuadratureRule> rules(ntri);
    int nrows = 0;
    for (int t = 0; t < ntri; ++t) {
      auto p = st.tri_points(t);
      rules[t] = triangle_rule(p[0], p[1], p[2], std::max(quad_exactness, 2 * r + 2));
      nrows += 2 * rules[t].size();
    }
    Eigen::MatrixXd vals(nrows, sp.basis.cols());
    int at = 0;
    for (int t = 0; t < ntri; ++t) {
      const QuadratureRule& q = rules[t];
      Eigen::MatrixXd X, Y;
      pw.elems[t].eval_raw(q.points, X, Y);
      Eigen::MatrixXd cl(pw.gather[t].size(), sp.basis.cols());
      for (std::size_t i = 0; i < pw.gather[t].size(); ++i)
        cl.row(i) = sp.basis.row(pw.gather[t][i]);
      const Eigen::MatrixXd raw = pw.elems[t].shape_coeffs() * cl;
      const Eigen::VectorXd sw = q.weights.array().sqrt();
      vals.middleRows(at, q.size()) = sw.asDiagonal() * (X * raw);
      vals.middleRows(at + q.size(), q.size()) = sw.asDiagonal() * (Y * raw);
      at += 2 * q.size();
    }
    Eigen::BDCSVD<Eigen::MatrixXd> wsvd(vals, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& ws = wsvd.singularValues();
    const double wmin = ws(ws.size() - 1);
    sp.min_gram_eig = (wmin / ws(0)) * (wmin / ws(0));  // relative Gram floor
    if (!(wmin > 0.0))
      throw std::runtime_error("macro space Gram not positive definite");
    sp.basis = sp.basis * wsvd.matrixV() * ws.cwiseInverse().asDiagonal();
    sp.gram = Eigen::MatrixXd::Identity(sp.dim(), sp.dim());
  }

  // divergence representation: fit one global polynomial of degree s
  {
    const int ps = poly_dim(s);
    PiecewisePolySpace ppoly = piecewise_poly(st, pw.frames, dv, quad_exactness);
    const int npw = ppoly.size();
    Eigen::MatrixXd embed(npw, ps);
    Eigen::MatrixXd dcoef(npw, sp.dim());
    for (int t = 0; t < ntri; ++t) {
      auto p = st.tri_points(t);
      const QuadratureRule q =
          triangle_rule(p[0], p[1], p[2], std::max(quad_exactness, dv + std::max(dv, s)));
      const Eigen::MatrixXd Vt = tri_monomials(pw.frames[t], dv, q.points);
      const Eigen::MatrixXd Vg = cell.eval(q.points, s);
      embed.middleRows(t * ppoly.block, ppoly.block) =
          ppoly.chol[t].solve(Vt.transpose() * q.weights.asDiagonal() * Vg);
      dcoef.middleRows(t * ppoly.block, ppoly.block) = pw.div_tri_map(t) * sp.basis;
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ps, ps);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(ps, sp.dim());
    double dnorm2 = 0.0;
    for (int t = 0; t < ntri; ++t) {
      const auto E = embed.middleRows(t * ppoly.block, ppoly.block);
      const auto D = dcoef.middleRows(t * ppoly.block, ppoly.block);
      A += E.transpose() * ppoly.mass[t] * E;
      b += E.transpose() * ppoly.mass[t] * D;
      dnorm2 += (D.transpose() * ppoly.mass[t] * D).trace();
    }
    sp.div_rep = A.ldlt().solve(b);
    double res2 = 0.0;
    for (int t = 0; t < ntri; ++t) {
      const Eigen::MatrixXd R = dcoef.middleRows(t * ppoly.block, ppoly.block) -
                                embed.middleRows(t * ppoly.block, ppoly.block) * sp.div_rep;
      res2 += (R.transpose() * ppoly.mass[t] * R).trace();
    }
    sp.div_fit_residual = dnorm2 > 0.0 ? std::sqrt(res2 / dnorm2) : 0.0;
  }

  // trace representation per polygon edge (loop orientation, outward normal)
  sp.trace_rep.resize(m_poly);
  sp.trace_fit_residual = 0.0;
  for (int f = 0; f < m_poly; ++f) {
    const auto& subs = edge_subs[f];
    const int bl = r + 1;
    EdgeBasis full(polygon[f], polygon[(f + 1) % m_poly], r);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(bl, bl);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(bl, sp.dim());
    double snorm2 = 0.0;
    std::vector<Eigen::MatrixXd> embeds;
    for (int e : subs) {
      const auto& se = st.edges[e];
      EdgeBasis sub(st.points[se.a], st.points[se.b], r);
      const QuadratureRule q = segment_rule(sub.a(), sub.b(), std::max(quad_exactness, 2 * r));
      Eigen::MatrixXd E = sub.eval(q.points).transpose() * q.weights.asDiagonal() *
                          full.eval(q.points) / sub.length();
      const Eigen::MatrixXd sc = sp.basis.middleRows(pw.edge_block(e), bl);
      A += E.transpose() * sub.length() * E;
      b += E.transpose() * sub.length() * sc;
      snorm2 += sub.length() * sc.squaredNorm();
      embeds.push_back(std::move(E));
    }
    sp.trace_rep[f] = A.ldlt().solve(b);
    double res2 = 0.0;
    for (size_t i = 0; i < subs.size(); ++i) {
      const auto& se = st.edges[subs[i]];
      EdgeBasis sub(st.points[se.a], st.points[se.b], r);
      const Eigen::MatrixXd R =
          sp.basis.middleRows(pw.edge_block(subs[i]), bl) - embeds[i] * sp.trace_rep[f];
      res2 += sub.length() * R.squaredNorm();
    }
    if (snorm2 > 0.0)
      sp.trace_fit_residual = std::max(sp.trace_fit_residual, std::sqrt(res2 / snorm2));
  }

  return sp;
}

Eigen::VectorXd project_field(const MacroDivSpace& space,
                              const std::function<Vec2(const Vec2&)>& g, int quad_exactness) {
  const PiecewiseDivSpace& pw = space.parent;
  const SubTriangulation& st = *space.st;
  Eigen::VectorXd pb = Eigen::VectorXd::Zero(pw.n_dofs);
  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    const QuadratureRule q =
        triangle_rule(p[0], p[1], p[2], std::max(quad_exactness, 2 * pw.r + 2));
    Eigen::MatrixXd X, Y;
    pw.elems[t].eval_raw(q.points, X, Y);
    Eigen::VectorXd gx(q.size()), gy(q.size());
    for (int i = 0; i < q.size(); ++i) {
      const Vec2 gv = g(q.points.row(i).transpose());
      gx[i] = gv.x();
      gy[i] = gv.y();
    }
    const Eigen::VectorXd local =
        pw.elems[t].shape_coeffs().transpose() *
        (X.transpose() * q.weights.asDiagonal() * gx + Y.transpose() * q.weights.asDiagonal() * gy);
    const auto& gat = pw.gather[t];
    for (size_t i = 0; i < gat.size(); ++i) pb[gat[i]] += local[i];
  }
  const Eigen::VectorXd rhs = space.basis.transpose() * pb;
  return space.gram.ldlt().solve(rhs);
}

double macro_norm2(const MacroDivSpace& space, const Eigen::VectorXd& coeffs) {
  return coeffs.dot(space.gram * coeffs);
}

}  // namespace vemsf
