#include "vemsf/femspaces.hpp"

#include <Eigen/LU>
#include <cmath>
#include <map>
#include <stdexcept>

namespace vemsf {

TriangleFrame::TriangleFrame(const Vec2& p0, const Vec2& p1, const Vec2& p2) : v0(p0) {
  J.col(0) = p1 - p0;
  J.col(1) = p2 - p0;
  const double det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
  area = 0.5 * det;
  Jinv << J(1, 1), -J(0, 1), -J(1, 0), J(0, 0);
  Jinv /= det;
}

Eigen::MatrixXd tri_monomials(const TriangleFrame& T, int deg,
                              const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) {
  const int n = static_cast<int>(pts.rows());
  Eigen::MatrixXd P1(n, deg + 1), P2(n, deg + 1);
  P1.col(0).setOnes();
  P2.col(0).setOnes();
  Eigen::VectorXd x1(n), x2(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 xi = T.xi(pts.row(i).transpose());
    x1[i] = xi.x();
    x2[i] = xi.y();
  }
  for (int p = 1; p <= deg; ++p) {
    P1.col(p) = P1.col(p - 1).cwiseProduct(x1);
    P2.col(p) = P2.col(p - 1).cwiseProduct(x2);
  }
  Eigen::MatrixXd V(n, poly_dim(deg));
  for (int idx = 0; idx < V.cols(); ++idx) {
    const auto [a, b] = monomial_powers(idx);
    V.col(idx) = P1.col(a).cwiseProduct(P2.col(b));
  }
  return V;
}

namespace {

// d/dxi_1 and d/dxi_2 on xi-monomial coefficients
Eigen::MatrixXd xi_deriv_map(int deg, int which) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(poly_dim(deg - 1), poly_dim(deg));
  for (int idx = 0; idx < M.cols(); ++idx) {
    const auto [a, b] = monomial_powers(idx);
    if (which == 0 && a > 0) M(monomial_index(a - 1, b), idx) = a;
    if (which == 1 && b > 0) M(monomial_index(a, b - 1), idx) = b;
  }
  return M;
}

}  // namespace

Eigen::MatrixXd tri_dx_map(const TriangleFrame& T, int deg) {
  return T.Jinv(0, 0) * xi_deriv_map(deg, 0) + T.Jinv(1, 0) * xi_deriv_map(deg, 1);
}

Eigen::MatrixXd tri_dy_map(const TriangleFrame& T, int deg) {
  return T.Jinv(0, 1) * xi_deriv_map(deg, 0) + T.Jinv(1, 1) * xi_deriv_map(deg, 1);
}

TriangleDivBasis::TriangleDivBasis(const TriangleFrame& frame, int r,
                                   const std::array<EdgeSpec, 3>& edges, int quad_exactness)
    : frame_(frame), r_(r) {
  const Vec2 p0 = frame.v0, p1 = frame.v0 + frame.J.col(0), p2 = frame.v0 + frame.J.col(1);
  x_T = (p0 + p1 + p2) / 3.0;
  h_T = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  const int n = dim();
  const int exact = std::max(quad_exactness, 2 * r + 2);

  // orthonormalize the component-monomial frame against (1/|T|)(.,.)_T via a
  // QR of the weighted point values; R is kept upper triangular with positive
  // diagonal so leading sub-frames stay nested
  {
    const QuadratureRule q = triangle_rule(p0, p1, p2, exact);
    Eigen::MatrixXd X, Y;
    eval_monomial(q.points, X, Y);
    const Eigen::VectorXd sw = q.weights.array().sqrt();
    Eigen::MatrixXd S(2 * q.size(), n);
    S.topRows(q.size()) = sw.asDiagonal() * X;
    S.bottomRows(q.size()) = sw.asDiagonal() * Y;
    Eigen::MatrixXd R = Eigen::HouseholderQR<Eigen::MatrixXd>(S)
                            .matrixQR()
                            .topRows(n)
                            .triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
      if (R(j, j) < 0.0) R.row(j) = -R.row(j);
    ortho_ = R.triangularView<Eigen::Upper>().solve(
                 Eigen::MatrixXd::Identity(n, n)) *
             std::sqrt(frame_.area);
  }

  dof_matrix_.setZero(n, n);
  int row = 0;

  // edge normal moments
  for (int e = 0; e < 3; ++e) {
    const EdgeSpec& E = edges[e];
    const QuadratureRule q = segment_rule(E.a, E.b, exact);
    EdgeBasis eb(E.a, E.b, r_);
    const Eigen::MatrixXd phi = eb.eval(q.points);  // npts x (r+1)
    Eigen::MatrixXd X, Y;
    eval_raw(q.points, X, Y);
    const Eigen::MatrixXd vn = E.normal.x() * X + E.normal.y() * Y;
    dof_matrix_.middleRows(row, r_ + 1) =
        phi.transpose() * q.weights.asDiagonal() * vn / eb.length();
    row += r_ + 1;
  }

  if (r_ >= 1 && n_int_dofs() > 0) {
    const QuadratureRule q =
        triangle_rule(p0, p1, p2, std::max(exact, 2 * r));
    Eigen::MatrixXd X, Y;
    eval_raw(q.points, X, Y);

    if (n_div_dofs() > 0) {
      const Eigen::MatrixXd divv =
          tri_monomials(frame_, r_ - 1, q.points) * raw_div_map();  // npts x n
      const Eigen::MatrixXd qv = tri_monomials(frame_, r_ - 1, q.points);
      for (int idx = 1; idx < poly_dim(r_ - 1); ++idx) {
        const double mean = q.weights.dot(qv.col(idx)) / frame_.area;
        const Eigen::VectorXd qt = qv.col(idx).array() - mean;
        dof_matrix_.row(row++) =
            (h_T / frame_.area) * (qt.cwiseProduct(q.weights).transpose() * divv);
      }
    }

    if (n_rot_dofs() > 0) {
      const Eigen::MatrixXd qv = tri_monomials(frame_, r_ - 2, q.points);
      Eigen::VectorXd rx(q.size()), ry(q.size());
      for (int i = 0; i < q.size(); ++i) {
        const Vec2 d = (q.points.row(i).transpose() - x_T) / h_T;
        rx[i] = d.y();
        ry[i] = -d.x();
      }
      for (int idx = 0; idx < poly_dim(r_ - 2); ++idx) {
        const Eigen::VectorXd wx = qv.col(idx).cwiseProduct(rx).cwiseProduct(q.weights);
        const Eigen::VectorXd wy = qv.col(idx).cwiseProduct(ry).cwiseProduct(q.weights);
        dof_matrix_.row(row++) = (wx.transpose() * X + wy.transpose() * Y) / frame_.area;
      }
    }
  }

  if (row != n) throw std::logic_error("triangle div basis: DoF count mismatch");
  shape_coeffs_ = dof_matrix_.fullPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

void TriangleDivBasis::eval_raw(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                Eigen::MatrixXd& X, Eigen::MatrixXd& Y) const {
  eval_monomial(pts, X, Y);
  X = X * ortho_;
  Y = Y * ortho_;
}

void TriangleDivBasis::eval_monomial(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                     Eigen::MatrixXd& X, Eigen::MatrixXd& Y) const {
  const int np = static_cast<int>(pts.rows());
  if (r_ == 0) {
    X.setZero(np, 3);
    Y.setZero(np, 3);
    X.col(0).setOnes();
    Y.col(1).setOnes();
    for (int i = 0; i < np; ++i) {
      const Vec2 d = (pts.row(i).transpose() - x_T) / h_T;
      X(i, 2) = d.x();
      Y(i, 2) = d.y();
    }
    return;
  }
  const int D = poly_dim(r_);
  const Eigen::MatrixXd V = tri_monomials(frame_, r_, pts);
  X.setZero(np, 2 * D);
  Y.setZero(np, 2 * D);
  X.leftCols(D) = V;
  Y.rightCols(D) = V;
}

Eigen::MatrixXd TriangleDivBasis::raw_div_map() const {
  if (r_ == 0) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(1, 3);
    M(0, 2) = 2.0 / h_T;
    return M * ortho_;
  }
  const int D = poly_dim(r_);
  Eigen::MatrixXd M(poly_dim(r_ - 1), 2 * D);
  M.leftCols(D) = tri_dx_map(frame_, r_);
  M.rightCols(D) = tri_dy_map(frame_, r_);
  return M * ortho_;
}

Eigen::VectorXd TriangleDivBasis::dofs_of_monomial(const Eigen::VectorXd& cmono) const {
  if (r_ == 0) throw std::invalid_argument("monomial-frame DoFs need r >= 1");
  // dof_matrix_ acts on raw-frame coefficients; the raw frame is the monomial
  // frame times ortho_, so monomial coefficients convert by a triangular solve
  return dof_matrix_ * ortho_.triangularView<Eigen::Upper>().solve(cmono);
}

int PiecewiseDivSpace::tri_block(int t) const { return n_edge_dofs + t * n_int_per_tri(); }

void PiecewiseDivSpace::eval_tri(int t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                 const Eigen::VectorXd& c, Eigen::VectorXd& vx,
                                 Eigen::VectorXd& vy) const {
  Eigen::VectorXd cl(gather[t].size());
  for (size_t i = 0; i < gather[t].size(); ++i) cl[i] = c[gather[t][i]];
  const Eigen::VectorXd raw = elems[t].shape_coeffs() * cl;
  Eigen::MatrixXd X, Y;
  elems[t].eval_raw(pts, X, Y);
  vx = X * raw;
  vy = Y * raw;
}

Eigen::VectorXd PiecewiseDivSpace::div_tri(int t, const Eigen::VectorXd& c) const {
  Eigen::VectorXd cl(gather[t].size());
  for (size_t i = 0; i < gather[t].size(); ++i) cl[i] = c[gather[t][i]];
  return elems[t].raw_div_map() * (elems[t].shape_coeffs() * cl);
}

Eigen::MatrixXd PiecewiseDivSpace::div_tri_map(int t) const {
  const Eigen::MatrixXd local = elems[t].raw_div_map() * elems[t].shape_coeffs();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(local.rows(), n_dofs);
  for (size_t i = 0; i < gather[t].size(); ++i) M.col(gather[t][i]) = local.col(i);
  return M;
}

PiecewiseDivSpace build_piecewise_div_space(const SubTriangulation& st, int r,
                                            int quad_exactness) {
  PiecewiseDivSpace pw;
  pw.r = r;
  pw.st = &st;

  std::map<std::pair<int, int>, int> edge_of;
  for (int e = 0; e < st.n_edges(); ++e) edge_of[{st.edges[e].a, st.edges[e].b}] = e;

  pw.n_edge_dofs = (r + 1) * st.n_edges();
  pw.frames.reserve(st.n_tris());
  pw.elems.reserve(st.n_tris());
  pw.tri_subedge.resize(st.n_tris());

  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    pw.frames.emplace_back(p[0], p[1], p[2]);
    std::array<TriangleDivBasis::EdgeSpec, 3> specs;
    for (int i = 0; i < 3; ++i) {
      const int a = st.tris[t][i], b = st.tris[t][(i + 1) % 3];
      const auto key = std::minmax(a, b);
      const int e = edge_of.at({key.first, key.second});
      pw.tri_subedge[t][i] = e;
      specs[i] = {st.points[st.edges[e].a], st.points[st.edges[e].b], st.edges[e].normal};
    }
    pw.elems.emplace_back(pw.frames[t], r, specs, quad_exactness);
  }

  const int nint = pw.n_int_per_tri();
  pw.n_dofs = pw.n_edge_dofs + nint * st.n_tris();
  pw.gather.resize(st.n_tris());
  for (int t = 0; t < st.n_tris(); ++t) {
    std::vector<int>& g = pw.gather[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= r; ++j) g.push_back(pw.edge_block(pw.tri_subedge[t][i]) + j);
    for (int j = 0; j < nint; ++j) g.push_back(pw.tri_block(t) + j);
  }

  pw.gram.setZero(pw.n_dofs, pw.n_dofs);
  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    const QuadratureRule q = triangle_rule(p[0], p[1], p[2], std::max(quad_exactness, 2 * r));
    Eigen::MatrixXd X, Y;
    pw.elems[t].eval_raw(q.points, X, Y);
    const Eigen::MatrixXd& S = pw.elems[t].shape_coeffs();
    const Eigen::MatrixXd Xs = X * S, Ys = Y * S;
    const Eigen::MatrixXd local = Xs.transpose() * q.weights.asDiagonal() * Xs +
                                  Ys.transpose() * q.weights.asDiagonal() * Ys;
    const auto& g = pw.gather[t];
    for (size_t i = 0; i < g.size(); ++i)
      for (size_t j = 0; j < g.size(); ++j) pw.gram(g[i], g[j]) += local(i, j);
  }
  pw.gram = 0.5 * (pw.gram + pw.gram.transpose()).eval();
  return pw;
}

int LagrangeMacroSpace::n_interior() const {
  int n = 0;
  for (bool b : node_on_boundary)
    if (!b) ++n;
  return n;
}

std::vector<int> LagrangeMacroSpace::interior_nodes() const {
  std::vector<int> v;
  for (int i = 0; i < n_nodes(); ++i)
    if (!node_on_boundary[i]) v.push_back(i);
  return v;
}

LagrangeMacroSpace build_lagrange_macro(const SubTriangulation& st, int m) {
  if (m < 1) throw std::invalid_argument("lagrange macro degree must be >= 1");
  LagrangeMacroSpace lag;
  lag.degree = m;
  lag.st = &st;

  // reference Vandermonde on the lattice (shared by all triangles)
  const int dim = poly_dim(m);
  Eigen::Matrix<double, Eigen::Dynamic, 2> lattice(dim, 2);
  {
    int p = 0;
    for (int j = 0; j <= m; ++j)
      for (int i = 0; i + j <= m; ++i) lattice.row(p++) = Vec2(double(i) / m, double(j) / m);
  }
  TriangleFrame ref(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1));
  const Eigen::MatrixXd Vref = tri_monomials(ref, m, lattice);
  const Eigen::MatrixXd Cref = Vref.fullPivLu().solve(Eigen::MatrixXd::Identity(dim, dim));

  double diam = 0.0;
  for (const Vec2& p : st.points)
    for (const Vec2& q : st.points) diam = std::max(diam, (p - q).norm());
  const double tol = 1e-9 * diam;

  std::map<std::pair<long long, long long>, int> lookup;
  auto weld = [&](const Vec2& p, bool on_bnd) {
    const long long qx = llround(p.x() / tol), qy = llround(p.y() / tol);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = lookup.find({qx + dx, qy + dy});
        if (it != lookup.end() && (lag.nodes[it->second] - p).norm() < 4 * tol) {
          if (on_bnd) lag.node_on_boundary[it->second] = true;
          return it->second;
        }
      }
    const int id = lag.n_nodes();
    lag.nodes.push_back(p);
    lag.node_on_boundary.push_back(on_bnd);
    lookup[{qx, qy}] = id;
    return id;
  };

  std::map<std::pair<int, int>, int> edge_of;
  for (int e = 0; e < st.n_edges(); ++e) edge_of[{st.edges[e].a, st.edges[e].b}] = e;

  lag.frames.reserve(st.n_tris());
  lag.tri_nodes.resize(st.n_tris());
  lag.nodal_coeffs.assign(st.n_tris(), Cref);
  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    lag.frames.emplace_back(p[0], p[1], p[2]);
    std::array<bool, 3> edge_bnd;
    for (int i = 0; i < 3; ++i) {
      const auto key = std::minmax(st.tris[t][i], st.tris[t][(i + 1) % 3]);
      edge_bnd[i] = st.edges[edge_of.at({key.first, key.second})].boundary();
    }
    lag.tri_nodes[t].resize(dim);
    int pidx = 0;
    for (int j = 0; j <= m; ++j) {
      for (int i = 0; i + j <= m; ++i, ++pidx) {
        const Vec2 x = lag.frames[t].v0 + lag.frames[t].J * Vec2(double(i) / m, double(j) / m);
        // lattice point on local edge 0: j=0; edge 1: i+j=m; edge 2: i=0
        const bool on_bnd = (j == 0 && edge_bnd[0]) || (i + j == m && edge_bnd[1]) ||
                            (i == 0 && edge_bnd[2]);
        lag.tri_nodes[t][pidx] = weld(x, on_bnd);
      }
    }
  }
  return lag;
}

Eigen::VectorXd curl_as_parent_dofs(const LagrangeMacroSpace& lag, const PiecewiseDivSpace& pw,
                                    const Eigen::VectorXd& nodal, int quad_exactness) {
  if (pw.r != lag.degree - 1)
    throw std::invalid_argument("curl image lives in the div space of degree m-1");
  const SubTriangulation& st = *pw.st;
  const int m = lag.degree;
  Eigen::VectorXd dofs = Eigen::VectorXd::Zero(pw.n_dofs);

  for (int t = 0; t < st.n_tris(); ++t) {
    Eigen::VectorXd cl(lag.tri_nodes[t].size());
    for (size_t i = 0; i < lag.tri_nodes[t].size(); ++i) cl[i] = nodal[lag.tri_nodes[t][i]];
    const Eigen::VectorXd qc = lag.nodal_coeffs[t] * cl;  // xi-monomial coeffs of q
    const Eigen::VectorXd cx = tri_dy_map(lag.frames[t], m) * qc;   // curl_x = dq/dy
    const Eigen::VectorXd cy = -(tri_dx_map(lag.frames[t], m) * qc);  // curl_y = -dq/dx

    auto field = [&](const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts, Eigen::VectorXd& vx,
                     Eigen::VectorXd& vy) {
      const Eigen::MatrixXd V = tri_monomials(lag.frames[t], m - 1, pts);
      vx = V * cx;
      vy = V * cy;
    };

    // edge normal moments
    for (int i = 0; i < 3; ++i) {
      const int e = pw.tri_subedge[t][i];
      const auto& se = st.edges[e];
      EdgeBasis eb(st.points[se.a], st.points[se.b], pw.r);
      const QuadratureRule q =
          segment_rule(st.points[se.a], st.points[se.b], std::max(quad_exactness, 2 * m));
      Eigen::VectorXd vx, vy;
      field(q.points, vx, vy);
      const Eigen::VectorXd vn = se.normal.x() * vx + se.normal.y() * vy;
      dofs.segment(pw.edge_block(e), pw.r + 1) =
          eb.eval(q.points).transpose() * q.weights.asDiagonal() * vn / eb.length();
    }

    // interior moments: divergence block vanishes (div curl = 0); rotation
    // moments must match the element's own functional definitions, so apply
    // the element DoF rows to the monomial-coefficient image of the curl
    if (pw.n_int_per_tri() > 0) {
      const int D = poly_dim(m - 1);
      Eigen::VectorXd cmono(2 * D);
      cmono.head(D) = cx;
      cmono.tail(D) = cy;
      const Eigen::VectorXd all = pw.elems[t].dofs_of_monomial(cmono);
      dofs.segment(pw.tri_block(t), pw.n_int_per_tri()) =
          all.segment(pw.elems[t].n_edge_dofs(), pw.n_int_per_tri());
    }
  }
  return dofs;
}

}  // namespace vemsf
