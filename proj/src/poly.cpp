#include "vemsf/poly.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace vemsf {

std::pair<int, int> monomial_powers(int idx) {
  int d = 0;
  while ((d + 1) * (d + 2) / 2 <= idx) ++d;
  const int ay = idx - d * (d + 1) / 2;
  return {d - ay, ay};
}

QuadratureRule cell_quadrature(const SubTriangulation& st, int exactness) {
  QuadratureRule q;
  q.exactness = exactness;
  std::vector<QuadratureRule> parts;
  int total = 0;
  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    parts.push_back(triangle_rule(p[0], p[1], p[2], exactness));
    total += parts.back().size();
  }
  q.points.resize(total, 2);
  q.weights.resize(total);
  int at = 0;
  for (const auto& part : parts) {
    q.points.middleRows(at, part.size()) = part.points;
    q.weights.segment(at, part.size()) = part.weights;
    at += part.size();
  }
  return q;
}

namespace {

// powers table: column p = t^p for p = 0..deg
Eigen::MatrixXd power_table(const Eigen::VectorXd& t, int deg) {
  Eigen::MatrixXd P(t.size(), deg + 1);
  P.col(0).setOnes();
  for (int p = 1; p <= deg; ++p) P.col(p) = P.col(p - 1).cwiseProduct(t);
  return P;
}

}  // namespace

CellBasis::CellBasis(const std::vector<Vec2>& polygon, const SubTriangulation& st, int degree,
                     BasisKind kind, int quad_exactness)
    : degree_(degree), kind_(kind) {
  diameter_ = polygon_diameter(polygon);
  measure_ = polygon_signed_area(polygon);
  double inr;
  center_ = inscribed_ball_center(polygon, &inr);

  if (kind_ == BasisKind::ScaledMonomial) {
    scale_ = Vec2(diameter_, diameter_);
  } else {
    double sx = 0.0, sy = 0.0;
    for (const Vec2& p : polygon) {
      sx = std::max(sx, std::abs(p.x() - center_.x()));
      sy = std::max(sy, std::abs(p.y() - center_.y()));
    }
    scale_ = Vec2(sx, sy);
  }

  const int n = dim();
  const QuadratureRule q = cell_quadrature(st, std::max(quad_exactness, 2 * degree));
  const Eigen::MatrixXd V = eval(q.points);
  const Eigen::MatrixXd Vx = eval_dx(q.points);
  const Eigen::MatrixXd Vy = eval_dy(q.points);
  mass_ = V.transpose() * q.weights.asDiagonal() * V;
  stiffness_ = Vx.transpose() * q.weights.asDiagonal() * Vx +
               Vy.transpose() * q.weights.asDiagonal() * Vy;
  mass_ = 0.5 * (mass_ + mass_.transpose()).eval();
  stiffness_ = 0.5 * (stiffness_ + stiffness_.transpose()).eval();

  // Cholesky Gram-Schmidt of the ordered monomials in (1/|K|)(.,.)_K
  Eigen::LLT<Eigen::MatrixXd> llt(mass_ / measure_);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cell basis Gram matrix is numerically singular");
  ortho_ = Eigen::MatrixXd::Identity(n, n);
  llt.matrixU().solveInPlace(ortho_);  // U^{-1}: upper triangular

  boundary_integrals_.setZero(n);
  const int m = static_cast<int>(polygon.size());
  for (int i = 0; i < m; ++i) {
    const QuadratureRule eq =
        segment_rule(polygon[i], polygon[(i + 1) % m], std::max(quad_exactness, degree));
    boundary_integrals_ += eval(eq.points).transpose() * eq.weights;
  }
}

Eigen::MatrixXd CellBasis::eval(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                int deg) const {
  if (deg < 0) deg = degree_;
  const Eigen::VectorXd tx = (pts.col(0).array() - center_.x()) / scale_.x();
  const Eigen::VectorXd ty = (pts.col(1).array() - center_.y()) / scale_.y();
  const Eigen::MatrixXd Px = power_table(tx, deg), Py = power_table(ty, deg);
  Eigen::MatrixXd V(pts.rows(), poly_dim(deg));
  for (int idx = 0; idx < V.cols(); ++idx) {
    const auto [ax, ay] = monomial_powers(idx);
    V.col(idx) = Px.col(ax).cwiseProduct(Py.col(ay));
  }
  return V;
}

Eigen::MatrixXd CellBasis::eval_dx(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                   int deg) const {
  if (deg < 0) deg = degree_;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(pts.rows(), poly_dim(deg));
  if (deg == 0) return D;
  const Eigen::MatrixXd Vm = eval(pts, deg - 1);
  for (int idx = 0; idx < D.cols(); ++idx) {
    const auto [ax, ay] = monomial_powers(idx);
    if (ax > 0) D.col(idx) = (ax / scale_.x()) * Vm.col(monomial_index(ax - 1, ay));
  }
  return D;
}

Eigen::MatrixXd CellBasis::eval_dy(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts,
                                   int deg) const {
  if (deg < 0) deg = degree_;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(pts.rows(), poly_dim(deg));
  if (deg == 0) return D;
  const Eigen::MatrixXd Vm = eval(pts, deg - 1);
  for (int idx = 0; idx < D.cols(); ++idx) {
    const auto [ax, ay] = monomial_powers(idx);
    if (ay > 0) D.col(idx) = (ay / scale_.y()) * Vm.col(monomial_index(ax, ay - 1));
  }
  return D;
}

Eigen::MatrixXd CellBasis::dx_map(int deg) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(poly_dim(deg - 1), poly_dim(deg));
  for (int idx = 0; idx < M.cols(); ++idx) {
    const auto [ax, ay] = monomial_powers(idx);
    if (ax > 0) M(monomial_index(ax - 1, ay), idx) = ax / scale_.x();
  }
  return M;
}

Eigen::MatrixXd CellBasis::dy_map(int deg) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(poly_dim(deg - 1), poly_dim(deg));
  for (int idx = 0; idx < M.cols(); ++idx) {
    const auto [ax, ay] = monomial_powers(idx);
    if (ay > 0) M(monomial_index(ax, ay - 1), idx) = ay / scale_.y();
  }
  return M;
}

Eigen::MatrixXd CellBasis::laplacian_map(int deg) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(poly_dim(deg - 2), poly_dim(deg));
  for (int idx = 0; idx < M.cols(); ++idx) {
    const auto [ax, ay] = monomial_powers(idx);
    if (ax > 1) M(monomial_index(ax - 2, ay), idx) += ax * (ax - 1) / (scale_.x() * scale_.x());
    if (ay > 1) M(monomial_index(ax, ay - 2), idx) += ay * (ay - 1) / (scale_.y() * scale_.y());
  }
  return M;
}

Eigen::VectorXd l2_project(const std::function<double(const Vec2&)>& f, const CellBasis& basis,
                           const SubTriangulation& st, int deg, int quad_exactness) {
  const QuadratureRule q = cell_quadrature(st, quad_exactness);
  const Eigen::MatrixXd V = basis.eval(q.points, deg);
  Eigen::VectorXd fv(q.size());
  for (int i = 0; i < q.size(); ++i) fv[i] = f(q.points.row(i).transpose());
  const Eigen::VectorXd b = V.transpose() * q.weights.asDiagonal() * fv;
  const int n = poly_dim(deg);
  return basis.mass().topLeftCorner(n, n).ldlt().solve(b);
}

EdgeBasis::EdgeBasis(const Vec2& a, const Vec2& b, int degree)
    : degree_(degree), a_(a), b_(b), mid_(0.5 * (a + b)) {
  length_ = (b - a).norm();
  tangent_ = (b - a) / length_;
}

Eigen::MatrixXd EdgeBasis::eval_s(const Eigen::VectorXd& s) const {
  const int n = static_cast<int>(s.size());
  Eigen::MatrixXd L(n, degree_ + 1);
  L.col(0).setOnes();
  if (degree_ >= 1) L.col(1) = s;
  for (int p = 1; p < degree_; ++p)
    L.col(p + 1) = ((2.0 * p + 1.0) * s.cwiseProduct(L.col(p)) - p * L.col(p - 1)) / (p + 1.0);
  for (int p = 0; p <= degree_; ++p) L.col(p) *= std::sqrt(2.0 * p + 1.0);
  return L;
}

Eigen::MatrixXd EdgeBasis::eval(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const {
  Eigen::VectorXd s(pts.rows());
  for (int i = 0; i < pts.rows(); ++i) s[i] = s_of(pts.row(i).transpose());
  return eval_s(s);
}

Eigen::VectorXd edge_moments(const std::function<double(const Vec2&)>& f, const EdgeBasis& basis,
                             int quad_exactness) {
  const QuadratureRule q = segment_rule(basis.a(), basis.b(), quad_exactness);
  const Eigen::MatrixXd L = basis.eval(q.points);
  Eigen::VectorXd fv(q.size());
  for (int i = 0; i < q.size(); ++i) fv[i] = f(q.points.row(i).transpose());
  return L.transpose() * q.weights.asDiagonal() * fv / basis.length();
}

}  // namespace vemsf
