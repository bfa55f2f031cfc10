#include "vemsf/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace vemsf {

// Golub-Welsch: nodes/weights from the symmetric Jacobi matrix of the
// three-term recurrence. mu0 = integral of the weight function.
static void golub_welsch(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta_sqrt,
                         double mu0, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  const int n = static_cast<int>(alpha.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = alpha[i];
    if (i + 1 < n) {
      J(i, i + 1) = beta_sqrt[i];
      J(i + 1, i) = beta_sqrt[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd bs(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) bs[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  golub_welsch(alpha, bs, 2.0, nodes, weights);
}

// Gauss-Jacobi with weight (1-x) on [-1,1]
static void gauss_jacobi_10(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::VectorXd alpha(n);
  alpha[0] = -1.0 / 3.0;
  for (int k = 1; k < n; ++k) alpha[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
  Eigen::VectorXd bs(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) bs[k - 1] = std::sqrt(k * (k + 1.0)) / (2.0 * k + 1.0);
  golub_welsch(alpha, bs, 2.0, nodes, weights);
}

namespace {

struct SegRefRule {
  Eigen::VectorXd x, w;  // on [-1,1]
};

const SegRefRule& segment_reference(int exactness) {
  static std::map<int, SegRefRule> cache;
  const int n = std::max(1, (exactness + 2) / 2);
  auto it = cache.find(n);
  if (it == cache.end()) {
    SegRefRule r;
    gauss_legendre(n, r.x, r.w);
    it = cache.emplace(n, std::move(r)).first;
  }
  return it->second;
}

struct TriRefRule {
  // collapsed rule on the unit simplex (0,0),(1,0),(0,1); weights sum to 1/2
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts;
  Eigen::VectorXd w;
};

const TriRefRule& triangle_reference(int exactness) {
  static std::map<int, TriRefRule> cache;
  const int n = std::max(1, (exactness + 2) / 2);
  auto it = cache.find(n);
  if (it == cache.end()) {
    Eigen::VectorXd xu, wu, xv, wv;
    gauss_legendre(n, xu, wu);
    gauss_jacobi_10(n, xv, wv);
    TriRefRule r;
    r.pts.resize(n * n, 2);
    r.w.resize(n * n);
    int m = 0;
    for (int i = 0; i < n; ++i) {
      const double u = 0.5 * (1.0 + xu[i]);  // in [0,1]
      for (int j = 0; j < n; ++j) {
        const double v = 0.5 * (1.0 + xv[j]);  // in [0,1]
        r.pts(m, 0) = u * (1.0 - v);
        r.pts(m, 1) = v;
        // du map 1/2; dv map with weight (1-v): (1/2)^2 applied to wv
        r.w[m] = 0.5 * wu[i] * 0.25 * wv[j];
        ++m;
      }
    }
    it = cache.emplace(n, std::move(r)).first;
  }
  return it->second;
}

}  // namespace

QuadratureRule segment_rule(const Vec2& a, const Vec2& b, int exactness) {
  const SegRefRule& ref = segment_reference(exactness);
  const int n = static_cast<int>(ref.x.size());
  QuadratureRule q;
  q.exactness = 2 * n - 1;
  q.points.resize(n, 2);
  q.weights.resize(n);
  const Vec2 mid = 0.5 * (a + b);
  const Vec2 half = 0.5 * (b - a);
  const double hlen = half.norm();
  for (int i = 0; i < n; ++i) {
    q.points.row(i) = (mid + ref.x[i] * half).transpose();
    q.weights[i] = ref.w[i] * hlen;
  }
  return q;
}

QuadratureRule triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, int exactness) {
  const TriRefRule& ref = triangle_reference(exactness);
  const int n = ref.w.size();
  const double jac = std::abs(cross2(a, b, c));  // |J| = 2*area
  QuadratureRule q;
  q.exactness = exactness;
  q.points.resize(n, 2);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = ref.pts(i, 0), v = ref.pts(i, 1);
    q.points.row(i) = (a + u * (b - a) + v * (c - a)).transpose();
    q.weights[i] = ref.w[i] * jac;
  }
  return q;
}

}  // namespace vemsf
