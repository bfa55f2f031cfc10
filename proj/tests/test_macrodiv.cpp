#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/zoo.hpp"
#include "vemsf/macrodiv.hpp"

using namespace vemsf;

namespace {

struct MacroFixture {
  std::vector<Vec2> polygon;
  SubTriangulation st;
  CellBasis cell;
  MacroDivSpace sp;

  MacroFixture(const PolygonalMesh& m, int c, int k, MacroMode mode)
      : polygon(m.cell_points(c)),
        st(subtriangulate(m, c)),
        cell(polygon, st, k, BasisKind::ScaledMonomial, 2 * k + 4),
        sp(build_macro_div_space(polygon, st, cell, k, mode, 2 * k + 4)) {}
};

PolygonalMesh hexagon() {
  MeshParams mp;
  return generate_mesh("hexagon-Hi", mp);
}

}  // namespace

TEST_CASE("mode degree tables") {
  for (int k = 1; k <= 4; ++k) {
    CHECK(macro_parent_degree(k, MacroMode::NC) == k - 1);
    CHECK(macro_parent_degree(k, MacroMode::C) == k);
    CHECK(macro_parent_degree(k, MacroMode::CReduced) == k);
    CHECK(macro_div_degree(k, MacroMode::NC) == std::max(k - 2, 0));
    CHECK(macro_div_degree(k, MacroMode::C) == k - 1);
    CHECK(macro_div_degree(k, MacroMode::CReduced) == k - 2);
    CHECK(macro_ring_degree(k, MacroMode::NC) == k);
    CHECK(macro_ring_degree(k, MacroMode::C) == k + 1);
  }
}

TEST_CASE("hand-counted dimensions") {
  SUBCASE("square split in two triangles, k=1 nonconforming") {
    MeshParams mp;
    mp.n = 1;
    const PolygonalMesh m = generate_mesh("uniform-quads", mp);
    const SubTriangulation st = subtriangulate(m, 0, SubTriStrategy::EarClip);
    REQUIRE(st.n_tris() == 2);
    CHECK(macro_dof_count(st, 1, MacroMode::NC) == 4);
  }
  SUBCASE("hexagon fan counts") {
    const PolygonalMesh m = hexagon();
    const SubTriangulation st = subtriangulate(m, 0, SubTriStrategy::CentroidFan);
    REQUIRE(st.n_tris() == 6);
    CHECK(macro_dof_count(st, 1, MacroMode::NC) == 7);
    CHECK(macro_dof_count(st, 1, MacroMode::C) == 19);
    CHECK(macro_dof_count(st, 2, MacroMode::NC) == 19);
  }
  SUBCASE("single triangle k=3 nonconforming is the full quadratic field space") {
    const PolygonalMesh m = build_mesh({{0, 0}, {1, 0}, {0.3, 0.9}}, {{0, 1, 2}});
    const SubTriangulation st = subtriangulate(m, 0, SubTriStrategy::EarClip);
    REQUIRE(st.n_tris() == 1);
    CHECK(macro_dof_count(st, 3, MacroMode::NC) == 12);
  }
}

TEST_CASE("built dimension equals the combinatorial count on varied cells") {
  for (const auto& entry : testsupport::mesh_zoo()) {
    INFO(entry.label);
    const PolygonalMesh& m = entry.mesh;
    for (int k = 1; k <= 3; ++k)
      for (MacroMode mode : {MacroMode::NC, MacroMode::C}) {
        const MacroFixture f(m, 0, k, mode);
        CHECK(f.sp.dim() == macro_dof_count(f.st, k, mode));
        CHECK(f.sp.svd_gap >= 10.0);
        CHECK(f.sp.min_gram_eig > 0.0);
        CHECK(f.sp.min_gram_eig <= 1.0 + 1e-12);
        CHECK(f.sp.div_fit_residual <= 1e-8);
        CHECK(f.sp.trace_fit_residual <= 1e-8);
        CHECK((f.sp.gram - Eigen::MatrixXd::Identity(f.sp.dim(), f.sp.dim())).norm() <=
              1e-12 * f.sp.dim());
      }
  }
}

TEST_CASE("members have one divergence polynomial and one trace polynomial per edge") {
  // hanging-node square: one polygon edge consists of two sub-edges, so the
  // single-trace constraint is active across sub-edges
  MeshParams mp;
  const PolygonalMesh m = generate_mesh("square-hanging-nodes", mp);
  const int k = 2;
  for (MacroMode mode : {MacroMode::NC, MacroMode::C}) {
    CAPTURE(static_cast<int>(mode));
    const MacroFixture f(m, 0, k, mode);
    const int r = macro_parent_degree(k, mode);
    const int s = macro_div_degree(k, mode);

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd c(f.sp.dim());
    for (int i = 0; i < c.size(); ++i) c[i] = U(rng);
    const Eigen::VectorXd cp = f.sp.basis * c;  // parent DoFs

    // divergence alignment: piecewise divergence equals the single
    // cell polynomial from div_rep on every triangle
    const Eigen::VectorXd dglob = f.sp.div_rep * c;
    for (int t = 0; t < f.st.n_tris(); ++t) {
      const auto p = f.st.tri_points(t);
      const QuadratureRule q = triangle_rule(p[0], p[1], p[2], 2 * k + 2);
      const Eigen::VectorXd dv_local =
          tri_monomials(f.sp.parent.frames[t], std::max(r - 1, 0), q.points) *
          f.sp.parent.div_tri(t, cp);
      const Eigen::VectorXd dv_global = f.cell.eval(q.points, s) * dglob;
      CHECK((dv_local - dv_global).cwiseAbs().maxCoeff() <= 1e-9);
    }

    // trace alignment: v.n along each polygon edge is the single Legendre
    // polynomial from trace_rep, across all sub-edges of that edge
    const int nv = static_cast<int>(f.polygon.size());
    for (int e = 0; e < nv; ++e) {
      const Vec2 a = f.polygon[e], b = f.polygon[(e + 1) % nv];
      const Vec2 tg = (b - a).normalized();
      const Vec2 outward(tg.y(), -tg.x());
      const EdgeBasis eb(a, b, r);
      REQUIRE(f.sp.trace_rep[e].rows() == r + 1);
      const Eigen::VectorXd tr = f.sp.trace_rep[e] * c;

      int nsub = 0;
      for (int se = 0; se < f.st.n_edges(); ++se) {
        const auto& sub = f.st.edges[se];
        if (!sub.boundary() || sub.parent != e) continue;
        ++nsub;
        const QuadratureRule q =
            segment_rule(f.st.points[sub.a], f.st.points[sub.b], 2 * r + 2);
        Eigen::VectorXd vx, vy;
        f.sp.eval_tri(sub.t0, q.points, c, vx, vy);
        const Eigen::VectorXd vn = vx * outward.x() + vy * outward.y();
        const Eigen::VectorXd ref = eb.eval(q.points) * tr;
        CHECK((vn - ref).cwiseAbs().maxCoeff() <= 1e-9);
      }
      CHECK(nsub >= 1);
    }
  }
}

TEST_CASE("projection reproduces the advertised polynomial fields") {
  const PolygonalMesh m = hexagon();
  for (int k = 1; k <= 3; ++k)
    for (MacroMode mode : {MacroMode::NC, MacroMode::C}) {
      CAPTURE(k);
      CAPTURE(static_cast<int>(mode));
      const MacroFixture f(m, 0, k, mode);
      const int deg = mode == MacroMode::NC ? k - 1 : k;

      // all monomial fields (x^a y^b, 0) and (0, x^a y^b) with a+b <= deg
      for (int comp = 0; comp < 2; ++comp)
        for (int ax = 0; ax <= deg; ++ax)
          for (int ay = 0; ax + ay <= deg; ++ay) {
            auto g = [&](const Vec2& x) {
              const double v = std::pow(x.x(), ax) * std::pow(x.y(), ay);
              return comp == 0 ? Vec2(v, 0.0) : Vec2(0.0, v);
            };
            const Eigen::VectorXd c = project_field(f.sp, g, 2 * k + 6);

            // compare pointwise on every triangle
            for (int t = 0; t < f.st.n_tris(); ++t) {
              const auto p = f.st.tri_points(t);
              Eigen::Matrix<double, Eigen::Dynamic, 2> pts(3, 2);
              pts.row(0) = ((p[0] + p[1] + p[2]) / 3.0).transpose();
              pts.row(1) = (0.5 * (p[0] + p[1])).transpose();
              pts.row(2) = (0.25 * p[0] + 0.25 * p[1] + 0.5 * p[2]).transpose();
              Eigen::VectorXd vx, vy;
              f.sp.eval_tri(t, pts, c, vx, vy);
              for (int i = 0; i < 3; ++i) {
                const Vec2 want = g(pts.row(i).transpose());
                CHECK(vx[i] == doctest::Approx(want.x()).epsilon(1e-10));
                CHECK(vy[i] == doctest::Approx(want.y()).epsilon(1e-10));
              }
            }
          }

      // zero field projects to zero coefficients
      const Eigen::VectorXd z =
          project_field(f.sp, [](const Vec2&) { return Vec2(0.0, 0.0); }, 2 * k + 4);
      CHECK(z.cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("orthonormal basis makes the norm the coefficient norm") {
  const PolygonalMesh m = hexagon();
  const MacroFixture f(m, 0, 2, MacroMode::NC);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd c(f.sp.dim());
  for (int i = 0; i < c.size(); ++i) c[i] = U(rng);
  CHECK(macro_norm2(f.sp, c) == doctest::Approx(c.squaredNorm()).epsilon(1e-10));

  // against explicit quadrature
  double n2 = 0.0;
  for (int t = 0; t < f.st.n_tris(); ++t) {
    const auto p = f.st.tri_points(t);
    const QuadratureRule q = triangle_rule(p[0], p[1], p[2], 8);
    Eigen::VectorXd vx, vy;
    f.sp.eval_tri(t, q.points, c, vx, vy);
    n2 += (vx.array().square() + vy.array().square()).matrix().dot(q.weights);
  }
  CHECK(n2 == doctest::Approx(c.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("projection error of a smooth field halves with the cell size") {
  const double pi = std::numbers::pi;
  auto gradf = [pi](const Vec2& x) {
    return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  auto rel_error = [&](double h) {
    const Vec2 c0(0.31, 0.42);
    std::vector<Vec2> pts;
    for (int i = 0; i < 6; ++i) {
      const double th = std::numbers::pi * (2.0 * i / 6.0);
      pts.push_back(c0 + h * Vec2(std::cos(th), std::sin(th)));
    }
    const PolygonalMesh m = build_mesh(pts, {{0, 1, 2, 3, 4, 5}});
    const MacroFixture f(m, 0, 1, MacroMode::NC);
    const Eigen::VectorXd coef = project_field(f.sp, gradf, 12);
    double err2 = 0.0, ref2 = 0.0;
    for (int t = 0; t < f.st.n_tris(); ++t) {
      const auto p = f.st.tri_points(t);
      const QuadratureRule q = triangle_rule(p[0], p[1], p[2], 12);
      Eigen::VectorXd vx, vy;
      f.sp.eval_tri(t, q.points, coef, vx, vy);
      for (int i = 0; i < q.size(); ++i) {
        const Vec2 want = gradf(q.points.row(i).transpose());
        err2 += q.weights[i] * (Vec2(vx[i], vy[i]) - want).squaredNorm();
        ref2 += q.weights[i] * want.squaredNorm();
      }
    }
    return std::sqrt(err2 / ref2);
  };
  const double e1 = rel_error(0.1);
  const double e2 = rel_error(0.05);
  CHECK(e1 / e2 > 1.6);
  CHECK(e1 / e2 < 2.5);
}

TEST_CASE("degenerate requests throw") {
  const PolygonalMesh m = hexagon();
  const auto poly = m.cell_points(0);
  const SubTriangulation st = subtriangulate(m, 0);
  const CellBasis cb(poly, st, 1, BasisKind::ScaledMonomial, 6);

  SUBCASE("reduced mode below its divergence floor") {
    CHECK_THROWS_AS(build_macro_div_space(poly, st, cb, 1, MacroMode::CReduced, 6),
                    std::invalid_argument);
  }
  SUBCASE("rank cutoff inside the physical constraint spectrum") {
    const CellBasis cb2(poly, st, 2, BasisKind::ScaledMonomial, 8);
    CHECK_THROWS_AS(build_macro_div_space(poly, st, cb2, 2, MacroMode::NC, 8, 0.8),
                    std::runtime_error);
  }
}
