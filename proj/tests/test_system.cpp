#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support/zoo.hpp"
#include "vemsf/system.hpp"

using namespace vemsf;

namespace {

constexpr double kPi = std::numbers::pi;

double u_sin(const Vec2& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); }
Vec2 grad_sin(const Vec2& x) {
  return Vec2(kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()),
              kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()));
}

}  // namespace

TEST_CASE("global DoF maps cover each element layout with consistent flags") {
  for (const auto& entry : testsupport::mesh_zoo()) {
    INFO(entry.label);
    const PolygonalMesh& m = entry.mesh;
    for (Family fam : {Family::NC, Family::C})
      for (int k = 1; k <= 2; ++k) {
        const GlobalDofMap map = make_dof_map(m, fam, k);
        const int expected =
            (fam == Family::C ? m.n_vertices() : 0) + m.n_edges() * map.edge_block_size +
            m.n_cells() * map.cell_block_size;
        CHECK(map.n_dofs == expected);
        CHECK(map.edge_block_size == (fam == Family::NC ? k : k - 1));
        CHECK(map.cell_block_size == poly_dim(k - 2));
        REQUIRE(static_cast<int>(map.on_boundary.size()) == map.n_dofs);

        // boundary flags follow the geometry
        if (fam == Family::C)
          for (int v = 0; v < m.n_vertices(); ++v)
            CHECK(static_cast<bool>(map.on_boundary[map.vertex_dof(v)]) ==
                  static_cast<bool>(m.vertex_on_boundary[v]));
        for (int e = 0; e < m.n_edges(); ++e)
          for (int i = 0; i < map.edge_block_size; ++i)
            CHECK(static_cast<bool>(map.on_boundary[map.edge_dof(e, i)]) ==
                  m.edges[e].boundary());
        for (int c = 0; c < m.n_cells(); ++c)
          for (int i = 0; i < map.cell_block_size; ++i)
            CHECK_FALSE(static_cast<bool>(map.on_boundary[map.interior_dof(c, i)]));

        // per-cell gather has the local size and stays in range
        const ElementDofLayout lay =
            make_layout(fam, k, static_cast<int>(m.cells[0].size()));
        const std::vector<int> g = map.cell_dofs(m, 0);
        CHECK(static_cast<int>(g.size()) == lay.n_dofs);
        for (int gi : g) {
          CHECK(gi >= 0);
          CHECK(gi < map.n_dofs);
        }
        // interior block sits where the map says
        for (int i = 0; i < map.cell_block_size; ++i)
          CHECK(g[lay.interior_dof(i)] == map.interior_dof(0, i));
      }
  }
}

TEST_CASE("assembled operators are symmetric with the right definiteness") {
  MeshParams mp;
  mp.n = 3;
  mp.seed = 5;
  const PolygonalMesh m = generate_mesh("convex-poly", mp);
  auto fone = [](const Vec2&) { return 1.0; };

  for (Family fam : {Family::NC, Family::C})
    for (MethodKind method : {MethodKind::SF, MethodKind::Standard}) {
      CAPTURE(fam == Family::NC);
      CAPTURE(method == MethodKind::SF);
      const SparseSystem s0 = assemble_global(m, fam, 2, method, 0.0, fone);
      const Eigen::MatrixXd A0 = Eigen::MatrixXd(s0.A);
      CHECK((A0 - A0.transpose()).norm() <= 1e-12 * A0.norm());
      const SpectrumStats st = spectrum_stats(A0);
      CHECK(st.lam_min >= -1e-10 * st.lam_max);  // PSD before boundary conditions

      const SparseSystem s2 = assemble_global(m, fam, 2, method, 2.0, fone);
      const Eigen::MatrixXd A2 = Eigen::MatrixXd(s2.A);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A2);
      CHECK(es.eigenvalues().minCoeff() > 0.0);  // reaction term makes it PD
    }
}

TEST_CASE("zero data gives the zero solution") {
  MeshParams mp;
  const PolygonalMesh m = generate_mesh("square-hanging-nodes", mp);
  auto fzero = [](const Vec2&) { return 0.0; };
  const SparseSystem sys = assemble_global(m, Family::NC, 2, MethodKind::SF, 1.0, fzero);
  const SolveInfo sol = solve_system(sys);
  CHECK(sol.x.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("polynomial solutions are reproduced exactly (patch test)") {
  MeshParams mp;
  mp.n = 3;
  mp.seed = 9;
  const PolygonalMesh m = generate_mesh("convex-poly", mp);
  const double alpha = 1.3;

  struct PatchCase {
    int k;
    std::function<double(const Vec2&)> u;
    std::function<double(const Vec2&)> minus_lap;
  };
  const PatchCase cases[] = {
      {1, [](const Vec2& x) { return 1.0 + 2.0 * x.x() - x.y(); },
       [](const Vec2&) { return 0.0; }},
      {2,
       [](const Vec2& x) {
         return 1.0 + 2.0 * x.x() - x.y() + x.x() * x.x() - x.x() * x.y() +
                0.5 * x.y() * x.y();
       },
       [](const Vec2&) { return -3.0; }},
  };

  for (const PatchCase& pc : cases)
    for (Family fam : {Family::NC, Family::C})
      for (MethodKind method : {MethodKind::SF, MethodKind::Standard}) {
        CAPTURE(pc.k);
        CAPTURE(fam == Family::NC);
        CAPTURE(method == MethodKind::SF);
        auto f = [&](const Vec2& x) { return pc.minus_lap(x) + alpha * pc.u(x); };
        AssemblyOptions opts;
        opts.dirichlet = pc.u;

        const SparseSystem sys = assemble_global(m, fam, pc.k, method, alpha, f, opts);
        const SolveInfo sol = solve_system(sys);
        const Eigen::VectorXd ui = interpolate_global(m, fam, pc.k, pc.u, opts);
        CHECK((sol.x - ui).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + ui.cwiseAbs().maxCoeff()));

        const ErrorNorms err =
            compute_errors(m, fam, pc.k, sol.x,
                           pc.u, [&](const Vec2& x) {
                             return pc.k == 1 ? Vec2(2.0, -1.0)
                                              : Vec2(2.0 + 2.0 * x.x() - x.y(),
                                                     -1.0 - x.x() + x.y());
                           },
                           opts);
        CHECK(err.l2 <= 1e-9);
        CHECK(err.grad <= 1e-9);

        // boundary DoFs carry the Dirichlet data untouched
        for (int i = 0; i < sys.map.n_dofs; ++i)
          if (sys.map.on_boundary[i]) CHECK(sol.x[i] == sys.dirichlet_values[i]);
      }
}

TEST_CASE("iterative and direct solvers agree") {
  MeshParams mp;
  mp.n = 10;
  const PolygonalMesh m = generate_mesh("uniform-quads", mp);
  auto f = [](const Vec2& x) { return (2.0 * kPi * kPi + 1.0) * u_sin(x); };
  const SparseSystem sys = assemble_global(m, Family::NC, 2, MethodKind::SF, 1.0, f);
  CHECK(sys.map.n_dofs == 540);  // 220 edges x 2 + 100 cells x 1

  const SolveInfo direct = solve_system(sys, SolverKind::DenseLDLT);
  const SolveInfo sparse = solve_system(sys, SolverKind::SparseLDLT);
  const SolveInfo cg = solve_system(sys, SolverKind::ConjugateGradient);
  CHECK(cg.iterations > 0);
  const double scale = direct.x.cwiseAbs().maxCoeff();
  CHECK((direct.x - sparse.x).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  CHECK((direct.x - cg.x).cwiseAbs().maxCoeff() <= 1e-7 * scale);
}

TEST_CASE("errors shrink at first order in the gradient on polygonal meshes") {
  auto f = [](const Vec2& x) { return (2.0 * kPi * kPi + 1.0) * u_sin(x); };

  auto run = [&](int n) {
    MeshParams mp;
    mp.n = n;
    mp.seed = 3;
    const PolygonalMesh m = generate_mesh("convex-poly", mp);
    const SparseSystem sys = assemble_global(m, Family::NC, 1, MethodKind::SF, 1.0, f);
    const SolveInfo sol = solve_system(sys);
    return compute_errors(m, Family::NC, 1, sol.x, u_sin, grad_sin);
  };
  const ErrorNorms e4 = run(4);
  const ErrorNorms e8 = run(8);
  const double grad_ratio = e4.grad / e8.grad;
  const double l2_ratio = e4.l2 / e8.l2;
  CHECK(grad_ratio > 1.6);
  CHECK(grad_ratio < 2.6);
  CHECK(l2_ratio > 3.0);
  CHECK(l2_ratio < 5.4);

  // the interpolant converges at the same rates
  auto interp_err = [&](int n) {
    MeshParams mp;
    mp.n = n;
    mp.seed = 3;
    const PolygonalMesh m = generate_mesh("convex-poly", mp);
    const Eigen::VectorXd ui = interpolate_global(m, Family::NC, 1, u_sin);
    return compute_errors(m, Family::NC, 1, ui, u_sin, grad_sin);
  };
  const double il2_ratio = interp_err(4).l2 / interp_err(8).l2;
  CHECK(il2_ratio > 3.0);
  CHECK(il2_ratio < 5.4);
}

TEST_CASE("spectrum statistics on a known matrix") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(1, 1) = 1.0;
  A(2, 2) = 2.0;
  const SpectrumStats st = spectrum_stats(A);
  CHECK(st.n_zero == 1);
  CHECK(st.lam_max == doctest::Approx(2.0));
  CHECK(st.lam_min_nz == doctest::Approx(1.0));
  CHECK(st.cond == doctest::Approx(2.0));
  CHECK(st.lam_min == doctest::Approx(0.0));

  CHECK_THROWS_AS(spectrum_stats(Eigen::MatrixXd::Zero(1, 1)), std::runtime_error);
}
