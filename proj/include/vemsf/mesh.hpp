#pragma once

#include <array>
#include <string>
#include <vector>

#include "vemsf/geometry.hpp"

namespace vemsf {

// Conforming polygonal mesh: cells are counterclockwise vertex loops; every
// edge is shared by at most two cells and carries a fixed unit normal
// (rotation of the lower-index -> higher-index tangent).
struct PolygonalMesh {
  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> cells;

  struct Edge {
    int v0, v1;       // v0 < v1; canonical parametrization runs v0 -> v1
    int cell0 = -1;   // cell whose outward normal equals `normal` (may be absent)
    int cell1 = -1;   // cell whose outward normal is -`normal` (may be absent)
    Vec2 normal;      // fixed unit normal: (t.y, -t.x) for t = unit(v1 - v0)
    double length = 0.0;
    bool boundary() const { return cell0 < 0 || cell1 < 0; }
  };
  std::vector<Edge> edges;

  // per cell: edge index of boundary segment i -> i+1, and +1 if the cell's
  // outward normal on that segment equals edges[e].normal, else -1
  std::vector<std::vector<int>> cell_edges;
  std::vector<std::vector<int>> cell_edge_signs;

  std::vector<bool> vertex_on_boundary;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }

  std::vector<Vec2> cell_points(int c) const {
    std::vector<Vec2> p;
    p.reserve(cells[c].size());
    for (int v : cells[c]) p.push_back(vertices[v]);
    return p;
  }

  double max_diameter() const;
};

// Validates loops (>= 3 distinct vertices, in-range indices, simple polygon,
// nonzero area), flips clockwise loops, builds edge tables, and checks that
// every edge bounds at most two cells. Throws std::invalid_argument with the
// offending cell/edge on violation.
PolygonalMesh build_mesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells);

// --- generator families --------------------------------------------------

struct MeshParams {
  int n = 4;          // subdivisions for grid-backed families
  double hx = 0.25;   // anisotropic-quads spacings
  double hy = 0.25;
  int index = 0;      // hexagon-Hi flattening index
  unsigned seed = 42; // convex-poly jitter seed
};

// Families: uniform-quads, anisotropic-quads, convex-poly, nonconvex-poly,
// hexagon-Hi, quasi-regular-hexagon, square-hanging-nodes.
PolygonalMesh generate_mesh(const std::string& family, const MeshParams& params);

// --- element geometry -----------------------------------------------------

struct ElementGeometry {
  double diameter = 0.0;
  double area = 0.0;
  Vec2 centroid;
  Vec2 center;       // inscribed-ball center x_K (basis scaling point)
  double inradius = 0.0;
  double chunkiness = 0.0;  // diameter / (2 * inradius)
};

ElementGeometry element_geometry(const PolygonalMesh& mesh, int cell);

// --- sub-triangulation ------------------------------------------------------

enum class SubTriStrategy { InballFan, CentroidFan, EarClip };

// Simplicial partition of one polygonal cell. Boundary sub-edges carry the
// cell-outward normal of their parent polygon edge; interior sub-edges the
// lower-index -> higher-index rotation rule.
struct SubTriangulation {
  std::vector<Vec2> points;               // polygon vertices first, then added points
  std::vector<std::array<int, 3>> tris;   // counterclockwise
  std::vector<bool> point_on_boundary;

  struct SubEdge {
    int a, b;             // a < b
    int t0 = -1, t1 = -1; // incident triangles; t1 = -1 on the cell boundary
    int parent = -1;      // polygon-edge position (0..m-1) for boundary sub-edges
    Vec2 normal;
    double length = 0.0;
    bool boundary() const { return t1 < 0; }
  };
  std::vector<SubEdge> edges;

  int n_polygon_vertices = 0;
  double min_angle = 0.0;        // radians, over all triangles
  SubTriStrategy strategy_used = SubTriStrategy::InballFan;

  int n_tris() const { return static_cast<int>(tris.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_interior_edges() const;
  int n_interior_points() const;

  std::array<Vec2, 3> tri_points(int t) const {
    return {points[tris[t][0]], points[tris[t][1]], points[tris[t][2]]};
  }
  double tri_area(int t) const {
    auto p = tri_points(t);
    return triangle_area(p[0], p[1], p[2]);
  }
};

// Fan strategies fall back to ear clipping when the fan point does not see
// every boundary segment; throws if no strategy yields a valid partition.
SubTriangulation subtriangulate(const PolygonalMesh& mesh, int cell,
                                SubTriStrategy strategy = SubTriStrategy::InballFan);

// Uniform refinement: each triangle split into 4 via edge midpoints; parent
// polygon-edge tags are preserved on boundary sub-edges.
SubTriangulation refine_subtriangulation(const SubTriangulation& st);

// --- JSON I/O ---------------------------------------------------------------

PolygonalMesh load_mesh_json(const std::string& path);
void save_mesh_json(const PolygonalMesh& mesh, const std::string& path);

}  // namespace vemsf
