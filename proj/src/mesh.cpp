#include "vemsf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace vemsf {

double PolygonalMesh::max_diameter() const {
  double h = 0.0;
  for (int c = 0; c < n_cells(); ++c) h = std::max(h, polygon_diameter(cell_points(c)));
  return h;
}

PolygonalMesh build_mesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells) {
  PolygonalMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.cells = std::move(cells);
  const int nv = mesh.n_vertices();

  for (int c = 0; c < mesh.n_cells(); ++c) {
    std::vector<int>& loop = mesh.cells[c];
    if (loop.size() < 3)
      throw std::invalid_argument("cell " + std::to_string(c) + ": fewer than 3 vertices");
    std::set<int> seen;
    for (int v : loop) {
      if (v < 0 || v >= nv)
        throw std::invalid_argument("cell " + std::to_string(c) + ": vertex index out of range");
      if (!seen.insert(v).second)
        throw std::invalid_argument("cell " + std::to_string(c) + ": repeated vertex index");
    }
    std::vector<Vec2> pts = mesh.cell_points(c);
    const double diam = polygon_diameter(pts);
    for (size_t i = 0; i < pts.size(); ++i) {
      const Vec2& a = pts[i];
      const Vec2& b = pts[(i + 1) % pts.size()];
      if ((b - a).norm() <= 1e-14 * diam)
        throw std::invalid_argument("cell " + std::to_string(c) + ": zero-length edge");
    }
    double area = polygon_signed_area(pts);
    if (std::abs(area) <= 1e-14 * diam * diam)
      throw std::invalid_argument("cell " + std::to_string(c) + ": degenerate (zero area)");
    if (area < 0.0) {
      std::reverse(loop.begin(), loop.end());
      std::reverse(pts.begin(), pts.end());
    }
    if (polygon_self_intersects(pts))
      throw std::invalid_argument("cell " + std::to_string(c) + ": self-intersecting boundary");
  }

  std::map<std::pair<int, int>, int> edge_index;
  mesh.cell_edges.resize(mesh.n_cells());
  mesh.cell_edge_signs.resize(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const std::vector<int>& loop = mesh.cells[c];
    const int m = static_cast<int>(loop.size());
    mesh.cell_edges[c].resize(m);
    mesh.cell_edge_signs[c].resize(m);
    for (int i = 0; i < m; ++i) {
      const int a = loop[i], b = loop[(i + 1) % m];
      const auto key = std::minmax(a, b);
      auto it = edge_index.find(key);
      if (it == edge_index.end()) {
        PolygonalMesh::Edge e;
        e.v0 = key.first;
        e.v1 = key.second;
        const Vec2 t = (mesh.vertices[e.v1] - mesh.vertices[e.v0]);
        e.length = t.norm();
        e.normal = Vec2(t.y(), -t.x()) / e.length;
        it = edge_index.emplace(key, mesh.n_edges()).first;
        mesh.edges.push_back(e);
      }
      PolygonalMesh::Edge& e = mesh.edges[it->second];
      // traversing v0 -> v1 means the cell's outward normal matches e.normal
      const int sign = (a == e.v0) ? +1 : -1;
      int& slot = (sign > 0) ? e.cell0 : e.cell1;
      if (slot >= 0)
        throw std::invalid_argument("edge " + std::to_string(it->second) +
                                    ": more than two incident cells or inconsistent orientation");
      slot = c;
      mesh.cell_edges[c][i] = it->second;
      mesh.cell_edge_signs[c][i] = sign;
    }
  }

  mesh.vertex_on_boundary.assign(nv, false);
  for (const auto& e : mesh.edges) {
    if (e.cell0 < 0 && e.cell1 < 0) throw std::logic_error("edge with no incident cell");
    if (e.boundary()) {
      mesh.vertex_on_boundary[e.v0] = true;
      mesh.vertex_on_boundary[e.v1] = true;
    }
  }

  return mesh;
}

ElementGeometry element_geometry(const PolygonalMesh& mesh, int cell) {
  const std::vector<Vec2> pts = mesh.cell_points(cell);
  ElementGeometry g;
  g.diameter = polygon_diameter(pts);
  g.area = polygon_signed_area(pts);
  g.centroid = polygon_centroid(pts);
  g.center = inscribed_ball_center(pts, &g.inradius);
  g.chunkiness = g.diameter / (2.0 * g.inradius);
  return g;
}

int SubTriangulation::n_interior_edges() const {
  int n = 0;
  for (const auto& e : edges)
    if (!e.boundary()) ++n;
  return n;
}

int SubTriangulation::n_interior_points() const {
  int n = 0;
  for (size_t i = 0; i < points.size(); ++i)
    if (!point_on_boundary[i]) ++n;
  return n;
}

namespace {

double loop_min_angle(const SubTriangulation& st) {
  double amin = M_PI;
  for (int t = 0; t < st.n_tris(); ++t) {
    auto p = st.tri_points(t);
    for (int i = 0; i < 3; ++i) {
      const Vec2 u = p[(i + 1) % 3] - p[i];
      const Vec2 v = p[(i + 2) % 3] - p[i];
      const double ang =
          std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
      amin = std::min(amin, ang);
    }
  }
  return amin;
}

// builds the sub-edge table; boundary parents are resolved by the caller
void build_subedge_tables(SubTriangulation& st) {
  std::map<std::pair<int, int>, int> index;
  st.edges.clear();
  for (int t = 0; t < st.n_tris(); ++t) {
    for (int i = 0; i < 3; ++i) {
      const int a = st.tris[t][i], b = st.tris[t][(i + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = index.find(key);
      if (it == index.end()) {
        SubTriangulation::SubEdge e;
        e.a = key.first;
        e.b = key.second;
        e.t0 = t;
        const Vec2 tv = st.points[e.b] - st.points[e.a];
        e.length = tv.norm();
        e.normal = Vec2(tv.y(), -tv.x()) / e.length;
        index.emplace(key, st.n_edges());
        st.edges.push_back(e);
      } else {
        SubTriangulation::SubEdge& e = st.edges[it->second];
        if (e.t1 >= 0) throw std::logic_error("sub-edge with more than two triangles");
        e.t1 = t;
      }
    }
  }
}

// assigns parent polygon edges and outward normals to boundary sub-edges of a
// freshly built (unrefined) partition, where boundary sub-edges connect
// consecutive polygon vertices
void assign_parents_unrefined(SubTriangulation& st, const std::vector<Vec2>& poly) {
  const int m = static_cast<int>(poly.size());
  for (auto& e : st.edges) {
    if (!e.boundary()) continue;
    int pos = -1;
    if (e.b == e.a + 1)
      pos = e.a;
    else if (e.a == 0 && e.b == m - 1)
      pos = m - 1;
    if (pos < 0 || e.a >= m || e.b >= m)
      throw std::logic_error("boundary sub-edge does not match a polygon edge");
    e.parent = pos;
    const Vec2 t = poly[(pos + 1) % m] - poly[pos];
    e.normal = Vec2(t.y(), -t.x()) / t.norm();
  }
}

bool try_fan(const std::vector<Vec2>& poly, const Vec2& apex, double area,
             SubTriangulation& st) {
  const int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    const double a = triangle_area(apex, poly[i], poly[(i + 1) % m]);
    if (!(a > 1e-12 * std::abs(area))) return false;
  }
  st.points = poly;
  st.points.push_back(apex);
  st.point_on_boundary.assign(m, true);
  st.point_on_boundary.push_back(false);
  st.tris.clear();
  for (int i = 0; i < m; ++i) st.tris.push_back({m, i, (i + 1) % m});
  return true;
}

bool try_earclip(const std::vector<Vec2>& poly, double area, SubTriangulation& st) {
  const int m = static_cast<int>(poly.size());
  std::vector<int> ring(m);
  for (int i = 0; i < m; ++i) ring[i] = i;

  st.points = poly;
  st.point_on_boundary.assign(m, true);
  st.tris.clear();

  const double eps = 1e-12 * std::abs(area);
  while (ring.size() > 3) {
    const int n = static_cast<int>(ring.size());
    bool clipped = false;
    for (int i = 0; i < n; ++i) {
      const int ip = ring[(i + n - 1) % n], ic = ring[i], in = ring[(i + 1) % n];
      const Vec2 &a = poly[ip], &b = poly[ic], &c = poly[in];
      if (triangle_area(a, b, c) <= eps) continue;  // reflex or flat corner
      bool blocked = false;
      for (int j = 0; j < n && !blocked; ++j) {
        const int iv = ring[j];
        if (iv == ip || iv == ic || iv == in) continue;
        const Vec2& q = poly[iv];
        // inside-or-on test, tolerance relative to the ear's area scale
        if (triangle_area(a, b, q) >= -eps && triangle_area(b, c, q) >= -eps &&
            triangle_area(c, a, q) >= -eps)
          blocked = true;
      }
      if (blocked) continue;
      st.tris.push_back({ip, ic, in});
      ring.erase(ring.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) return false;
  }
  if (triangle_area(poly[ring[0]], poly[ring[1]], poly[ring[2]]) <= eps) return false;
  st.tris.push_back({ring[0], ring[1], ring[2]});
  return true;
}

}  // namespace

SubTriangulation subtriangulate(const PolygonalMesh& mesh, int cell, SubTriStrategy strategy) {
  const std::vector<Vec2> poly = mesh.cell_points(cell);
  const double area = polygon_signed_area(poly);

  SubTriangulation st;
  st.n_polygon_vertices = static_cast<int>(poly.size());

  bool ok = false;
  if (strategy == SubTriStrategy::InballFan) {
    ok = try_fan(poly, inscribed_ball_center(poly), area, st);
    if (ok) st.strategy_used = SubTriStrategy::InballFan;
  } else if (strategy == SubTriStrategy::CentroidFan) {
    ok = try_fan(poly, polygon_centroid(poly), area, st);
    if (ok) st.strategy_used = SubTriStrategy::CentroidFan;
  }
  if (!ok) {
    ok = try_earclip(poly, area, st);
    st.strategy_used = SubTriStrategy::EarClip;
  }
  if (!ok)
    throw std::runtime_error("cell " + std::to_string(cell) +
                             ": no valid sub-triangulation found");

  build_subedge_tables(st);
  assign_parents_unrefined(st, poly);
  st.min_angle = loop_min_angle(st);
  return st;
}

SubTriangulation refine_subtriangulation(const SubTriangulation& st) {
  SubTriangulation out;
  out.n_polygon_vertices = st.n_polygon_vertices;
  out.points = st.points;
  out.point_on_boundary = st.point_on_boundary;

  // midpoint per parent sub-edge
  std::vector<int> mid(st.n_edges());
  for (int e = 0; e < st.n_edges(); ++e) {
    const auto& pe = st.edges[e];
    mid[e] = static_cast<int>(out.points.size());
    out.points.push_back(0.5 * (st.points[pe.a] + st.points[pe.b]));
    out.point_on_boundary.push_back(pe.boundary());
  }

  std::map<std::pair<int, int>, int> edge_of;  // parent lookup for boundary children
  for (int e = 0; e < st.n_edges(); ++e) {
    const auto& pe = st.edges[e];
    if (!pe.boundary()) continue;
    edge_of[std::minmax(pe.a, mid[e])] = e;
    edge_of[std::minmax(mid[e], pe.b)] = e;
  }

  std::map<std::pair<int, int>, int> eidx;  // (a,b) -> edge index in st
  for (int e = 0; e < st.n_edges(); ++e) eidx[{st.edges[e].a, st.edges[e].b}] = e;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    return mid[eidx.at({key.first, key.second})];
  };

  for (const auto& t : st.tris) {
    const int m01 = midpoint(t[0], t[1]), m12 = midpoint(t[1], t[2]), m20 = midpoint(t[2], t[0]);
    out.tris.push_back({t[0], m01, m20});
    out.tris.push_back({m01, t[1], m12});
    out.tris.push_back({m20, m12, t[2]});
    out.tris.push_back({m01, m12, m20});
  }

  build_subedge_tables(out);
  for (auto& e : out.edges) {
    if (!e.boundary()) continue;
    auto it = edge_of.find(std::minmax(e.a, e.b));
    if (it == edge_of.end())
      throw std::logic_error("refined boundary sub-edge lost its parent");
    const auto& pe = st.edges[it->second];
    e.parent = pe.parent;
    e.normal = pe.normal;
  }
  out.min_angle = loop_min_angle(out);
  out.strategy_used = st.strategy_used;
  return out;
}

PolygonalMesh load_mesh_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  nlohmann::json j;
  in >> j;
  std::vector<Vec2> vertices;
  for (const auto& v : j.at("vertices"))
    vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  std::vector<std::vector<int>> cells;
  for (const auto& c : j.at("cells")) cells.push_back(c.get<std::vector<int>>());
  return build_mesh(std::move(vertices), std::move(cells));
}

void save_mesh_json(const PolygonalMesh& mesh, const std::string& path) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec2& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y()});
  j["cells"] = mesh.cells;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace vemsf
