#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>

#include "vemsf/mesh.hpp"

namespace vemsf {

namespace {

PolygonalMesh tensor_quads(int nx, int ny, double lx = 1.0, double ly = 1.0) {
  std::vector<Vec2> v((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      v[j * (nx + 1) + i] = Vec2(lx * i / nx, ly * j / ny);
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = j * (nx + 1) + i;
      cells.push_back({a, a + 1, a + nx + 2, a + nx + 1});
    }
  return build_mesh(std::move(v), std::move(cells));
}

PolygonalMesh hexagon_flat(int index) {
  const double a = std::sqrt(3.0) / std::pow(2.0, index + 1);
  std::vector<Vec2> v = {{1.0, 0.0},  {0.5, a},   {-0.5, a},
                         {-1.0, 0.0}, {-0.5, -a}, {0.5, -a}};
  return build_mesh(std::move(v), {{0, 1, 2, 3, 4, 5}});
}

PolygonalMesh quasi_regular_hexagon() {
  const double a = std::sqrt(3.0) / 2.0;
  const Vec2 off[6] = {{0.052, 0.031},  {-0.043, 0.028}, {0.027, -0.049},
                       {-0.031, -0.022}, {0.044, 0.037},  {-0.025, 0.046}};
  std::vector<Vec2> base = {{1.0, 0.0},  {0.5, a},   {-0.5, a},
                            {-1.0, 0.0}, {-0.5, -a}, {0.5, -a}};
  for (int i = 0; i < 6; ++i) base[i] += off[i];
  return build_mesh(std::move(base), {{0, 1, 2, 3, 4, 5}});
}

PolygonalMesh square_hanging_nodes() {
  std::vector<Vec2> v = {{0, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0.5, 1}, {0, 1}};
  return build_mesh(std::move(v), {{0, 1, 2, 3, 4, 5}});
}

PolygonalMesh chevron_mesh(int n) {
  if (n < 2) return tensor_quads(std::max(1, n), std::max(1, n));
  const double h = 1.0 / n;
  const double kink = 0.3 * h;
  std::vector<Vec2> v((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v[j * (n + 1) + i] = Vec2(i * h, j * h);
  const int kink0 = static_cast<int>(v.size());
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) v.push_back(Vec2((i + 0.5) * h, j * h + kink));
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  auto kid = [n, kink0](int i, int j) { return kink0 + (j - 1) * n + i; };

  std::vector<std::vector<int>> cells;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      std::vector<int> loop;
      loop.push_back(vid(i, j));
      if (j > 0) loop.push_back(kid(i, j));
      loop.push_back(vid(i + 1, j));
      loop.push_back(vid(i + 1, j + 1));
      if (j + 1 < n) loop.push_back(kid(i, j + 1));
      loop.push_back(vid(i, j + 1));
      cells.push_back(std::move(loop));
    }
  }
  return build_mesh(std::move(v), std::move(cells));
}

// --- clipped-Voronoi family ------------------------------------------------

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_double(uint64_t h) { return (h >> 11) * 0x1.0p-53; }

// keep the side of the bisector closer to p
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& p, const Vec2& q) {
  const Vec2 mid = 0.5 * (p + q);
  const Vec2 dir = q - p;
  auto side = [&](const Vec2& x) { return (x - mid).dot(dir); };
  std::vector<Vec2> out;
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double sa = side(a), sb = side(b);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double t = sa / (sa - sb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

PolygonalMesh voronoi_mesh(int n, unsigned seed) {
  const double spacing = 1.0 / n;
  std::vector<Vec2> gens(n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const uint64_t h1 = splitmix64((uint64_t(seed) << 32) ^ (uint64_t(i) * 2654435761u + j));
      const uint64_t h2 = splitmix64(h1 ^ 0xD1B54A32D192ED03ull);
      const double jx = (unit_double(h1) - 0.5) * 0.6 * spacing;
      const double jy = (unit_double(h2) - 0.5) * 0.6 * spacing;
      gens[j * n + i] = Vec2((i + 0.5) * spacing + jx, (j + 0.5) * spacing + jy);
    }
  }

  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  auto cell_of = [&](const std::vector<Vec2>& g, int idx) {
    std::vector<Vec2> poly = square;
    const Vec2 p = g[idx];
    const int gi = std::clamp(int(p.x() * n), 0, n - 1);
    const int gj = std::clamp(int(p.y() * n), 0, n - 1);
    for (int dj = -3; dj <= 3; ++dj) {
      for (int di = -3; di <= 3; ++di) {
        const int ii = gi + di, jj = gj + dj;
        if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
        const int k = jj * n + ii;
        if (k == idx) continue;
        poly = clip_halfplane(poly, p, g[k]);
        if (poly.size() < 3) throw std::logic_error("voronoi cell clipped away");
      }
    }
    return poly;
  };

  for (int lloyd = 0; lloyd < 2; ++lloyd) {
    std::vector<Vec2> next(gens.size());
    for (size_t k = 0; k < gens.size(); ++k)
      next[k] = polygon_centroid(cell_of(gens, static_cast<int>(k)));
    gens = next;
  }

  // weld vertices shared between cells
  const double tol = 1e-9;
  std::map<std::pair<long long, long long>, int> lookup;
  std::vector<Vec2> vertices;
  auto weld = [&](const Vec2& p) {
    const long long qx = llround(p.x() / tol), qy = llround(p.y() / tol);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = lookup.find({qx + dx, qy + dy});
        if (it != lookup.end() && (vertices[it->second] - p).norm() < 4 * tol)
          return it->second;
      }
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(p);
    lookup[{qx, qy}] = id;
    return id;
  };

  std::vector<std::vector<int>> cells;
  for (size_t k = 0; k < gens.size(); ++k) {
    std::vector<int> loop;
    for (const Vec2& p : cell_of(gens, static_cast<int>(k))) {
      const int id = weld(p);
      if (loop.empty() || (loop.back() != id && loop.front() != id)) loop.push_back(id);
    }
    cells.push_back(std::move(loop));
  }
  return build_mesh(std::move(vertices), std::move(cells));
}

}  // namespace

PolygonalMesh generate_mesh(const std::string& family, const MeshParams& params) {
  if (family == "uniform-quads") return tensor_quads(params.n, params.n);
  if (family == "anisotropic-quads") {
    const int nx = std::max(1, static_cast<int>(std::lround(1.0 / params.hx)));
    const int ny = std::max(1, static_cast<int>(std::lround(1.0 / params.hy)));
    return tensor_quads(nx, ny);
  }
  if (family == "hexagon-Hi") return hexagon_flat(params.index);
  if (family == "quasi-regular-hexagon") return quasi_regular_hexagon();
  if (family == "square-hanging-nodes") return square_hanging_nodes();
  if (family == "nonconvex-poly") return chevron_mesh(params.n);
  if (family == "convex-poly") return voronoi_mesh(params.n, params.seed);
  throw std::invalid_argument("unknown mesh family: " + family);
}

}  // namespace vemsf
