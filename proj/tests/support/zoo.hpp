#pragma once

#include <string>
#include <vector>

#include "vemsf/mesh.hpp"

// Small cross-section of every generator family, used to sweep invariants.

namespace testsupport {

struct ZooEntry {
  std::string label;
  vemsf::PolygonalMesh mesh;
};

inline std::vector<ZooEntry> mesh_zoo() {
  using vemsf::MeshParams;
  std::vector<ZooEntry> zoo;

  MeshParams quads;
  quads.n = 2;
  zoo.push_back({"uniform-quads(n=2)", vemsf::generate_mesh("uniform-quads", quads)});

  MeshParams aniso;
  aniso.hx = 0.5;
  aniso.hy = 0.25;
  zoo.push_back({"anisotropic-quads(2x4)", vemsf::generate_mesh("anisotropic-quads", aniso)});

  MeshParams voro;
  voro.n = 3;
  voro.seed = 7;
  zoo.push_back({"convex-poly(n=3)", vemsf::generate_mesh("convex-poly", voro)});

  MeshParams chev;
  chev.n = 2;
  zoo.push_back({"nonconvex-poly(n=2)", vemsf::generate_mesh("nonconvex-poly", chev)});

  MeshParams hex;
  hex.index = 0;
  zoo.push_back({"hexagon-H0", vemsf::generate_mesh("hexagon-Hi", hex)});
  hex.index = 3;
  zoo.push_back({"hexagon-H3", vemsf::generate_mesh("hexagon-Hi", hex)});

  zoo.push_back({"quasi-regular-hexagon",
                 vemsf::generate_mesh("quasi-regular-hexagon", MeshParams{})});
  zoo.push_back({"square-hanging-nodes",
                 vemsf::generate_mesh("square-hanging-nodes", MeshParams{})});
  return zoo;
}

}  // namespace testsupport
