#include "hho/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hho {

PolyMesh generate(MeshKind kind, int n) {
  if (n < 1) throw MeshError("generate: n must be >= 1");
  const auto N = static_cast<std::size_t>(n);
  std::vector<Point> vertices;
  vertices.reserve((N + 1) * (N + 1));
  for (std::size_t j = 0; j <= N; ++j)
    for (std::size_t i = 0; i <= N; ++i)
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [N](std::size_t i, std::size_t j) { return j * (N + 1) + i; };

  std::vector<std::vector<std::size_t>> loops;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (kind == MeshKind::cartesian) {
        loops.push_back({a, b, c, d});
      } else {
        loops.push_back({a, b, c});
        loops.push_back({a, c, d});
      }
    }
  }
  return PolyMesh::from_polygons(std::move(vertices), std::move(loops));
}

PolyMesh refine_nonconforming(const PolyMesh& mesh, std::span<const std::size_t> marked) {
  std::set<std::size_t> mark(marked.begin(), marked.end());
  for (std::size_t e : mark) {
    if (e >= mesh.num_elements()) throw MeshError("refine: element id out of range", e);
    const std::size_t p = mesh.element(e).vertices.size();
    if (p != 3 && p != 4)
      throw MeshError("refine: element " + std::to_string(e) +
                          " is neither a triangle nor a quadrilateral",
                      e);
  }

  std::vector<Point> vertices = mesh.vertices();
  std::map<std::pair<double, double>, std::size_t> lookup;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    lookup.emplace(std::pair{vertices[i].x(), vertices[i].y()}, i);
  auto vertex_at = [&](const Point& p) {
    auto [it, inserted] = lookup.try_emplace({p.x(), p.y()}, vertices.size());
    if (inserted) vertices.push_back(p);
    return it->second;
  };
  auto midpoint = [&](std::size_t a, std::size_t b) {
    return vertex_at(0.5 * (vertices[a] + vertices[b]));
  };

  std::vector<std::vector<std::size_t>> loops;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& v = mesh.element(e).vertices;
    if (!mark.contains(e)) {
      loops.push_back(v);
      continue;
    }
    if (v.size() == 3) {
      const std::size_t m01 = midpoint(v[0], v[1]);
      const std::size_t m12 = midpoint(v[1], v[2]);
      const std::size_t m20 = midpoint(v[2], v[0]);
      loops.push_back({v[0], m01, m20});
      loops.push_back({m01, v[1], m12});
      loops.push_back({m20, m12, v[2]});
      loops.push_back({m01, m12, m20});
    } else {
      const std::size_t m01 = midpoint(v[0], v[1]);
      const std::size_t m12 = midpoint(v[1], v[2]);
      const std::size_t m23 = midpoint(v[2], v[3]);
      const std::size_t m30 = midpoint(v[3], v[0]);
      const Point c = 0.25 * ((vertices[v[0]] + vertices[v[1]]) + (vertices[v[2]] + vertices[v[3]]));
      const std::size_t cc = vertex_at(c);
      loops.push_back({v[0], m01, cc, m30});
      loops.push_back({m01, v[1], m12, cc});
      loops.push_back({cc, m12, v[2], m23});
      loops.push_back({m30, cc, m23, v[3]});
    }
  }
  return PolyMesh::from_polygons(std::move(vertices), std::move(loops));
}

namespace {

struct CartesianLayout {
  Point lo;
  double cell = 0.0;
  int nx = 0, ny = 0;
  std::map<std::pair<int, int>, std::size_t> node;  // grid node -> vertex id
};

CartesianLayout detect_cartesian(const PolyMesh& fine) {
  CartesianLayout L;
  if (fine.has_hanging_nodes()) throw MeshError("agglomerate: fine mesh must be conforming");
  const Element& e0 = fine.element(0);
  if (e0.vertices.size() != 4) throw MeshError("agglomerate: fine mesh must be Cartesian");
  L.cell = std::sqrt(e0.area);
  Point lo = fine.vertex(0), hi = fine.vertex(0);
  for (const Point& p : fine.vertices()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  L.lo = lo;
  L.nx = static_cast<int>(std::lround((hi.x() - lo.x()) / L.cell));
  L.ny = static_cast<int>(std::lround((hi.y() - lo.y()) / L.cell));
  const double tol = 1e-9 * L.cell;
  for (const Element& el : fine.elements()) {
    if (el.vertices.size() != 4 || std::abs(el.area - L.cell * L.cell) > 1e-9 * el.area)
      throw MeshError("agglomerate: fine mesh must be a uniform Cartesian mesh");
    for (std::size_t k = 0; k < 4; ++k) {
      const Point d = fine.vertex(el.vertices[(k + 1) % 4]) - fine.vertex(el.vertices[k]);
      if (std::abs(d.x()) > tol && std::abs(d.y()) > tol)
        throw MeshError("agglomerate: fine mesh cells must be axis-aligned");
    }
  }
  if (static_cast<std::size_t>(L.nx) * static_cast<std::size_t>(L.ny) != fine.num_elements())
    throw MeshError("agglomerate: fine mesh is not a full Cartesian grid");
  for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
    const Point r = (fine.vertex(v) - lo) / L.cell;
    const int i = static_cast<int>(std::lround(r.x()));
    const int j = static_cast<int>(std::lround(r.y()));
    if (std::abs(r.x() - i) > 1e-9 || std::abs(r.y() - j) > 1e-9)
      throw MeshError("agglomerate: vertex off the Cartesian grid");
    L.node.emplace(std::pair{i, j}, v);
  }
  return L;
}

}  // namespace

PolyMesh agglomerate(const PolyMesh& fine, std::span<const AgglomerationBlock> blocks) {
  const CartesianLayout L = detect_cartesian(fine);
  std::vector<int> owner(static_cast<std::size_t>(L.nx * L.ny), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& B = blocks[b];
    if (B.ni < 1 || B.nj < 1 || B.i0 < 0 || B.j0 < 0 || B.i0 + B.ni > L.nx || B.j0 + B.nj > L.ny)
      throw MeshError("agglomerate: block " + std::to_string(b) + " incompatible with the fine grid");
    for (int j = B.j0; j < B.j0 + B.nj; ++j)
      for (int i = B.i0; i < B.i0 + B.ni; ++i) {
        int& o = owner[static_cast<std::size_t>(j * L.nx + i)];
        if (o != -1) throw MeshError("agglomerate: blocks overlap");
        o = static_cast<int>(b);
      }
  }

  auto node = [&](int i, int j) {
    const auto it = L.node.find({i, j});
    if (it == L.node.end()) throw MeshError("agglomerate: missing grid node");
    return it->second;
  };

  std::vector<std::vector<std::size_t>> loops;
  for (int j = 0; j < L.ny; ++j) {
    for (int i = 0; i < L.nx; ++i) {
      const int o = owner[static_cast<std::size_t>(j * L.nx + i)];
      int i0 = i, j0 = j, ni = 1, nj = 1;
      if (o >= 0) {
        const auto& B = blocks[static_cast<std::size_t>(o)];
        if (B.i0 != i || B.j0 != j) continue;
        ni = B.ni;
        nj = B.nj;
      }
      loops.push_back({node(i0, j0), node(i0 + ni, j0), node(i0 + ni, j0 + nj), node(i0, j0 + nj)});
    }
  }

  // Keep only vertices used as polygon corners, in their original order.
  std::vector<std::size_t> remap(fine.num_vertices(), npos);
  for (const auto& loop : loops)
    for (std::size_t v : loop) remap[v] = 0;
  std::vector<Point> vertices;
  for (std::size_t v = 0; v < remap.size(); ++v) {
    if (remap[v] == npos) continue;
    remap[v] = vertices.size();
    vertices.push_back(fine.vertex(v));
  }
  for (auto& loop : loops)
    for (std::size_t& v : loop) v = remap[v];
  return PolyMesh::from_polygons(std::move(vertices), std::move(loops));
}

PolyMesh agglomerate(const PolyMesh& fine, int block) {
  const CartesianLayout L = detect_cartesian(fine);
  if (block < 1 || L.nx % block != 0 || L.ny % block != 0)
    throw MeshError("agglomerate: block size " + std::to_string(block) +
                    " does not divide the fine grid");
  std::vector<AgglomerationBlock> blocks;
  for (int j = 0; j < L.ny; j += block)
    for (int i = 0; i < L.nx; i += block) blocks.push_back({i, j, block, block});
  return agglomerate(fine, blocks);
}

PolyMesh generate_nonconforming(int n, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw MeshError("nonconforming: fraction must lie in [0,1]");
  const PolyMesh base = generate(MeshKind::cartesian, n);
  std::vector<std::size_t> marked;
  for (std::size_t e = 0; e < base.num_elements(); ++e)
    if (base.element(e).centroid.x() < fraction) marked.push_back(e);
  return refine_nonconforming(base, marked);
}

PolyMesh generate_agglomerated(int n, int block) {
  if (block < 1 || n % block != 0)
    throw MeshError("agglomerated: block size must divide n");
  const PolyMesh fine = generate(MeshKind::cartesian, n);
  std::vector<AgglomerationBlock> blocks;
  const int nb = n / block;
  for (int bj = 0; bj < nb; ++bj)
    for (int bi = 0; bi < nb; ++bi)
      if ((bi + bj) % 2 == 0) blocks.push_back({bi * block, bj * block, block, block});
  return agglomerate(fine, blocks);
}

}  // namespace hho
