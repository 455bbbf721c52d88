#pragma once

// Conforming 2D meshes of triangles or parallelogram quads.
//
// Triangles are stored counter-clockwise with the newest vertex ("peak") first,
// so the refinement edge is always the local edge v[1]-v[2]. Bisection of a
// triangle (a, b, c) at the midpoint m of b-c yields the children (m, a, b) and
// (m, c, a); both again carry their peak first.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "monofem/core.hpp"

namespace monofem {

enum class CellKind : std::uint8_t { triangle = 3, quad = 4 };

struct Cell {
  std::array<int, 4> v{-1, -1, -1, -1};
  CellKind kind = CellKind::triangle;
  int parent = -1;  // index into Mesh::ancestors(), -1 for root cells
  int generation = 0;
  std::uint8_t child_slot = 0;

  int vertex_count() const { return static_cast<int>(kind); }
};

/// A cell that has been split; kept so that sibling pairs can be merged again.
struct Ancestor {
  int parent = -1;
  int generation = 0;
  std::uint8_t child_slot = 0;
  CellKind kind = CellKind::triangle;
};

struct Edge {
  std::array<int, 2> v{};                // global vertex ids, v[0] < v[1]
  std::array<int, 2> cell{-1, -1};       // cell[1] == -1 on the boundary
  std::array<int, 2> local{-1, -1};      // local edge index inside each cell
  bool boundary() const { return cell[1] < 0; }
};

struct Rectangle {
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};
};

class Mesh {
public:
  Mesh() = default;

  Mesh(std::vector<Point> vertices, std::vector<Cell> cells, std::vector<Ancestor> ancestors,
       std::uint64_t lineage)
      : vertices_(std::move(vertices)),
        cells_(std::move(cells)),
        ancestors_(std::move(ancestors)),
        lineage_(lineage) {
    finalize();
  }

  /// Fresh lineage id for meshes that do not descend from another one.
  static std::uint64_t new_lineage() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Cell> cells() const { return cells_; }
  std::span<const Ancestor> ancestors() const { return ancestors_; }
  std::span<const Edge> edges() const { return edges_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t cell_count() const { return cells_.size(); }

  const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Cell& cell(std::size_t k) const { return cells_[k]; }

  /// Global edge id of local edge e of cell k; local edge e joins v[e] and v[e+1].
  int cell_edge(std::size_t k, int e) const { return cell_edges_[k][static_cast<std::size_t>(e)]; }
  bool boundary_vertex(int i) const { return boundary_vertex_[static_cast<std::size_t>(i)]; }
  bool boundary_edge(std::size_t k, int e) const { return edges_[static_cast<std::size_t>(cell_edge(k, e))].boundary(); }

  /// Largest vertex-pair distance h_K.
  double diameter(std::size_t k) const { return diameter_[k]; }
  double area(std::size_t k) const { return area_[k]; }
  double max_diameter() const {
    return diameter_.empty() ? 0.0 : *std::max_element(diameter_.begin(), diameter_.end());
  }

  std::uint64_t lineage() const { return lineage_; }
  bool has_quads() const { return quad_count_ > 0; }
  bool has_triangles() const { return quad_count_ < cells_.size(); }

  /// Centroid of cell k.
  Point centroid(std::size_t k) const {
    const Cell& c = cells_[k];
    Point p{0.0, 0.0};
    for (int i = 0; i < c.vertex_count(); ++i) {
      p[0] += vertex(c.v[static_cast<std::size_t>(i)])[0];
      p[1] += vertex(c.v[static_cast<std::size_t>(i)])[1];
    }
    p[0] /= c.vertex_count();
    p[1] /= c.vertex_count();
    return p;
  }

  /// Smallest interior angle over all cells, in degrees.
  double min_angle_degrees() const {
    double result = 180.0;
    for (const Cell& c : cells_) {
      const int nv = c.vertex_count();
      for (int i = 0; i < nv; ++i) {
        const Point& p = vertex(c.v[static_cast<std::size_t>(i)]);
        const Point& a = vertex(c.v[static_cast<std::size_t>((i + 1) % nv)]);
        const Point& b = vertex(c.v[static_cast<std::size_t>((i + nv - 1) % nv)]);
        const double ux = a[0] - p[0], uy = a[1] - p[1];
        const double wx = b[0] - p[0], wy = b[1] - p[1];
        const double angle = std::atan2(std::abs(ux * wy - uy * wx), ux * wx + uy * wy);
        result = std::min(result, angle * 180.0 / std::numbers::pi);
      }
    }
    return result;
  }

private:
  void finalize() {
    if (cells_.empty()) {
      throw std::invalid_argument("mesh: no cells");
    }
    const std::size_t nc = cells_.size();
    area_.assign(nc, 0.0);
    diameter_.assign(nc, 0.0);
    cell_edges_.assign(nc, {-1, -1, -1, -1});
    quad_count_ = 0;

    std::map<std::pair<int, int>, int> edge_index;
    edges_.clear();
    for (std::size_t k = 0; k < nc; ++k) {
      const Cell& c = cells_[k];
      const int nv = c.vertex_count();
      if (c.kind == CellKind::quad) {
        ++quad_count_;
      }
      for (int i = 0; i < nv; ++i) {
        const int vi = c.v[static_cast<std::size_t>(i)];
        if (vi < 0 || static_cast<std::size_t>(vi) >= vertices_.size()) {
          throw std::invalid_argument("mesh: cell " + std::to_string(k) + " references a missing vertex");
        }
      }
      double twice_area = 0.0;
      for (int i = 1; i + 1 < nv; ++i) {
        twice_area += cross(vertex(c.v[0]), vertex(c.v[static_cast<std::size_t>(i)]),
                            vertex(c.v[static_cast<std::size_t>(i + 1)]));
      }
      area_[k] = 0.5 * twice_area;
      if (!(area_[k] > 0.0)) {
        throw std::invalid_argument("mesh: cell " + std::to_string(k) + " has non-positive area");
      }
      double h = 0.0;
      for (int i = 0; i < nv; ++i) {
        for (int j = i + 1; j < nv; ++j) {
          h = std::max(h, distance(vertex(c.v[static_cast<std::size_t>(i)]), vertex(c.v[static_cast<std::size_t>(j)])));
        }
      }
      diameter_[k] = h;

      for (int e = 0; e < nv; ++e) {
        const int a = c.v[static_cast<std::size_t>(e)];
        const int b = c.v[static_cast<std::size_t>((e + 1) % nv)];
        const auto key = std::minmax(a, b);
        auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, static_cast<int>(edges_.size()));
        if (inserted) {
          Edge edge;
          edge.v = {key.first, key.second};
          edge.cell[0] = static_cast<int>(k);
          edge.local[0] = e;
          edges_.push_back(edge);
        } else {
          Edge& edge = edges_[static_cast<std::size_t>(it->second)];
          if (edge.cell[1] >= 0) {
            throw std::invalid_argument("mesh: edge shared by more than two cells");
          }
          edge.cell[1] = static_cast<int>(k);
          edge.local[1] = e;
        }
        cell_edges_[k][static_cast<std::size_t>(e)] = it->second;
      }
    }
    boundary_vertex_.assign(vertices_.size(), false);
    for (const Edge& edge : edges_) {
      if (edge.boundary()) {
        boundary_vertex_[static_cast<std::size_t>(edge.v[0])] = true;
        boundary_vertex_[static_cast<std::size_t>(edge.v[1])] = true;
      }
    }
  }

  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<Ancestor> ancestors_;
  std::uint64_t lineage_ = 0;

  std::vector<Edge> edges_;
  std::vector<std::array<int, 4>> cell_edges_;
  std::vector<bool> boundary_vertex_;
  std::vector<double> area_;
  std::vector<double> diameter_;
  std::size_t quad_count_ = 0;
};

namespace detail {

inline void check_grid_args(int n, const Rectangle& domain) {
  if (n < 1) {
    throw std::invalid_argument("uniform mesh: subdivision count must be >= 1");
  }
  if (!(domain.hi[0] > domain.lo[0]) || !(domain.hi[1] > domain.lo[1])) {
    throw std::invalid_argument("uniform mesh: degenerate rectangle");
  }
}

inline std::vector<Point> grid_vertices(int n, const Rectangle& domain) {
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double x = domain.lo[0] + (domain.hi[0] - domain.lo[0]) * i / n;
      const double y = domain.lo[1] + (domain.hi[1] - domain.lo[1]) * j / n;
      vertices.push_back({x, y});
    }
  }
  return vertices;
}

inline std::vector<int> sorted_unique_ids(std::span<const int> ids, std::size_t cell_count) {
  std::vector<int> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (!out.empty() && (out.front() < 0 || static_cast<std::size_t>(out.back()) >= cell_count)) {
    throw std::invalid_argument("mesh: marked cell id out of range");
  }
  return out;
}

}  // namespace detail

/// n x n axis-aligned quads; vertices are numbered row by row.
inline Mesh uniform_quad_mesh(int n, const Rectangle& domain = {}) {
  detail::check_grid_args(n, domain);
  auto vertices = detail::grid_vertices(n, domain);
  const auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      Cell c;
      c.kind = CellKind::quad;
      c.v = {id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)};
      cells.push_back(c);
    }
  }
  return Mesh(std::move(vertices), std::move(cells), {}, Mesh::new_lineage());
}

/// n x n grid with every square split along its (0,0)-(1,1) diagonal; the
/// diagonal is the refinement edge of both halves.
inline Mesh uniform_tri_mesh(int n, const Rectangle& domain = {}) {
  detail::check_grid_args(n, domain);
  auto vertices = detail::grid_vertices(n, domain);
  const auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      Cell lower;
      lower.v = {id(i + 1, j), id(i + 1, j + 1), id(i, j), -1};
      Cell upper;
      upper.v = {id(i, j + 1), id(i, j), id(i + 1, j + 1), -1};
      cells.push_back(lower);
      cells.push_back(upper);
    }
  }
  return Mesh(std::move(vertices), std::move(cells), {}, Mesh::new_lineage());
}

namespace detail {

class MidpointTable {
public:
  explicit MidpointTable(std::vector<Point>& vertices) : vertices_(vertices) {}

  int operator()(int a, int b) {
    const auto key = std::minmax(a, b);
    auto [it, inserted] = table_.try_emplace({key.first, key.second}, -1);
    if (inserted) {
      it->second = static_cast<int>(vertices_.size());
      vertices_.push_back(midpoint(vertices_[static_cast<std::size_t>(a)], vertices_[static_cast<std::size_t>(b)]));
    }
    return it->second;
  }

private:
  std::vector<Point>& vertices_;
  std::map<std::pair<int, int>, int> table_;
};

using EdgeKey = std::pair<int, int>;

inline EdgeKey edge_key(int a, int b) {
  const auto key = std::minmax(a, b);
  return {key.first, key.second};
}

inline Mesh refine_quads_uniformly(const Mesh& mesh) {
  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<Ancestor> ancestors(mesh.ancestors().begin(), mesh.ancestors().end());
  std::vector<Cell> cells;
  cells.reserve(4 * mesh.cell_count());
  MidpointTable mid(vertices);
  for (const Cell& c : mesh.cells()) {
    const int self = static_cast<int>(ancestors.size());
    ancestors.push_back({c.parent, c.generation, c.child_slot, c.kind});
    const auto [v0, v1, v2, v3] = c.v;
    const int m01 = mid(v0, v1);
    const int m12 = mid(v1, v2);
    const int m23 = mid(v2, v3);
    const int m30 = mid(v3, v0);
    const int center = static_cast<int>(vertices.size());
    vertices.push_back(midpoint(vertices[static_cast<std::size_t>(v0)], vertices[static_cast<std::size_t>(v2)]));
    const std::array<std::array<int, 4>, 4> children{{
        {v0, m01, center, m30},
        {m01, v1, m12, center},
        {center, m12, v2, m23},
        {m30, center, m23, v3},
    }};
    for (std::uint8_t s = 0; s < 4; ++s) {
      Cell child;
      child.kind = CellKind::quad;
      child.v = children[s];
      child.parent = self;
      child.generation = c.generation + 1;
      child.child_slot = s;
      cells.push_back(child);
    }
  }
  return Mesh(std::move(vertices), std::move(cells), std::move(ancestors), mesh.lineage());
}

}  // namespace detail

/// Newest-vertex bisection of the marked triangles plus conforming closure. For
/// quad meshes only uniform quadrisection (every cell marked) is supported.
inline Mesh refine(const Mesh& mesh, std::span<const int> marked) {
  const auto ids = detail::sorted_unique_ids(marked, mesh.cell_count());
  if (ids.empty()) {
    return mesh;
  }
  if (mesh.has_quads()) {
    if (mesh.has_triangles() || ids.size() != mesh.cell_count()) {
      throw std::invalid_argument("refine: quad meshes support uniform refinement only");
    }
    return detail::refine_quads_uniformly(mesh);
  }

  using detail::edge_key;
  std::map<detail::EdgeKey, bool> bisect;
  for (int k : ids) {
    const Cell& c = mesh.cell(static_cast<std::size_t>(k));
    bisect[edge_key(c.v[1], c.v[2])] = true;
  }
  // Closure: a cell with any edge to be split must also split its refinement edge.
  for (bool changed = true; changed;) {
    changed = false;
    for (const Cell& c : mesh.cells()) {
      const auto ref = edge_key(c.v[1], c.v[2]);
      if (bisect.contains(ref)) {
        continue;
      }
      if (bisect.contains(edge_key(c.v[0], c.v[1])) || bisect.contains(edge_key(c.v[2], c.v[0]))) {
        bisect[ref] = true;
        changed = true;
      }
    }
  }

  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<Ancestor> ancestors(mesh.ancestors().begin(), mesh.ancestors().end());
  std::vector<Cell> cells;
  cells.reserve(2 * mesh.cell_count());
  detail::MidpointTable mid(vertices);

  // Depth-first bisection keeps children in a deterministic order.
  auto split = [&](auto&& self, const Cell& c) -> void {
    if (!bisect.contains(edge_key(c.v[1], c.v[2]))) {
      cells.push_back(c);
      return;
    }
    const int m = mid(c.v[1], c.v[2]);
    const int parent = static_cast<int>(ancestors.size());
    ancestors.push_back({c.parent, c.generation, c.child_slot, c.kind});
    Cell first;
    first.v = {m, c.v[0], c.v[1], -1};
    first.parent = parent;
    first.generation = c.generation + 1;
    first.child_slot = 0;
    Cell second;
    second.v = {m, c.v[2], c.v[0], -1};
    second.parent = parent;
    second.generation = c.generation + 1;
    second.child_slot = 1;
    self(self, first);
    self(self, second);
  };
  for (const Cell& c : mesh.cells()) {
    split(split, c);
  }
  return Mesh(std::move(vertices), std::move(cells), std::move(ancestors), mesh.lineage());
}

inline Mesh refine_all(const Mesh& mesh) {
  std::vector<int> all(mesh.cell_count());
  for (std::size_t k = 0; k < all.size(); ++k) {
    all[k] = static_cast<int>(k);
  }
  return refine(mesh, all);
}

struct DerefineResult {
  Mesh mesh;
  /// Old cell id -> new cell id; merged siblings map to their restored parent.
  std::vector<int> cell_map;
  std::size_t merged_pairs = 0;
  /// Marked cells that could not be coarsened.
  std::size_t skipped = 0;
};

/// Merges bisection siblings back into their parent. A newest vertex is removed
/// only when every cell around it is marked and the cells form complete sibling
/// pairs (2 cells on the boundary, 4 inside); anything else is skipped.
inline DerefineResult derefine_with_map(const Mesh& mesh, std::span<const int> marked) {
  const auto ids = detail::sorted_unique_ids(marked, mesh.cell_count());
  DerefineResult result;
  result.cell_map.resize(mesh.cell_count());
  for (std::size_t k = 0; k < mesh.cell_count(); ++k) {
    result.cell_map[k] = static_cast<int>(k);
  }
  if (ids.empty() || mesh.has_quads()) {
    result.skipped = ids.size();
    result.mesh = mesh;
    return result;
  }

  std::vector<bool> is_marked(mesh.cell_count(), false);
  for (int k : ids) {
    is_marked[static_cast<std::size_t>(k)] = true;
  }
  std::vector<std::vector<int>> patch(mesh.vertex_count());
  for (std::size_t k = 0; k < mesh.cell_count(); ++k) {
    for (int i = 0; i < 3; ++i) {
      patch[static_cast<std::size_t>(mesh.cell(k).v[static_cast<std::size_t>(i)])].push_back(static_cast<int>(k));
    }
  }

  // restored[k] holds the parent cell replacing the pair whose slot-0 child is k.
  std::vector<int> owner(mesh.cell_count(), -1);
  std::vector<Cell> restored_cell(mesh.cell_count());
  std::vector<bool> drop_vertex(mesh.vertex_count(), false);
  std::size_t consumed = 0;
  for (std::size_t m = 0; m < mesh.vertex_count(); ++m) {
    const auto& around = patch[m];
    if (around.size() != 2 && around.size() != 4) {
      continue;
    }
    bool ok = true;
    for (int k : around) {
      const Cell& c = mesh.cell(static_cast<std::size_t>(k));
      ok = ok && is_marked[static_cast<std::size_t>(k)] && c.v[0] == static_cast<int>(m) && c.parent >= 0;
    }
    if (!ok) {
      continue;
    }
    // Pair the cells by parent; each parent must contribute both slots.
    std::map<int, std::array<int, 2>> pairs;
    for (int k : around) {
      const Cell& c = mesh.cell(static_cast<std::size_t>(k));
      auto [it, inserted] = pairs.try_emplace(c.parent, std::array<int, 2>{-1, -1});
      it->second[c.child_slot] = k;
    }
    if (pairs.size() * 2 != around.size()) {
      continue;
    }
    if (around.size() == 2 && !mesh.boundary_vertex(static_cast<int>(m))) {
      continue;
    }
    for (const auto& [parent, kids] : pairs) {
      ok = ok && kids[0] >= 0 && kids[1] >= 0;
      if (ok) {
        const Cell& first = mesh.cell(static_cast<std::size_t>(kids[0]));
        const Cell& second = mesh.cell(static_cast<std::size_t>(kids[1]));
        ok = first.v[1] == second.v[2];
      }
    }
    if (!ok) {
      continue;
    }
    for (const auto& [parent, kids] : pairs) {
      const Cell& first = mesh.cell(static_cast<std::size_t>(kids[0]));
      const Cell& second = mesh.cell(static_cast<std::size_t>(kids[1]));
      const Ancestor& anc = mesh.ancestors()[static_cast<std::size_t>(parent)];
      Cell merged;
      merged.v = {first.v[1], first.v[2], second.v[1], -1};
      merged.parent = anc.parent;
      merged.generation = anc.generation;
      merged.child_slot = anc.child_slot;
      const int keep = std::min(kids[0], kids[1]);
      const int gone = std::max(kids[0], kids[1]);
      restored_cell[static_cast<std::size_t>(keep)] = merged;
      owner[static_cast<std::size_t>(keep)] = keep;
      owner[static_cast<std::size_t>(gone)] = keep;
      ++result.merged_pairs;
      consumed += 2;
    }
    drop_vertex[m] = true;
  }
  result.skipped = ids.size() - consumed;
  if (result.merged_pairs == 0) {
    result.mesh = mesh;
    return result;
  }

  std::vector<int> vertex_map(mesh.vertex_count(), -1);
  std::vector<Point> vertices;
  vertices.reserve(mesh.vertex_count());
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    if (!drop_vertex[i]) {
      vertex_map[i] = static_cast<int>(vertices.size());
      vertices.push_back(mesh.vertex(static_cast<int>(i)));
    }
  }
  std::vector<Cell> cells;
  cells.reserve(mesh.cell_count());
  std::vector<int> new_index(mesh.cell_count(), -1);
  for (std::size_t k = 0; k < mesh.cell_count(); ++k) {
    if (owner[k] >= 0 && owner[k] != static_cast<int>(k)) {
      continue;
    }
    Cell c = owner[k] >= 0 ? restored_cell[k] : mesh.cell(k);
    for (int i = 0; i < 3; ++i) {
      c.v[static_cast<std::size_t>(i)] = vertex_map[static_cast<std::size_t>(c.v[static_cast<std::size_t>(i)])];
    }
    new_index[k] = static_cast<int>(cells.size());
    cells.push_back(c);
  }
  for (std::size_t k = 0; k < mesh.cell_count(); ++k) {
    result.cell_map[k] = owner[k] >= 0 ? new_index[static_cast<std::size_t>(owner[k])] : new_index[k];
  }
  std::vector<Ancestor> ancestors(mesh.ancestors().begin(), mesh.ancestors().end());
  result.mesh = Mesh(std::move(vertices), std::move(cells), std::move(ancestors), mesh.lineage());
  return result;
}

inline Mesh derefine(const Mesh& mesh, std::span<const int> marked) {
  return derefine_with_map(mesh, marked).mesh;
}

}  // namespace monofem
