#pragma once

// Mesh import (plain node/cell list) and legacy-VTK ASCII export.
//
// Text format, '#' starts a comment:
//
//   vertices <N>
//   <x> <y>            (N lines)
//   cells <M>
//   tri <a> <b> <c>    or   quad <a> <b> <c> <d>   (M lines, 0-based ids)
//
// Triangles are reoriented counter-clockwise and rotated so that the longest
// edge becomes the refinement edge. Quads must be parallelograms listed in
// counter-clockwise order. A mesh holds either triangles or quads, not both.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "monofem/mesh.hpp"

namespace monofem {

struct CellField {
  std::string name;
  std::span<const double> values;
};

inline Mesh read_mesh(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream words(line);
    std::string word;
    while (words >> word) {
      tokens.push_back(word);
    }
  }
  std::size_t pos = 0;
  const auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) {
      throw std::invalid_argument("read_mesh: unexpected end of input");
    }
    return tokens[pos++];
  };
  const auto next_number = [&]() {
    const std::string& t = next();
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || !std::isfinite(value)) {
      throw std::invalid_argument("read_mesh: bad number '" + t + "'");
    }
    return value;
  };
  const auto next_count = [&]() {
    const double v = next_number();
    if (v < 0 || v != std::floor(v)) {
      throw std::invalid_argument("read_mesh: bad count");
    }
    return static_cast<std::size_t>(v);
  };

  if (next() != "vertices") {
    throw std::invalid_argument("read_mesh: expected 'vertices'");
  }
  std::vector<Point> vertices(next_count());
  for (auto& p : vertices) {
    p[0] = next_number();
    p[1] = next_number();
  }
  if (next() != "cells") {
    throw std::invalid_argument("read_mesh: expected 'cells'");
  }
  const std::size_t ncells = next_count();
  std::vector<Cell> cells;
  cells.reserve(ncells);
  const auto vertex_id = [&]() {
    const std::size_t id = next_count();
    if (id >= vertices.size()) {
      throw std::invalid_argument("read_mesh: vertex id out of range");
    }
    return static_cast<int>(id);
  };
  for (std::size_t k = 0; k < ncells; ++k) {
    const std::string kind = next();
    Cell c;
    if (kind == "tri") {
      std::array<int, 3> t{vertex_id(), vertex_id(), vertex_id()};
      const auto& P = [&](int i) -> const Point& { return vertices[static_cast<std::size_t>(i)]; };
      if (cross(P(t[0]), P(t[1]), P(t[2])) < 0.0) {
        std::swap(t[1], t[2]);
      }
      // Peak = vertex opposite the longest edge.
      int peak = 0;
      double longest = -1.0;
      for (int i = 0; i < 3; ++i) {
        const double len = distance(P(t[static_cast<std::size_t>((i + 1) % 3)]), P(t[static_cast<std::size_t>((i + 2) % 3)]));
        if (len > longest * (1.0 + 1e-12)) {
          longest = len;
          peak = i;
        }
      }
      c.kind = CellKind::triangle;
      c.v = {t[static_cast<std::size_t>(peak)], t[static_cast<std::size_t>((peak + 1) % 3)],
             t[static_cast<std::size_t>((peak + 2) % 3)], -1};
    } else if (kind == "quad") {
      c.kind = CellKind::quad;
      c.v = {vertex_id(), vertex_id(), vertex_id(), vertex_id()};
      const auto& a = vertices[static_cast<std::size_t>(c.v[0])];
      const auto& b = vertices[static_cast<std::size_t>(c.v[1])];
      const auto& d = vertices[static_cast<std::size_t>(c.v[2])];
      const auto& e = vertices[static_cast<std::size_t>(c.v[3])];
      const double scale = distance(a, d);
      if (std::abs(a[0] + d[0] - b[0] - e[0]) > 1e-10 * scale || std::abs(a[1] + d[1] - b[1] - e[1]) > 1e-10 * scale) {
        throw std::invalid_argument("read_mesh: quad " + std::to_string(k) + " is not a parallelogram");
      }
    } else {
      throw std::invalid_argument("read_mesh: unknown cell kind '" + kind + "'");
    }
    cells.push_back(c);
  }
  if (pos != tokens.size()) {
    throw std::invalid_argument("read_mesh: trailing data");
  }
  bool tri = false;
  bool quad = false;
  for (const Cell& c : cells) {
    (c.kind == CellKind::quad ? quad : tri) = true;
  }
  if (tri && quad) {
    throw std::invalid_argument("read_mesh: mixed triangle/quad meshes are not supported");
  }
  return Mesh(std::move(vertices), std::move(cells), {}, Mesh::new_lineage());
}

inline Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("read_mesh: cannot open " + path);
  }
  return read_mesh(in);
}

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << std::setprecision(17);
  out << "vertices " << mesh.vertex_count() << '\n';
  for (const Point& p : mesh.vertices()) {
    out << p[0] << ' ' << p[1] << '\n';
  }
  out << "cells " << mesh.cell_count() << '\n';
  for (const Cell& c : mesh.cells()) {
    out << (c.kind == CellKind::quad ? "quad" : "tri");
    for (int i = 0; i < c.vertex_count(); ++i) {
      out << ' ' << c.v[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
}

/// Legacy VTK (ASCII) unstructured grid with optional per-cell scalar fields.
inline void write_vtk(std::ostream& out, const Mesh& mesh, std::span<const CellField> fields = {},
                      std::string_view title = "monofem mesh") {
  for (const auto& f : fields) {
    if (f.values.size() != mesh.cell_count()) {
      throw std::invalid_argument("write_vtk: field '" + f.name + "' has wrong length");
    }
  }
  std::size_t connectivity = 0;
  for (const Cell& c : mesh.cells()) {
    connectivity += 1 + static_cast<std::size_t>(c.vertex_count());
  }
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(17);
  out << "POINTS " << mesh.vertex_count() << " double\n";
  for (const Point& p : mesh.vertices()) {
    out << p[0] << ' ' << p[1] << " 0\n";
  }
  out << "CELLS " << mesh.cell_count() << ' ' << connectivity << '\n';
  for (const Cell& c : mesh.cells()) {
    out << c.vertex_count();
    for (int i = 0; i < c.vertex_count(); ++i) {
      out << ' ' << c.v[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.cell_count() << '\n';
  for (const Cell& c : mesh.cells()) {
    out << (c.kind == CellKind::quad ? 9 : 5) << '\n';
  }
  if (!fields.empty()) {
    out << "CELL_DATA " << mesh.cell_count() << '\n';
    for (const auto& f : fields) {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) {
        out << v << '\n';
      }
    }
  }
}

inline void write_vtk_file(const std::string& path, const Mesh& mesh, const std::vector<CellField>& fields = {},
                           const std::string& title = "monofem mesh") {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_vtk: cannot open " + path);
  }
  write_vtk(out, mesh, fields, title);
}

}  // namespace monofem
