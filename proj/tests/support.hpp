#pragma once

// Helpers shared by the unit tests: seeded generators and brute-force oracles
// that work from raw vertex/cell arrays rather than the library's own tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "monofem/monofem.hpp"

namespace testing_support {

using monofem::Mesh;
using monofem::Point;

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  monofem::Vector vector(std::size_t n, double a = -1.0, double b = 1.0) {
    monofem::Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = uniform(a, b);
    }
    return v;
  }
  /// Random subset of [0, n) with roughly `fraction` of the ids.
  std::vector<int> subset(std::size_t n, double fraction) {
    std::vector<int> out;
    for (std::size_t k = 0; k < n; ++k) {
      if (uniform() < fraction) {
        out.push_back(static_cast<int>(k));
      }
    }
    return out;
  }
  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

inline bool on_unit_square_boundary(const Point& p) {
  const double tol = 1e-12;
  return std::abs(p[0]) < tol || std::abs(p[0] - 1.0) < tol || std::abs(p[1]) < tol || std::abs(p[1] - 1.0) < tol;
}

inline bool segment_on_boundary(const Point& a, const Point& b) {
  const double tol = 1e-12;
  for (int d = 0; d < 2; ++d) {
    for (double side : {0.0, 1.0}) {
      if (std::abs(a[d] - side) < tol && std::abs(b[d] - side) < tol) {
        return true;
      }
    }
  }
  return false;
}

struct Census {
  bool ok = true;
  std::string why;
  std::size_t interior_edges = 0;
  std::size_t boundary_edges = 0;
  std::size_t interior_incidences = 0;
};

/// Conformity of a mesh of the unit square from its raw cell lists: every edge
/// appears once (on the boundary) or twice (inside), no vertex sits in the
/// interior of an edge, and every cell is counter-clockwise.
inline Census census(const Mesh& mesh) {
  Census c;
  std::map<std::pair<int, int>, int> count;
  for (const auto& cell : mesh.cells()) {
    const int nv = cell.vertex_count();
    double twice = 0.0;
    for (int i = 0; i < nv; ++i) {
      const int a = cell.v[static_cast<std::size_t>(i)];
      const int b = cell.v[static_cast<std::size_t>((i + 1) % nv)];
      ++count[{std::min(a, b), std::max(a, b)}];
      const Point& pa = mesh.vertex(a);
      const Point& pb = mesh.vertex(b);
      twice += pa[0] * pb[1] - pb[0] * pa[1];
    }
    if (!(twice > 0.0)) {
      c.ok = false;
      c.why = "cell with non-positive signed area";
    }
  }
  for (const auto& [e, n] : count) {
    const Point& a = mesh.vertex(e.first);
    const Point& b = mesh.vertex(e.second);
    if (n == 2) {
      ++c.interior_edges;
      c.interior_incidences += 2;
    } else if (n == 1) {
      ++c.boundary_edges;
      if (!segment_on_boundary(a, b)) {
        c.ok = false;
        c.why = "edge used once away from the boundary";
      }
    } else {
      c.ok = false;
      c.why = "edge used more than twice";
    }
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      if (static_cast<int>(v) == e.first || static_cast<int>(v) == e.second) {
        continue;
      }
      const Point& p = mesh.vertex(static_cast<int>(v));
      const double cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
      const double t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) /
                       ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]));
      if (std::abs(cr) < 1e-14 && t > 1e-12 && t < 1.0 - 1e-12) {
        c.ok = false;
        c.why = "hanging vertex";
      }
    }
  }
  return c;
}

/// Cells as sorted coordinate lists, so meshes compare independently of numbering.
inline std::multiset<std::vector<std::pair<double, double>>> cell_shapes(const Mesh& mesh) {
  std::multiset<std::vector<std::pair<double, double>>> out;
  for (const auto& cell : mesh.cells()) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < cell.vertex_count(); ++i) {
      const Point& p = mesh.vertex(cell.v[static_cast<std::size_t>(i)]);
      // round away last-bit noise from midpoint arithmetic
      pts.emplace_back(std::round(p[0] * 1e12) / 1e12, std::round(p[1] * 1e12) / 1e12);
    }
    std::sort(pts.begin(), pts.end());
    out.insert(pts);
  }
  return out;
}

inline std::set<std::pair<double, double>> vertex_set(const Mesh& mesh) {
  std::set<std::pair<double, double>> out;
  for (const Point& p : mesh.vertices()) {
    out.emplace(std::round(p[0] * 1e12) / 1e12, std::round(p[1] * 1e12) / 1e12);
  }
  return out;
}

/// Smallest angle of a triangle from its coordinates, degrees.
inline double triangle_min_angle(const Point& a, const Point& b, const Point& c) {
  const auto angle = [](const Point& p, const Point& q, const Point& r) {
    const double ux = q[0] - p[0], uy = q[1] - p[1], wx = r[0] - p[0], wy = r[1] - p[1];
    return std::acos((ux * wx + uy * wy) / (std::hypot(ux, uy) * std::hypot(wx, wy))) * 180.0 / M_PI;
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

/// Random point inside cell k (barycentric for triangles, bilinear for quads).
inline Point random_reference_point(monofem::CellKind kind, Rng& rng) {
  if (kind == monofem::CellKind::quad) {
    return {rng.uniform(), rng.uniform()};
  }
  double a = rng.uniform(), b = rng.uniform();
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return {a, b};
}

/// Linear problem -lap u + beta u = g with alpha1 = alpha2 = 1, so L = 1.
inline monofem::ProblemDef linear_problem(double beta, std::function<double(const Point&)> g) {
  monofem::ProblemDef p;
  p.name = "linear";
  p.mu = [](const Point&, double) { return 1.0; };
  p.mu_t = [](const Point&, double) { return 0.0; };
  if (beta != 0.0) {
    p.reaction = [beta](const Point&, double u) { return beta * u; };
  }
  if (g) {
    p.source = [g](const Point& x) { return -g(x); };
  }
  p.alpha1 = p.alpha2 = 1.0;
  p.beta1 = p.beta2 = beta;
  return p;
}

}  // namespace testing_support
