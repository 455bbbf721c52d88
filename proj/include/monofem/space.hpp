#pragma once

// H^1_0-conforming Lagrange spaces of uniform degree p on a Mesh.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "monofem/basis.hpp"
#include "monofem/core.hpp"
#include "monofem/mesh.hpp"

namespace monofem {

/// Affine map from the reference cell: x = origin + jac * xi.
struct CellGeometry {
  Vec2 origin = Vec2::Zero();
  Mat2 jac = Mat2::Identity();
  Mat2 inv = Mat2::Identity();
  double det = 1.0;

  Point map(const Point& xi) const {
    const Vec2 x = origin + jac * Vec2(xi[0], xi[1]);
    return {x[0], x[1]};
  }
  Point to_reference(const Point& x) const {
    const Vec2 xi = inv * (Vec2(x[0], x[1]) - origin);
    return {xi[0], xi[1]};
  }
};

using ScalarField = std::function<double(const Point&)>;

struct PointValue {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
};

class FeSpace {
public:
  FeSpace(std::shared_ptr<const Mesh> mesh, int degree, NodeFamily family = NodeFamily::equispaced)
      : mesh_(std::move(mesh)), degree_(degree), family_(family) {
    if (!mesh_) {
      throw std::invalid_argument("build_space: null mesh");
    }
    if (degree < 1) {
      throw std::invalid_argument("build_space: polynomial degree must be >= 1");
    }
    if (mesh_->has_quads() && mesh_->has_triangles()) {
      throw std::invalid_argument("build_space: mixed meshes are not supported");
    }
    const CellKind kind = mesh_->cell(0).kind;
    reference_ = std::make_shared<ReferenceElement>(kind, degree, family);
    build_geometry();
    build_dofs();
    build_locator();
  }

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  NodeFamily family() const { return family_; }
  const ReferenceElement& reference() const { return *reference_; }
  CellKind kind() const { return reference_->kind(); }

  /// Number of free (non-Dirichlet) DOFs, m.
  std::size_t dof_count() const { return free_points_.size(); }
  std::size_t local_size() const { return reference_->size(); }
  std::size_t cell_count() const { return mesh_->cell_count(); }

  /// Free DOF index of every local node of cell k; -1 marks a Dirichlet node.
  std::span<const int> cell_dofs(std::size_t k) const {
    return {cell_dofs_.data() + k * local_size(), local_size()};
  }
  const CellGeometry& geometry(std::size_t k) const { return geometry_[k]; }
  std::span<const Point> dof_points() const { return free_points_; }

  /// Value and physical gradient of sum_i coef_i phi_i at a reference point of cell k.
  PointValue evaluate(const Vector& coef, std::size_t k, const Point& xi) const {
    check_coef(coef);
    BasisValues basis;
    reference_->evaluate(xi, basis);
    return combine(coef, k, basis);
  }

  PointValue combine(const Vector& coef, std::size_t k, const BasisValues& basis) const {
    const auto dofs = cell_dofs(k);
    PointValue out;
    Vec2 ref_grad = Vec2::Zero();
    for (std::size_t b = 0; b < dofs.size(); ++b) {
      if (dofs[b] < 0) {
        continue;
      }
      const double c = coef[dofs[b]];
      out.value += c * basis.value[b];
      ref_grad += c * basis.grad[b];
    }
    out.grad = geometry_[k].inv.transpose() * ref_grad;
    return out;
  }

  void check_coef(const Vector& coef) const {
    if (static_cast<std::size_t>(coef.size()) != dof_count()) {
      throw std::invalid_argument("coefficient vector length " + std::to_string(coef.size()) +
                                  " does not match the space (" + std::to_string(dof_count()) + ")");
    }
  }

  /// Nodal interpolant; Dirichlet DOFs are implicitly zero.
  Vector interpolate(const ScalarField& field) const {
    Vector coef(static_cast<Eigen::Index>(dof_count()));
    for (std::size_t i = 0; i < dof_count(); ++i) {
      const double v = field(free_points_[i]);
      if (!std::isfinite(v)) {
        throw numeric_error("interpolate: non-finite field value at DOF " + std::to_string(i));
      }
      coef[static_cast<Eigen::Index>(i)] = v;
    }
    return coef;
  }

  /// Cell containing x (closed cells, relative tolerance tol), or -1.
  int locate(const Point& x, double tol = 1e-10) const {
    const auto [bx, by] = bucket_of(x);
    if (bx < 0) {
      return -1;
    }
    for (int k : locator_[static_cast<std::size_t>(by * buckets_ + bx)]) {
      if (contains(static_cast<std::size_t>(k), x, tol)) {
        return k;
      }
    }
    return -1;
  }

  bool contains(std::size_t k, const Point& x, double tol = 1e-10) const {
    const Point xi = geometry_[k].to_reference(x);
    if (kind() == CellKind::triangle) {
      return xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol;
    }
    return xi[0] >= -tol && xi[1] >= -tol && xi[0] <= 1.0 + tol && xi[1] <= 1.0 + tol;
  }

private:
  void build_geometry() {
    const Mesh& m = *mesh_;
    geometry_.resize(m.cell_count());
    for (std::size_t k = 0; k < m.cell_count(); ++k) {
      const Cell& c = m.cell(k);
      const Point& a = m.vertex(c.v[0]);
      const Point& b = m.vertex(c.v[1]);
      const Point& d = c.kind == CellKind::quad ? m.vertex(c.v[3]) : m.vertex(c.v[2]);
      CellGeometry g;
      g.origin = Vec2(a[0], a[1]);
      g.jac << b[0] - a[0], d[0] - a[0], b[1] - a[1], d[1] - a[1];
      g.det = g.jac.determinant();
      if (!(g.det > 0.0)) {
        throw std::invalid_argument("build_space: degenerate cell " + std::to_string(k));
      }
      g.inv = g.jac.inverse();
      geometry_[k] = g;
    }
  }

  void build_dofs() {
    const Mesh& m = *mesh_;
    const int p = degree_;
    const std::size_t nv = m.vertex_count();
    const std::size_t ne = m.edges().size();
    const std::size_t per_edge = static_cast<std::size_t>(p - 1);
    std::size_t interior_per_cell = 0;
    for (const auto& node : reference_->nodes()) {
      interior_per_cell += node.where == LocalNode::Where::interior ? 1 : 0;
    }
    const std::size_t edge_base = nv;
    const std::size_t cell_base = nv + ne * per_edge;
    const std::size_t total = cell_base + m.cell_count() * interior_per_cell;

    std::vector<bool> dirichlet(total, false);
    for (std::size_t v = 0; v < nv; ++v) {
      dirichlet[v] = m.boundary_vertex(static_cast<int>(v));
    }
    for (std::size_t e = 0; e < ne; ++e) {
      if (m.edges()[e].boundary()) {
        for (std::size_t s = 0; s < per_edge; ++s) {
          dirichlet[edge_base + e * per_edge + s] = true;
        }
      }
    }

    const std::size_t nl = local_size();
    std::vector<std::size_t> global(m.cell_count() * nl);
    std::vector<Point> global_point(total);
    for (std::size_t k = 0; k < m.cell_count(); ++k) {
      const Cell& c = m.cell(k);
      std::size_t interior = 0;
      for (std::size_t b = 0; b < nl; ++b) {
        const LocalNode& node = reference_->nodes()[b];
        std::size_t g = 0;
        switch (node.where) {
          case LocalNode::Where::vertex:
            g = static_cast<std::size_t>(c.v[static_cast<std::size_t>(node.entity)]);
            break;
          case LocalNode::Where::edge: {
            const int edge = m.cell_edge(k, node.entity);
            const int from = c.v[static_cast<std::size_t>(node.entity)];
            const int s = from == m.edges()[static_cast<std::size_t>(edge)].v[0] ? node.step : p - node.step;
            g = edge_base + static_cast<std::size_t>(edge) * per_edge + static_cast<std::size_t>(s - 1);
            break;
          }
          case LocalNode::Where::interior:
            g = cell_base + k * interior_per_cell + interior++;
            break;
        }
        global[k * nl + b] = g;
        global_point[g] = geometry_[k].map(node.ref);
      }
    }

    std::vector<int> free_index(total, -1);
    for (std::size_t g = 0; g < total; ++g) {
      if (!dirichlet[g]) {
        free_index[g] = static_cast<int>(free_points_.size());
        free_points_.push_back(global_point[g]);
      }
    }
    cell_dofs_.resize(global.size());
    for (std::size_t i = 0; i < global.size(); ++i) {
      cell_dofs_[i] = free_index[global[i]];
    }
  }

  std::pair<int, int> bucket_of(const Point& x) const {
    const double fx = (x[0] - lo_[0]) / (hi_[0] - lo_[0]);
    const double fy = (x[1] - lo_[1]) / (hi_[1] - lo_[1]);
    if (!(fx >= -1e-9 && fx <= 1.0 + 1e-9 && fy >= -1e-9 && fy <= 1.0 + 1e-9)) {
      return {-1, -1};
    }
    const auto clamp = [this](double f) { return std::clamp(static_cast<int>(f * buckets_), 0, buckets_ - 1); };
    return {clamp(fx), clamp(fy)};
  }

  void build_locator() {
    const Mesh& m = *mesh_;
    lo_ = m.vertex(0);
    hi_ = m.vertex(0);
    for (const Point& p : m.vertices()) {
      lo_ = {std::min(lo_[0], p[0]), std::min(lo_[1], p[1])};
      hi_ = {std::max(hi_[0], p[0]), std::max(hi_[1], p[1])};
    }
    buckets_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.cell_count()))));
    std::vector<std::vector<int>> grid(static_cast<std::size_t>(buckets_ * buckets_));
    const double pad = 1e-9 * std::max(hi_[0] - lo_[0], hi_[1] - lo_[1]);
    for (std::size_t k = 0; k < m.cell_count(); ++k) {
      const Cell& c = m.cell(k);
      Point cl = m.vertex(c.v[0]);
      Point ch = cl;
      for (int i = 1; i < c.vertex_count(); ++i) {
        const Point& p = m.vertex(c.v[static_cast<std::size_t>(i)]);
        cl = {std::min(cl[0], p[0]), std::min(cl[1], p[1])};
        ch = {std::max(ch[0], p[0]), std::max(ch[1], p[1])};
      }
      const auto [x0, y0] = bucket_of({cl[0] - pad, cl[1] - pad});
      const auto [x1, y1] = bucket_of({ch[0] + pad, ch[1] + pad});
      for (int by = std::max(0, y0); by <= y1; ++by) {
        for (int bx = std::max(0, x0); bx <= x1; ++bx) {
          grid[static_cast<std::size_t>(by * buckets_ + bx)].push_back(static_cast<int>(k));
        }
      }
    }
    locator_ = std::move(grid);
  }

  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  NodeFamily family_;
  std::shared_ptr<const ReferenceElement> reference_;
  std::vector<CellGeometry> geometry_;
  std::vector<int> cell_dofs_;
  std::vector<Point> free_points_;

  // Bucket grid over the bounding box for point location.
  std::vector<std::vector<int>> locator_;
  Point lo_{};
  Point hi_{};
  int buckets_ = 1;
};

inline FeSpace build_space(const Mesh& mesh, int degree, NodeFamily family = NodeFamily::equispaced) {
  return FeSpace(std::make_shared<const Mesh>(mesh), degree, family);
}

inline FeSpace build_space(std::shared_ptr<const Mesh> mesh, int degree, NodeFamily family = NodeFamily::equispaced) {
  return FeSpace(std::move(mesh), degree, family);
}

/// Moves a function to a space on a descendant (refined and/or coarsened) mesh
/// by nodal interpolation; on purely refined regions this is exact inclusion.
inline Vector transfer(const FeSpace& coarse, const Vector& coef, const FeSpace& fine) {
  coarse.check_coef(coef);
  if (coarse.mesh().lineage() != fine.mesh().lineage()) {
    throw std::invalid_argument("transfer: meshes are not related by refinement");
  }
  if (coarse.degree() != fine.degree() || coarse.kind() != fine.kind()) {
    throw std::invalid_argument("transfer: spaces differ in degree or cell kind");
  }
  Vector out(static_cast<Eigen::Index>(fine.dof_count()));
  const auto points = fine.dof_points();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int k = coarse.locate(points[i]);
    if (k < 0) {
      throw std::invalid_argument("transfer: fine DOF lies outside the coarse mesh");
    }
    const auto kk = static_cast<std::size_t>(k);
    out[static_cast<Eigen::Index>(i)] = coarse.evaluate(coef, kk, coarse.geometry(kk).to_reference(points[i])).value;
  }
  return out;
}

}  // namespace monofem
