#pragma once

// Residual a posteriori indicators for one fixed-point step (u^{n-1} -> u^n):
//
//   eta_K^2 = gamma_K || f(u^{n-1}) - div(mu grad u^{n-1}) + L^2 (-alpha2 lap d + beta2 d) ||_K^2
//           + 1/2 alpha2^{-1/2} gamma_K^{1/2} || [ mu grad u^{n-1} + L^2 alpha2 grad d ] ||_{dK \ boundary}^2
//
// with d = u^n - u^{n-1}, plus the fixed-point part E_FP = L (1 + L) |||d|||.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "monofem/assembly.hpp"
#include "monofem/basis.hpp"
#include "monofem/core.hpp"
#include "monofem/problems.hpp"
#include "monofem/quadrature.hpp"
#include "monofem/space.hpp"

namespace monofem {

/// min(h^2 / alpha2, 1 / beta2), or h^2 / alpha2 without reaction.
inline double gamma_weight(double h, double alpha2, double beta2) {
  const double diffusive = h * h / alpha2;
  return beta2 != 0.0 ? std::min(diffusive, 1.0 / beta2) : diffusive;
}

struct IndicatorField {
  std::vector<double> eta;     // per cell, >= 0
  std::vector<double> gamma;   // per cell
  std::vector<double> volume;  // squared volume part of eta_K^2
  std::vector<double> edge;    // squared edge part of eta_K^2
  double e_fem = 0.0;          // sqrt(sum eta_K^2)
  double e_fp = 0.0;
  double c_i = 1.0;
};

/// C_I E_FEM + E_FP.
inline double total_bound(const IndicatorField& field) { return field.c_i * field.e_fem + field.e_fp; }

/// L (1 + L) |||u^n - u^{n-1}||| for c0 = 1.
inline double fp_error(const SparseMatrix& iteration_matrix, const Vector& coef_n, const Vector& coef_nm1,
                       double lipschitz) {
  return lipschitz * (1.0 + lipschitz) * energy_norm(iteration_matrix, coef_n - coef_nm1);
}

inline double fp_error(const FeSpace& space, const ProblemDef& problem, const Vector& coef_n, const Vector& coef_nm1,
                       double lipschitz) {
  return lipschitz * (1.0 + lipschitz) * energy_norm(space, coef_n - coef_nm1, problem.alpha2, problem.beta2);
}

namespace detail {

struct LocalState {
  Vec2 grad_old = Vec2::Zero();
  Vec2 grad_diff = Vec2::Zero();
  double value_old = 0.0;
  double value_diff = 0.0;
  Mat2 hess_old = Mat2::Zero();
  Mat2 hess_diff = Mat2::Zero();
};

inline LocalState gather(const FeSpace& space, std::size_t k, const Vector& old, const Vector& diff,
                         const BasisValues& bv, bool hessians) {
  const auto dofs = space.cell_dofs(k);
  const CellGeometry& g = space.geometry(k);
  Vec2 go = Vec2::Zero(), gd = Vec2::Zero();
  Mat2 ho = Mat2::Zero(), hd = Mat2::Zero();
  LocalState s;
  for (std::size_t b = 0; b < dofs.size(); ++b) {
    if (dofs[b] < 0) {
      continue;
    }
    const double co = old[dofs[b]];
    const double cd = diff[dofs[b]];
    s.value_old += co * bv.value[b];
    s.value_diff += cd * bv.value[b];
    go += co * bv.grad[b];
    gd += cd * bv.grad[b];
    if (hessians) {
      ho += co * bv.hess[b];
      hd += cd * bv.hess[b];
    }
  }
  const Mat2 invT = g.inv.transpose();
  s.grad_old = invT * go;
  s.grad_diff = invT * gd;
  if (hessians) {
    s.hess_old = invT * ho * g.inv;
    s.hess_diff = invT * hd * g.inv;
  }
  return s;
}

/// Unit normal of a mesh edge pointing out of cell edge.cell[0].
inline Vec2 outward_normal(const Mesh& mesh, const Edge& edge) {
  const Point& a = mesh.vertex(edge.v[0]);
  const Point& b = mesh.vertex(edge.v[1]);
  Vec2 n(b[1] - a[1], -(b[0] - a[0]));
  n.normalize();
  const Point c = mesh.centroid(static_cast<std::size_t>(edge.cell[0]));
  const Point m = midpoint(a, b);
  if ((m[0] - c[0]) * n[0] + (m[1] - c[1]) * n[1] < 0.0) {
    n = -n;
  }
  return n;
}

}  // namespace detail

/// Squared L2 norm of the normal flux jump over every mesh edge (0 on the boundary).
inline std::vector<double> edge_jump_norms(const FeSpace& space, const Vector& coef_n, const Vector& coef_nm1,
                                           const ProblemDef& problem, double lipschitz) {
  space.check_coef(coef_n);
  space.check_coef(coef_nm1);
  const Mesh& mesh = space.mesh();
  const Vector diff = coef_n - coef_nm1;
  const double l2 = lipschitz * lipschitz;
  const Rule1D rule = line_rule(2 * space.degree() + 2);
  std::vector<double> out(mesh.edges().size(), 0.0);
  parallel_for(mesh.edges().size(), [&](std::size_t e) {
    const Edge& edge = mesh.edges()[e];
    if (edge.boundary()) {
      return;
    }
    const Point& a = mesh.vertex(edge.v[0]);
    const Point& b = mesh.vertex(edge.v[1]);
    const double length = distance(a, b);
    const Vec2 normal = detail::outward_normal(mesh, edge);
    BasisValues bv;
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double t = rule.points[q];
      const Point x{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
      double jump = 0.0;
      for (int side = 0; side < 2; ++side) {
        const auto k = static_cast<std::size_t>(edge.cell[static_cast<std::size_t>(side)]);
        space.reference().evaluate(space.geometry(k).to_reference(x), bv);
        const detail::LocalState s = detail::gather(space, k, coef_nm1, diff, bv, false);
        const Vec2 flux = problem.mu(x, s.grad_old.norm()) * s.grad_old + l2 * problem.alpha2 * s.grad_diff;
        jump += (side == 0 ? 1.0 : -1.0) * flux.dot(normal);
      }
      sum += rule.weights[q] * length * jump * jump;
    }
    out[e] = sum;
  });
  return out;
}

/// Local indicators eta_K for the step coef_nm1 -> coef_n, with E_FEM, and
/// E_FP evaluated by quadrature. C_I defaults to 1.
inline IndicatorField local_indicators(const FeSpace& space, const Vector& coef_n, const Vector& coef_nm1,
                                       const ProblemDef& problem, double lipschitz, double c_i = 1.0) {
  space.check_coef(coef_n);
  space.check_coef(coef_nm1);
  const Mesh& mesh = space.mesh();
  const std::size_t nc = mesh.cell_count();
  const double a2 = problem.alpha2;
  const double b2 = problem.beta2;
  const double l2 = lipschitz * lipschitz;
  // Piecewise-linear triangles have vanishing second derivatives.
  const bool hessians = !(space.kind() == CellKind::triangle && space.degree() == 1);
  if (hessians && !problem.mu_t) {
    throw std::invalid_argument("local_indicators: problem '" + problem.name + "' lacks mu_t required for degree " +
                                std::to_string(space.degree()));
  }
  const Vector diff = coef_n - coef_nm1;
  const Tabulation tab(space.reference(), reference_rule(space.kind(), default_quadrature_degree(space)));

  IndicatorField field;
  field.c_i = c_i;
  field.eta.assign(nc, 0.0);
  field.gamma.assign(nc, 0.0);
  field.volume.assign(nc, 0.0);
  field.edge.assign(nc, 0.0);
  parallel_for(nc, [&](std::size_t k) {
    const CellGeometry& g = space.geometry(k);
    const double gamma = gamma_weight(mesh.diameter(k), a2, b2);
    double vol = 0.0;
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const Point x = g.map(tab.rule.points[q]);
      const detail::LocalState s = detail::gather(space, k, coef_nm1, diff, tab.at[q], hessians);
      double r = problem.f(x, s.value_old) + l2 * b2 * s.value_diff;
      if (hessians) {
        r += -flux_divergence(problem, x, s.grad_old, s.hess_old) - l2 * a2 * s.hess_diff.trace();
      }
      if (!std::isfinite(r)) {
        throw numeric_error("local_indicators: non-finite residual in cell " + std::to_string(k));
      }
      vol += tab.rule.weights[q] * g.det * r * r;
    }
    field.gamma[k] = gamma;
    field.volume[k] = gamma * vol;
  });

  const std::vector<double> jumps = edge_jump_norms(space, coef_n, coef_nm1, problem, lipschitz);
  for (std::size_t e = 0; e < jumps.size(); ++e) {
    const Edge& edge = mesh.edges()[e];
    if (edge.boundary()) {
      continue;
    }
    for (int side = 0; side < 2; ++side) {
      const auto k = static_cast<std::size_t>(edge.cell[static_cast<std::size_t>(side)]);
      field.edge[k] += 0.5 * std::sqrt(field.gamma[k] / a2) * jumps[e];
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < nc; ++k) {
    const double eta2 = field.volume[k] + field.edge[k];
    if (!std::isfinite(eta2)) {
      throw numeric_error("local_indicators: non-finite indicator in cell " + std::to_string(k));
    }
    field.eta[k] = std::sqrt(eta2);
    sum += eta2;
  }
  field.e_fem = std::sqrt(sum);
  field.e_fp = fp_error(space, problem, coef_n, coef_nm1, lipschitz);
  return field;
}

/// Per-cell dump: element,eta,gamma.
inline void write_indicator_csv(std::ostream& out, const IndicatorField& field) {
  out << "element,eta,gamma\n";
  out.precision(17);
  for (std::size_t k = 0; k < field.eta.size(); ++k) {
    out << k << ',' << field.eta[k] << ',' << field.gamma[k] << '\n';
  }
}

}  // namespace monofem
