#pragma once

// Iteration matrix, nonlinear residual vector and discrete norms.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "monofem/basis.hpp"
#include "monofem/core.hpp"
#include "monofem/problems.hpp"
#include "monofem/quadrature.hpp"
#include "monofem/space.hpp"

namespace monofem {

using SparseMatrix = Eigen::SparseMatrix<double>;

namespace detail {
inline std::atomic<std::size_t> iteration_matrix_assemblies{0};
}

/// Number of assemble_iteration_matrix calls made by this process.
inline std::size_t iteration_matrix_assemblies() { return detail::iteration_matrix_assemblies.load(); }

inline int default_quadrature_degree(const FeSpace& space) { return 2 * space.degree() + 2; }

/// Gram matrix of (u, v) = a (grad u, grad v) + b (u, v) on the free DOFs.
inline SparseMatrix assemble_gram(const FeSpace& space, double a, double b, int degree = -1) {
  const Tabulation tab(space.reference(), reference_rule(space.kind(), degree > 0 ? degree : default_quadrature_degree(space)));
  const std::size_t nl = space.local_size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(space.cell_count() * nl * nl);
  Eigen::MatrixXd local(static_cast<Eigen::Index>(nl), static_cast<Eigen::Index>(nl));
  std::vector<Vec2> grad(nl);
  for (std::size_t k = 0; k < space.cell_count(); ++k) {
    const CellGeometry& g = space.geometry(k);
    const Mat2 invT = g.inv.transpose();
    local.setZero();
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const BasisValues& bv = tab.at[q];
      const double w = tab.rule.weights[q] * g.det;
      for (std::size_t i = 0; i < nl; ++i) {
        grad[i] = invT * bv.grad[i];
      }
      for (std::size_t i = 0; i < nl; ++i) {
        for (std::size_t j = 0; j < nl; ++j) {
          local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
              w * (a * grad[i].dot(grad[j]) + b * bv.value[i] * bv.value[j]);
        }
      }
    }
    const auto dofs = space.cell_dofs(k);
    for (std::size_t i = 0; i < nl; ++i) {
      if (dofs[i] < 0) {
        continue;
      }
      for (std::size_t j = 0; j < nl; ++j) {
        if (dofs[j] >= 0) {
          triplets.emplace_back(dofs[i], dofs[j], local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(space.dof_count());
  SparseMatrix matrix(m, m);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return matrix;
}

/// M_ij = alpha2 (grad phi_i, grad phi_j) + beta2 (phi_i, phi_j), Dirichlet DOFs eliminated.
inline SparseMatrix assemble_iteration_matrix(const FeSpace& space, double alpha2, double beta2, int degree = -1) {
  if (!(alpha2 > 0.0)) {
    throw std::invalid_argument("assemble_iteration_matrix: alpha2 must be positive");
  }
  if (!(beta2 >= 0.0)) {
    throw std::invalid_argument("assemble_iteration_matrix: beta2 must be non-negative");
  }
  ++detail::iteration_matrix_assemblies;
  return assemble_gram(space, alpha2, beta2, degree);
}

inline SparseMatrix assemble_mass_matrix(const FeSpace& space, int degree = -1) {
  return assemble_gram(space, 0.0, 1.0, degree);
}

/// Component j is A(u_h, phi_j) = int mu(|grad u_h|) grad u_h . grad phi_j + f(u_h) phi_j.
inline Vector assemble_residual(const FeSpace& space, const Vector& coef, const ProblemDef& problem, int degree = -1) {
  space.check_coef(coef);
  const Tabulation tab(space.reference(), reference_rule(space.kind(), degree > 0 ? degree : default_quadrature_degree(space)));
  const std::size_t nl = space.local_size();
  std::vector<double> local(space.cell_count() * nl, 0.0);
  parallel_for(space.cell_count(), [&](std::size_t k) {
    const CellGeometry& g = space.geometry(k);
    double* out = local.data() + k * nl;
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const BasisValues& bv = tab.at[q];
      const Point x = g.map(tab.rule.points[q]);
      const PointValue u = space.combine(coef, k, bv);
      const double mu = problem.mu(x, u.grad.norm());
      const double f = problem.f(x, u.value);
      if (!std::isfinite(mu) || !std::isfinite(f)) {
        throw numeric_error("assemble_residual: non-finite coefficient in cell " + std::to_string(k));
      }
      const double w = tab.rule.weights[q] * g.det;
      // mu grad u . (J^{-T} ghat) = (J^{-1} mu grad u) . ghat
      const Vec2 flux = g.inv * (w * mu * u.grad);
      const double react = w * f;
      for (std::size_t b = 0; b < nl; ++b) {
        out[b] += flux.dot(bv.grad[b]) + react * bv.value[b];
      }
    }
  });
  Vector residual = Vector::Zero(static_cast<Eigen::Index>(space.dof_count()));
  for (std::size_t k = 0; k < space.cell_count(); ++k) {
    const auto dofs = space.cell_dofs(k);
    for (std::size_t b = 0; b < nl; ++b) {
      if (dofs[b] >= 0) {
        residual[dofs[b]] += local[k * nl + b];
      }
    }
  }
  return residual;
}

/// |||v||| = sqrt(c^T M c) for the iteration matrix M.
inline double energy_norm(const SparseMatrix& iteration_matrix, const Vector& coef) {
  if (iteration_matrix.rows() != coef.size()) {
    throw std::invalid_argument("energy_norm: size mismatch");
  }
  return std::sqrt(std::max(0.0, coef.dot(iteration_matrix * coef)));
}

namespace detail {

template <class Integrand>
double integrate_cells(const FeSpace& space, const Vector& coef, int degree, Integrand&& integrand) {
  space.check_coef(coef);
  const Tabulation tab(space.reference(), reference_rule(space.kind(), degree > 0 ? degree : default_quadrature_degree(space)));
  double sum = 0.0;
  for (std::size_t k = 0; k < space.cell_count(); ++k) {
    const CellGeometry& g = space.geometry(k);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      sum += tab.rule.weights[q] * g.det * integrand(space.combine(coef, k, tab.at[q]));
    }
  }
  return sum;
}

}  // namespace detail

inline double l2_norm(const FeSpace& space, const Vector& coef) {
  return std::sqrt(detail::integrate_cells(space, coef, -1, [](const PointValue& u) { return u.value * u.value; }));
}

inline double h1_seminorm(const FeSpace& space, const Vector& coef) {
  return std::sqrt(detail::integrate_cells(space, coef, -1, [](const PointValue& u) { return u.grad.squaredNorm(); }));
}

/// |||v|||^2 = alpha2 ||grad v||^2 + beta2 ||v||^2 by quadrature, independent of any matrix.
inline double energy_norm(const FeSpace& space, const Vector& coef, double alpha2, double beta2) {
  return std::sqrt(detail::integrate_cells(space, coef, -1, [=](const PointValue& u) {
    return alpha2 * u.grad.squaredNorm() + beta2 * u.value * u.value;
  }));
}

/// MatrixMarket coordinate dump (1-based, full storage).
inline void write_matrix_market(std::ostream& out, const SparseMatrix& matrix) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index c = 0; c < matrix.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace monofem
