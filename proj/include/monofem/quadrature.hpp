#pragma once

// Gauss rules on [0,1], the unit square and the unit triangle
// {(x, y) : x, y >= 0, x + y <= 1}.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "monofem/core.hpp"
#include "monofem/mesh.hpp"

namespace monofem {

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;  // polynomials of total degree <= degree are integrated exactly

  std::size_t size() const { return weights.size(); }
};

struct Rule1D {
  std::vector<double> points;  // on [0, 1]
  std::vector<double> weights;
};

namespace detail {

/// Legendre P_n and its derivative at x in [-1, 1].
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    return {1.0, 0.0};
  }
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

/// n-point Gauss-Legendre rule mapped to [0, 1]; exact up to degree 2n-1.
inline Rule1D gauss_legendre(int n) {
  if (n < 1) {
    throw std::invalid_argument("gauss_legendre: n must be >= 1");
  }
  Rule1D rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      const auto [p, d] = detail::legendre(n, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    dp = detail::legendre(n, x).second;
    // Ascending order on [0, 1].
    const auto slot = static_cast<std::size_t>(n - 1 - i);
    rule.points[slot] = 0.5 * (x + 1.0);
    rule.weights[slot] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

/// n-point Gauss-Lobatto rule on [0, 1] (n >= 2); includes both end points.
inline Rule1D gauss_lobatto(int n) {
  if (n < 2) {
    throw std::invalid_argument("gauss_lobatto: n must be >= 2");
  }
  const int N = n - 1;
  Rule1D rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i <= N; ++i) {
    double x = -std::cos(std::numbers::pi * i / N);
    if (i > 0 && i < N) {
      for (int it = 0; it < 100; ++it) {
        const auto [p, dp] = detail::legendre(N, x);
        const double d2 = (2.0 * x * dp - N * (N + 1) * p) / (1.0 - x * x);
        const double dx = dp / d2;
        x -= dx;
        if (std::abs(dx) < 1e-16) {
          break;
        }
      }
    }
    const double p = detail::legendre(N, x).first;
    rule.points[static_cast<std::size_t>(i)] = 0.5 * (x + 1.0);
    rule.weights[static_cast<std::size_t>(i)] = 1.0 / (N * (N + 1) * p * p);
  }
  return rule;
}

/// Gauss rule on [0, 1] exact for polynomials of degree <= degree.
inline Rule1D line_rule(int degree) {
  return gauss_legendre(std::max(1, (degree + 2) / 2));
}

/// Tensor Gauss rule on the unit square, exact for Q_degree.
inline QuadratureRule quad_rule(int degree) {
  const Rule1D g = line_rule(degree);
  QuadratureRule rule;
  rule.degree = degree;
  for (std::size_t j = 0; j < g.points.size(); ++j) {
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      rule.points.push_back({g.points[i], g.points[j]});
      rule.weights.push_back(g.weights[i] * g.weights[j]);
    }
  }
  return rule;
}

/// Collapsed (conical product) Gauss rule on the unit triangle, exact for P_degree.
inline QuadratureRule triangle_rule(int degree) {
  const Rule1D gu = line_rule(degree + 1);  // Jacobian (1 - u) adds one degree
  const Rule1D gv = line_rule(degree);
  QuadratureRule rule;
  rule.degree = degree;
  for (std::size_t i = 0; i < gu.points.size(); ++i) {
    for (std::size_t j = 0; j < gv.points.size(); ++j) {
      const double u = gu.points[i];
      const double v = gv.points[j];
      rule.points.push_back({u, (1.0 - u) * v});
      rule.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

inline QuadratureRule reference_rule(CellKind kind, int degree) {
  return kind == CellKind::quad ? quad_rule(degree) : triangle_rule(degree);
}

}  // namespace monofem
