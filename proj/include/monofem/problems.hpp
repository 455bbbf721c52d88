#pragma once

// Quasilinear model problems  -div(mu(x, |grad u|) grad u) + f(x, u) = 0  in the
// unit square with u = 0 on the boundary, together with manufactured solutions
// and true-error evaluation.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "monofem/basis.hpp"
#include "monofem/core.hpp"
#include "monofem/quadrature.hpp"
#include "monofem/space.hpp"

namespace monofem {

using CoefficientFn = std::function<double(const Point&, double)>;

struct ExactSolution {
  std::function<double(const Point&)> value;
  std::function<Vec2(const Point&)> grad;
  std::function<Mat2(const Point&)> hess;
};

/// Sharp Poincare constant of the unit square, 1 / (sqrt(2) pi).
inline constexpr double unit_square_poincare = 1.0 / (std::numbers::sqrt2 * std::numbers::pi);

struct ProblemDef {
  std::string name;
  CoefficientFn mu;    // mu(x, t), t = |grad u|
  CoefficientFn mu_t;  // d mu / dt; may be empty for P1 triangles
  std::function<Vec2(const Point&, double)> mu_x;  // explicit x-gradient of mu, empty if mu is x-independent
  CoefficientFn reaction;  // u-dependent part of f
  std::function<double(const Point&)> source;  // x-only part c(x) of f; empty means zero

  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double poincare = unit_square_poincare;
  double theta = 1.0;  // default steering parameter for adaptive runs

  std::optional<ExactSolution> exact;

  double f(const Point& x, double u) const {
    double value = reaction ? reaction(x, u) : 0.0;
    if (source) {
      value += source(x);
    }
    return value;
  }
};

/// div(mu(x, |grad u|) grad u) from the gradient and Hessian of u. The term with
/// mu_t is dropped where |grad u| < 1e-14, where it vanishes in the limit.
inline double flux_divergence(const ProblemDef& problem, const Point& x, const Vec2& grad, const Mat2& hess) {
  const double t = grad.norm();
  double div = problem.mu(x, t) * hess.trace();
  if (t >= 1e-14) {
    if (!problem.mu_t) {
      throw std::invalid_argument("problem '" + problem.name + "': mu_t is required for this space");
    }
    div += problem.mu_t(x, t) * grad.dot(hess * grad) / t;
  }
  if (problem.mu_x) {
    div += problem.mu_x(x, t).dot(grad);
  }
  return div;
}

/// c(x) making the exact solution satisfy the PDE:
/// c = div(mu grad u*) - f_nl(x, u*).
inline double manufactured_forcing(const ProblemDef& problem, const Point& x) {
  if (!problem.exact || !problem.exact->grad || !problem.exact->hess) {
    throw std::invalid_argument("manufactured_forcing: exact solution derivatives unavailable");
  }
  const auto& u = *problem.exact;
  const double nonlinear = problem.reaction ? problem.reaction(x, u.value(x)) : 0.0;
  return flux_divergence(problem, x, u.grad(x), u.hess(x)) - nonlinear;
}

/// Strong-form residual -div(mu grad u*) + f(x, u*) of the exact solution.
inline double strong_residual(const ProblemDef& problem, const Point& x) {
  const auto& u = *problem.exact;
  return -flux_divergence(problem, x, u.grad(x), u.hess(x)) + problem.f(x, u.value(x));
}

namespace detail {

struct Profile {
  double value, d1, d2;
};

// x (1 - x) exp(-20 (2x - 1)^2)
inline Profile bump_profile(double x) {
  const double s = 2.0 * x - 1.0;
  const double e = std::exp(-20.0 * s * s);
  const double e1 = -80.0 * s * e;
  const double e2 = (6400.0 * s * s - 160.0) * e;
  const double g = x - x * x, g1 = 1.0 - 2.0 * x, g2 = -2.0;
  return {g * e, g1 * e + g * e1, g2 * e + 2.0 * g1 * e1 + g * e2};
}

// y (1 - y) (1 - 2y)
inline Profile cubic_profile(double y) {
  return {y - 3.0 * y * y + 2.0 * y * y * y, 1.0 - 6.0 * y + 6.0 * y * y, -6.0 + 12.0 * y};
}

// (1 - s) (exp(5 s^2) - 1)
inline Profile layer_profile(double s) {
  const double e = std::exp(5.0 * s * s);
  return {(1.0 - s) * (e - 1.0), -(e - 1.0) + (1.0 - s) * 10.0 * s * e,
          e * (-20.0 * s + (1.0 - s) * (10.0 + 100.0 * s * s))};
}

inline ExactSolution separable(Profile (*px)(double), Profile (*py)(double)) {
  ExactSolution u;
  u.value = [px, py](const Point& x) { return px(x[0]).value * py(x[1]).value; };
  u.grad = [px, py](const Point& x) {
    const Profile a = px(x[0]);
    const Profile b = py(x[1]);
    return Vec2(a.d1 * b.value, a.value * b.d1);
  };
  u.hess = [px, py](const Point& x) {
    const Profile a = px(x[0]);
    const Profile b = py(x[1]);
    Mat2 h;
    h << a.d2 * b.value, a.d1 * b.d1, a.d1 * b.d1, a.value * b.d2;
    return h;
  };
  return u;
}

inline void attach_manufactured_source(ProblemDef& problem) {
  const ProblemDef copy = problem;
  problem.source = [copy](const Point& x) { return manufactured_forcing(copy, x); };
}

}  // namespace detail

struct BuiltinParams {
  std::optional<double> epsilon;
  std::optional<double> poincare;
};

/// Built-in problems: "apriori", "ex1", "ex2" (epsilon, default 0.01) and
/// "ex3" (epsilon, default 1).
inline ProblemDef builtin(const std::string& name, const BuiltinParams& params = {}) {
  ProblemDef p;
  p.name = name;
  if (name == "apriori") {
    p.mu = [](const Point&, double t) { return 2.0 + 1.0 / (1.0 + t * t); };
    p.mu_t = [](const Point&, double t) { return -2.0 * t / ((1.0 + t * t) * (1.0 + t * t)); };
    p.alpha1 = 3.0;
    p.alpha2 = 15.0 / 8.0;
    p.exact = detail::separable(detail::bump_profile, detail::cubic_profile);
  } else if (name == "ex1") {
    p.mu = [](const Point&, double t) { return 1.0 + std::atan(t * t); };
    p.mu_t = [](const Point&, double t) { return 2.0 * t / (1.0 + t * t * t * t); };
    p.alpha1 = 1.0 + std::sqrt(3.0) / 2.0 + std::numbers::pi / 3.0;
    p.alpha2 = 1.0;
    p.theta = 0.5;
    p.exact = detail::separable(detail::bump_profile, detail::cubic_profile);
  } else if (name == "ex2" || name == "ex3") {
    const double eps = params.epsilon.value_or(name == "ex2" ? 0.01 : 1.0);
    if (!(eps > 0.0)) {
      throw std::invalid_argument("builtin: epsilon must be positive");
    }
    p.mu = [eps](const Point&, double) { return eps; };
    p.mu_t = [](const Point&, double) { return 0.0; };
    p.alpha1 = eps;
    p.alpha2 = eps;
    if (name == "ex2") {
      p.reaction = [](const Point& x, double u) {
        return (0.2 + x[0] * x[0] + x[1] * x[1]) * (u * u * u / (u * u + 1.0) + u);
      };
      p.beta1 = 187.0 / 40.0;
      p.beta2 = 1.0 / 5.0;
    } else {
      p.reaction = [](const Point&, double u) { return u * u * u / (10.0 * u * u + 1.0) + u; };
      p.beta1 = 89.0 / 80.0;
      p.beta2 = 1.0;
    }
    p.theta = 1.0;
    p.exact = detail::separable(detail::layer_profile, detail::layer_profile);
  } else {
    throw std::invalid_argument("builtin: unknown problem '" + name + "'");
  }
  if (params.poincare) {
    if (!(*params.poincare > 0.0)) {
      throw std::invalid_argument("builtin: Poincare constant must be positive");
    }
    p.poincare = *params.poincare;
  }
  detail::attach_manufactured_source(p);
  return p;
}

struct ErrorNorms {
  double energy = 0.0;        // |||u* - u_h|||
  double exact_energy = 0.0;  // |||u*|||
  double relative() const { return exact_energy > 0.0 ? energy / exact_energy : energy; }
};

/// Energy-norm error |||u* - u_h||| by quadrature of exactness 2p+4 (or `degree`).
inline ErrorNorms true_error(const FeSpace& space, const Vector& coef, const ProblemDef& problem, int degree = -1) {
  if (!problem.exact) {
    throw std::invalid_argument("true_error: problem '" + problem.name + "' has no exact solution");
  }
  space.check_coef(coef);
  const int q = degree > 0 ? degree : 2 * space.degree() + 4;
  const Tabulation tab(space.reference(), reference_rule(space.kind(), q));
  double err2 = 0.0;
  double ref2 = 0.0;
  for (std::size_t k = 0; k < space.cell_count(); ++k) {
    const CellGeometry& g = space.geometry(k);
    for (std::size_t iq = 0; iq < tab.rule.size(); ++iq) {
      const Point x = g.map(tab.rule.points[iq]);
      const PointValue uh = space.combine(coef, k, tab.at[iq]);
      const double u = problem.exact->value(x);
      const Vec2 du = problem.exact->grad(x);
      const double w = tab.rule.weights[iq] * g.det;
      err2 += w * (problem.alpha2 * (du - uh.grad).squaredNorm() + problem.beta2 * (u - uh.value) * (u - uh.value));
      ref2 += w * (problem.alpha2 * du.squaredNorm() + problem.beta2 * u * u);
    }
  }
  return {std::sqrt(err2), std::sqrt(ref2)};
}

}  // namespace monofem
