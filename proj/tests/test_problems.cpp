#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace monofem;
using testing_support::Rng;

namespace {

struct Named {
  const char* name;
  double epsilon;
};

std::vector<Named> all_builtins() {
  return {{"apriori", 1}, {"ex1", 1}, {"ex2", 0.01}, {"ex3", 1}, {"ex3", 1e-3}, {"ex3", 1e-6}};
}

ProblemDef make(const Named& n) {
  BuiltinParams params;
  if (std::string(n.name) == "ex2" || std::string(n.name) == "ex3") {
    params.epsilon = n.epsilon;
  }
  return builtin(n.name, params);
}

Vec2 flux(const ProblemDef& p, const Point& x, const Vec2& g) { return p.mu(x, g.norm()) * g; }

Point interior_point(Rng& rng) { return {rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)}; }

}  // namespace

TEST(Problems, FluxSecantBounds) {
  Rng rng(31);
  for (const auto& n : all_builtins()) {
    const ProblemDef p = make(n);
    for (int s = 0; s < 1000; ++s) {
      const Point x = interior_point(rng);
      const double scale = rng.uniform() < 0.5 ? 2.0 : 50.0;
      const Vec2 a(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
      const Vec2 b(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
      const Vec2 df = flux(p, x, a) - flux(p, x, b);
      const double d2 = (a - b).squaredNorm();
      EXPECT_GE(df.dot(a - b), p.alpha2 * d2 * (1 - 1e-12)) << n.name;
      EXPECT_LE(df.norm(), p.alpha1 * std::sqrt(d2) * (1 + 1e-12)) << n.name;
    }
  }
}

TEST(Problems, ReactionSecantBounds) {
  Rng rng(32);
  for (const auto& n : all_builtins()) {
    const ProblemDef p = make(n);
    for (int s = 0; s < 1000; ++s) {
      const Point x = interior_point(rng);
      const double scale = rng.uniform() < 0.5 ? 2.0 : 100.0;
      const double u = rng.uniform(-scale, scale), v = rng.uniform(-scale, scale);
      if (std::abs(u - v) < 1e-6) {
        continue;
      }
      const double q = (p.f(x, u) - p.f(x, v)) / (u - v);
      EXPECT_GE(q, p.beta2 - 1e-9) << n.name;
      EXPECT_LE(q, p.beta1 + 1e-9) << n.name;
    }
  }
}

TEST(Problems, SharpMonotonicityConstants) {
  // d/dt (mu(t) t) on a fine grid: its extrema are the sharp constants.
  const auto slope = [](const ProblemDef& p, double t) {
    const double h = 1e-6;
    const Point x{0.5, 0.5};
    return (p.mu(x, t + h) * (t + h) - p.mu(x, t - h) * (t - h)) / (2 * h);
  };
  const ProblemDef ap = builtin("apriori");
  EXPECT_NEAR(slope(ap, std::sqrt(3.0)), 15.0 / 8.0, 1e-8);
  EXPECT_NEAR(slope(ap, 1e-3), 3.0, 1e-5);
  const ProblemDef e1 = builtin("ex1");
  EXPECT_NEAR(slope(e1, std::pow(3.0, 0.25)), e1.alpha1, 1e-8);
  for (double t = 0.01; t < 30; t += 0.01) {
    EXPECT_GE(slope(ap, t), 15.0 / 8.0 - 1e-8);
    EXPECT_LE(slope(e1, t), e1.alpha1 + 1e-8);
  }
  // nonlinear reaction of ex2 peaks at u^2 = 3
  const ProblemDef e2 = builtin("ex2");
  const Point corner{1.0, 1.0};
  const double u = std::sqrt(3.0), h = 1e-6;
  EXPECT_NEAR((e2.f(corner, u + h) - e2.f(corner, u - h)) / (2 * h), e2.beta1, 1e-7);
}

TEST(Problems, MuDerivativeMatchesFiniteDifference) {
  Rng rng(33);
  for (const auto& n : all_builtins()) {
    const ProblemDef p = make(n);
    for (int s = 0; s < 200; ++s) {
      const Point x = interior_point(rng);
      const double t = rng.uniform(0.01, 10), h = 1e-6;
      const double fd = (p.mu(x, t + h) - p.mu(x, t - h)) / (2 * h);
      EXPECT_NEAR(p.mu_t(x, t), fd, 1e-7 * (1 + std::abs(fd))) << n.name;
    }
  }
}

TEST(Problems, ExactDerivativesMatchFiniteDifferences) {
  Rng rng(34);
  for (const char* name : {"apriori", "ex3"}) {
    const ExactSolution u = *builtin(name).exact;
    for (int s = 0; s < 200; ++s) {
      const Point x = interior_point(rng);
      const double h = 1e-5;
      for (int d = 0; d < 2; ++d) {
        Point xp = x, xm = x;
        xp[static_cast<std::size_t>(d)] += h;
        xm[static_cast<std::size_t>(d)] -= h;
        const double g = (u.value(xp) - u.value(xm)) / (2 * h);
        const double scale = 1 + u.grad(x).norm();
        EXPECT_NEAR(u.grad(x)[d], g, 1e-7 * scale);
        const Vec2 hd = (u.grad(xp) - u.grad(xm)) / (2 * h);
        const double hs = 1 + u.hess(x).norm();
        EXPECT_NEAR(u.hess(x)(0, d), hd[0], 1e-6 * hs);
        EXPECT_NEAR(u.hess(x)(1, d), hd[1], 1e-6 * hs);
      }
    }
  }
}

TEST(Problems, ExactSolutionsVanishOnBoundary) {
  for (const char* name : {"apriori", "ex1", "ex2", "ex3"}) {
    const ExactSolution u = *builtin(name).exact;
    for (double s = 0; s <= 1.0; s += 0.05) {
      EXPECT_NEAR(u.value({s, 0}), 0, 1e-15);
      EXPECT_NEAR(u.value({s, 1}), 0, 1e-15);
      EXPECT_NEAR(u.value({0, s}), 0, 1e-15);
      EXPECT_NEAR(u.value({1, s}), 0, 1e-15);
    }
  }
}

TEST(Problems, Example3CentreValue) {
  const double expected = 0.25 * std::pow(std::exp(1.25) - 1.0, 2);
  EXPECT_NEAR(expected, 1.550452, 5e-7);
  for (double eps : {1.0, 1e-6}) {
    BuiltinParams params;
    params.epsilon = eps;
    EXPECT_NEAR(builtin("ex3", params).exact->value({0.5, 0.5}), expected, 1e-14);
  }
}

TEST(Problems, ManufacturedForcingForLaplacian) {
  ProblemDef p = testing_support::linear_problem(0.0, {});
  const double pi = std::numbers::pi;
  ExactSolution u;
  u.value = [pi](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  u.grad = [pi](const Point& x) {
    return Vec2(pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), pi * std::sin(pi * x[0]) * std::cos(pi * x[1]));
  };
  u.hess = [pi](const Point& x) {
    Mat2 h;
    const double s = std::sin(pi * x[0]) * std::sin(pi * x[1]);
    const double c = pi * pi * std::cos(pi * x[0]) * std::cos(pi * x[1]);
    h << -pi * pi * s, c, c, -pi * pi * s;
    return h;
  };
  p.exact = u;
  Rng rng(35);
  for (int s = 0; s < 100; ++s) {
    const Point x = interior_point(rng);
    EXPECT_NEAR(manufactured_forcing(p, x), -2 * pi * pi * u.value(x), 1e-12);
  }
}

TEST(Problems, StrongResidualOfExactSolutionVanishes) {
  Rng rng(36);
  for (const auto& n : all_builtins()) {
    const ProblemDef p = make(n);
    for (int s = 0; s < 1000; ++s) {
      EXPECT_LE(std::abs(strong_residual(p, interior_point(rng))), 1e-8) << n.name;
    }
  }
}

TEST(Problems, FluxDivergenceMatchesFiniteDifferences) {
  // Central differences of mu(|grad u*|) grad u* against the closed form.
  Rng rng(37);
  for (const auto& n : all_builtins()) {
    const ProblemDef p = make(n);
    const ExactSolution& u = *p.exact;
    for (int s = 0; s < 200; ++s) {
      const Point x = interior_point(rng);
      const double h = 1e-5;
      double fd = 0;
      for (std::size_t d = 0; d < 2; ++d) {
        Point xp = x, xm = x;
        xp[d] += h;
        xm[d] -= h;
        fd += (flux(p, xp, u.grad(xp))[d] - flux(p, xm, u.grad(xm))[d]) / (2 * h);
      }
      const double exact = flux_divergence(p, x, u.grad(x), u.hess(x));
      const double scale = std::max(1.0, p.mu(x, 0) * u.hess(x).norm());
      EXPECT_NEAR(exact, fd, 1e-5 * scale) << n.name;
    }
  }
}

TEST(Problems, FluxDivergenceNeedsMuDerivative) {
  ProblemDef p = builtin("ex1");
  p.mu_t = nullptr;
  EXPECT_THROW(flux_divergence(p, {0.3, 0.3}, Vec2(1, 0), Mat2::Identity()), std::invalid_argument);
  // zero gradient never touches mu_t
  EXPECT_DOUBLE_EQ(flux_divergence(p, {0.3, 0.3}, Vec2::Zero(), Mat2::Identity()), 2.0);
}

TEST(Problems, UnknownNameAndBadParameters) {
  EXPECT_THROW(builtin("ex4"), std::invalid_argument);
  BuiltinParams bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(builtin("ex2", bad), std::invalid_argument);
  BuiltinParams cp;
  cp.poincare = -1.0;
  EXPECT_THROW(builtin("ex1", cp), std::invalid_argument);
  cp.poincare = 0.5;
  EXPECT_DOUBLE_EQ(builtin("ex1", cp).poincare, 0.5);
  EXPECT_DOUBLE_EQ(builtin("ex1").poincare, 1.0 / (std::sqrt(2.0) * std::numbers::pi));
}

TEST(TrueError, ZeroExactSolution) {
  ProblemDef p = testing_support::linear_problem(1.0, {});
  ExactSolution zero;
  zero.value = [](const Point&) { return 0.0; };
  zero.grad = [](const Point&) { return Vec2(0, 0); };
  p.exact = zero;
  const FeSpace s = build_space(uniform_tri_mesh(3), 2);
  Rng rng(38);
  const Vector c = rng.vector(s.dof_count());
  const ErrorNorms e = true_error(s, c, p);
  EXPECT_EQ(e.exact_energy, 0.0);
  EXPECT_NEAR(e.energy, energy_norm(s, c, 1.0, 1.0), 1e-12);
  EXPECT_EQ(e.relative(), e.energy);
  EXPECT_NEAR(true_error(s, Vector::Zero(static_cast<Eigen::Index>(s.dof_count())), p).energy, 0.0, 0.0);
}

TEST(TrueError, RequiresExactSolution) {
  const ProblemDef p = testing_support::linear_problem(1.0, {});
  const FeSpace s = build_space(uniform_tri_mesh(2), 1);
  EXPECT_THROW(true_error(s, Vector::Zero(static_cast<Eigen::Index>(s.dof_count())), p), std::invalid_argument);
}

TEST(TrueError, InterpolationRate) {
  // Energy error of the nodal interpolant drops like h^p.
  const ProblemDef p = builtin("apriori");
  for (int deg : {1, 2, 3}) {
    const FeSpace a = build_space(uniform_quad_mesh(16), deg);
    const FeSpace b = build_space(uniform_quad_mesh(32), deg);
    const double ea = true_error(a, a.interpolate(p.exact->value), p).energy;
    const double eb = true_error(b, b.interpolate(p.exact->value), p).energy;
    EXPECT_NEAR(std::log2(ea / eb), deg, 0.25) << "p=" << deg;
  }
}
