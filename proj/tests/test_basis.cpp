#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace monofem;
using testing_support::Rng;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// Exact integrals of x^a y^b over the reference cells.
double triangle_moment(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }
double square_moment(int a, int b) { return 1.0 / ((a + 1.0) * (b + 1.0)); }

}  // namespace

TEST(Quadrature, GaussLegendreExactness) {
  for (int n = 1; n <= 12; ++n) {
    const Rule1D r = gauss_legendre(n);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (std::size_t q = 0; q < r.points.size(); ++q) {
        s += r.weights[q] * std::pow(r.points[q], d);
      }
      EXPECT_NEAR(s, 1.0 / (d + 1.0), 1e-14) << "n=" << n << " d=" << d;
    }
  }
}

TEST(Quadrature, GaussLobattoEndpointsAndExactness) {
  for (int n = 2; n <= 9; ++n) {
    const Rule1D r = gauss_lobatto(n);
    EXPECT_DOUBLE_EQ(r.points.front(), 0.0);
    EXPECT_DOUBLE_EQ(r.points.back(), 1.0);
    for (int d = 0; d <= 2 * n - 3; ++d) {
      double s = 0.0;
      for (std::size_t q = 0; q < r.points.size(); ++q) {
        s += r.weights[q] * std::pow(r.points[q], d);
      }
      EXPECT_NEAR(s, 1.0 / (d + 1.0), 1e-14) << "n=" << n << " d=" << d;
    }
  }
}

TEST(Quadrature, ReferenceRulesIntegrateMonomials) {
  for (int degree = 0; degree <= 20; ++degree) {
    const QuadratureRule tri = triangle_rule(degree);
    const QuadratureRule quad = quad_rule(degree);
    EXPECT_GE(tri.degree, degree);
    EXPECT_GE(quad.degree, degree);
    double wt = 0.0, wq = 0.0;
    for (double w : tri.weights) {
      wt += w;
    }
    for (double w : quad.weights) {
      wq += w;
    }
    EXPECT_NEAR(wt, 0.5, 1e-14);
    EXPECT_NEAR(wq, 1.0, 1e-14);
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double st = 0.0;
        for (std::size_t q = 0; q < tri.size(); ++q) {
          st += tri.weights[q] * std::pow(tri.points[q][0], a) * std::pow(tri.points[q][1], b);
        }
        EXPECT_NEAR(st / triangle_moment(a, b), 1.0, 1e-13) << "tri degree " << degree << " x^" << a << " y^" << b;
      }
      for (int b = 0; b <= degree; ++b) {
        double sq = 0.0;
        for (std::size_t q = 0; q < quad.size(); ++q) {
          sq += quad.weights[q] * std::pow(quad.points[q][0], a) * std::pow(quad.points[q][1], b);
        }
        EXPECT_NEAR(sq / square_moment(a, b), 1.0, 1e-13);
      }
    }
  }
}

TEST(Quadrature, TrianglePointsInside) {
  for (int degree = 1; degree <= 14; ++degree) {
    for (const Point& p : triangle_rule(degree).points) {
      EXPECT_GT(p[0], 0.0);
      EXPECT_GT(p[1], 0.0);
      EXPECT_LT(p[0] + p[1], 1.0);
    }
  }
}

struct ElementCase {
  CellKind kind;
  int degree;
  NodeFamily family;
};

class ReferenceBasis : public ::testing::TestWithParam<ElementCase> {};

TEST_P(ReferenceBasis, Dimension) {
  const auto c = GetParam();
  const ReferenceElement e(c.kind, c.degree, c.family);
  const auto p = static_cast<std::size_t>(c.degree);
  EXPECT_EQ(e.size(), c.kind == CellKind::quad ? (p + 1) * (p + 1) : (p + 1) * (p + 2) / 2);
}

TEST_P(ReferenceBasis, NodalDuality) {
  const auto c = GetParam();
  const ReferenceElement e(c.kind, c.degree, c.family);
  BasisValues bv;
  for (std::size_t j = 0; j < e.size(); ++j) {
    e.evaluate(e.nodes()[j].ref, bv);
    for (std::size_t i = 0; i < e.size(); ++i) {
      EXPECT_NEAR(bv.value[i], i == j ? 1.0 : 0.0, 1e-12) << "phi_" << i << " at node " << j;
    }
  }
}

TEST_P(ReferenceBasis, PartitionOfUnity) {
  const auto c = GetParam();
  const ReferenceElement e(c.kind, c.degree, c.family);
  Rng rng(static_cast<std::uint64_t>(c.degree) * 31 + static_cast<std::uint64_t>(c.kind));
  BasisValues bv;
  for (int s = 0; s < 20; ++s) {
    e.evaluate(testing_support::random_reference_point(c.kind, rng), bv);
    double sum = 0.0;
    Vec2 g = Vec2::Zero();
    Mat2 h = Mat2::Zero();
    for (std::size_t i = 0; i < e.size(); ++i) {
      sum += bv.value[i];
      g += bv.grad[i];
      h += bv.hess[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-11);
    EXPECT_LT(g.norm(), 1e-9);
    EXPECT_LT(h.norm(), 1e-7);
  }
}

TEST_P(ReferenceBasis, DerivativesMatchFiniteDifferences) {
  const auto c = GetParam();
  const ReferenceElement e(c.kind, c.degree, c.family);
  Rng rng(99 + static_cast<std::uint64_t>(c.degree));
  BasisValues bv, bp, bm;
  const double step = 1e-5;
  for (int s = 0; s < 10; ++s) {
    Point xi = testing_support::random_reference_point(c.kind, rng);
    // keep the stencil inside the cell
    xi = {0.1 + 0.8 * xi[0] * (c.kind == CellKind::quad ? 1.0 : 0.9), 0.1 + 0.8 * xi[1] * (c.kind == CellKind::quad ? 1.0 : 0.9)};
    e.evaluate(xi, bv);
    for (int d = 0; d < 2; ++d) {
      Point xp = xi, xm = xi;
      xp[static_cast<std::size_t>(d)] += step;
      xm[static_cast<std::size_t>(d)] -= step;
      e.evaluate(xp, bp);
      e.evaluate(xm, bm);
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double fd = (bp.value[i] - bm.value[i]) / (2.0 * step);
        EXPECT_NEAR(bv.grad[i][d], fd, 1e-5 * (1.0 + std::abs(fd)));
        const Vec2 hfd = (bp.grad[i] - bm.grad[i]) / (2.0 * step);
        EXPECT_NEAR(bv.hess[i](0, d), hfd[0], 1e-4 * (1.0 + hfd.norm()));
        EXPECT_NEAR(bv.hess[i](1, d), hfd[1], 1e-4 * (1.0 + hfd.norm()));
      }
    }
  }
}

TEST_P(ReferenceBasis, ReproducesPolynomials) {
  const auto c = GetParam();
  const ReferenceElement e(c.kind, c.degree, c.family);
  const int p = c.degree;
  Rng rng(5 + static_cast<std::uint64_t>(p));
  BasisValues bv;
  for (int a = 0; a <= p; ++a) {
    for (int b = 0; b <= p; ++b) {
      if (c.kind == CellKind::triangle && a + b > p) {
        continue;
      }
      const auto q = [&](const Point& x) { return std::pow(x[0], a) * std::pow(x[1], b); };
      for (int s = 0; s < 5; ++s) {
        const Point xi = testing_support::random_reference_point(c.kind, rng);
        e.evaluate(xi, bv);
        double v = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
          v += q(e.nodes()[i].ref) * bv.value[i];
        }
        EXPECT_NEAR(v, q(xi), 1e-11);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(
    Elements, ReferenceBasis,
    ::testing::Values(ElementCase{CellKind::triangle, 1, NodeFamily::equispaced},
                      ElementCase{CellKind::triangle, 2, NodeFamily::equispaced},
                      ElementCase{CellKind::triangle, 3, NodeFamily::equispaced},
                      ElementCase{CellKind::triangle, 4, NodeFamily::equispaced},
                      ElementCase{CellKind::triangle, 6, NodeFamily::equispaced},
                      ElementCase{CellKind::quad, 1, NodeFamily::equispaced},
                      ElementCase{CellKind::quad, 2, NodeFamily::equispaced},
                      ElementCase{CellKind::quad, 3, NodeFamily::equispaced},
                      ElementCase{CellKind::quad, 5, NodeFamily::equispaced},
                      ElementCase{CellKind::quad, 8, NodeFamily::equispaced},
                      ElementCase{CellKind::quad, 4, NodeFamily::gauss_lobatto},
                      ElementCase{CellKind::quad, 7, NodeFamily::gauss_lobatto}),
    [](const ::testing::TestParamInfo<ElementCase>& info) {
      const ElementCase& c = info.param;
      return std::string(c.kind == CellKind::quad ? "Q" : "P") + std::to_string(c.degree) +
             (c.family == NodeFamily::gauss_lobatto ? "_gll" : "");
    });

TEST(ReferenceElement, RejectsBadArguments) {
  EXPECT_THROW(ReferenceElement(CellKind::triangle, 0), std::invalid_argument);
  EXPECT_THROW(ReferenceElement(CellKind::triangle, 3, NodeFamily::gauss_lobatto), std::invalid_argument);
}
