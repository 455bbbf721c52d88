#pragma once

// Nodal Lagrange bases on the reference triangle (P_p) and square (Q_p).
//
// Every basis function is a product of at most three univariate polynomials,
// each composed with an affine form of the reference coordinates, so values,
// gradients and Hessians all follow from the product rule.

#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "monofem/core.hpp"
#include "monofem/mesh.hpp"
#include "monofem/quadrature.hpp"

namespace monofem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class NodeFamily { equispaced, gauss_lobatto };

/// Where a local node sits on the reference element.
struct LocalNode {
  enum class Where { vertex, edge, interior };
  Point ref{};
  Where where = Where::interior;
  int entity = -1;  // local vertex or local edge index
  int step = 0;     // for edge nodes: steps (1..p-1) from the edge's first vertex
};

struct BasisValues {
  std::vector<double> value;
  std::vector<Vec2> grad;
  std::vector<Mat2> hess;
};

class ReferenceElement {
public:
  ReferenceElement(CellKind kind, int degree, NodeFamily family = NodeFamily::equispaced)
      : kind_(kind), degree_(degree) {
    if (degree < 1) {
      throw std::invalid_argument("reference element: degree must be >= 1");
    }
    if (kind == CellKind::triangle) {
      if (family != NodeFamily::equispaced) {
        throw std::invalid_argument("reference element: triangles use equispaced nodes only");
      }
      build_triangle();
    } else {
      std::vector<double> t(static_cast<std::size_t>(degree + 1));
      if (family == NodeFamily::gauss_lobatto) {
        t = gauss_lobatto(degree + 1).points;
        t.front() = 0.0;
        t.back() = 1.0;
      } else {
        for (int i = 0; i <= degree; ++i) {
          t[static_cast<std::size_t>(i)] = static_cast<double>(i) / degree;
        }
      }
      build_quad(t);
    }
  }

  CellKind kind() const { return kind_; }
  int degree() const { return degree_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<LocalNode>& nodes() const { return nodes_; }

  /// Values, reference gradients and reference Hessians at a reference point.
  void evaluate(const Point& xi, BasisValues& out) const {
    const std::size_t n = functions_.size();
    out.value.resize(n);
    out.grad.resize(n);
    out.hess.resize(n);
    for (std::size_t b = 0; b < n; ++b) {
      const Function& fn = functions_[b];
      std::array<double, 3> f{};
      std::array<double, 3> d1{};
      std::array<double, 3> d2{};
      for (std::size_t m = 0; m < fn.factor_count; ++m) {
        const Factor& fac = fn.factors[m];
        const double s = fac.slope[0] * xi[0] + fac.slope[1] * xi[1] + fac.offset;
        double v = fac.scale, dv = 0.0, ddv = 0.0;
        for (const auto& [a, c] : fac.linear) {
          const double q = a * s + c;
          ddv = ddv * q + 2.0 * dv * a;
          dv = dv * q + v * a;
          v = v * q;
        }
        f[m] = v;
        d1[m] = dv;
        d2[m] = ddv;
      }
      double value = 1.0;
      Vec2 grad = Vec2::Zero();
      Mat2 hess = Mat2::Zero();
      for (std::size_t m = 0; m < fn.factor_count; ++m) {
        value *= f[m];
        double others = 1.0;
        for (std::size_t k = 0; k < fn.factor_count; ++k) {
          if (k != m) {
            others *= f[k];
          }
        }
        const Vec2& gm = fn.factors[m].slope;
        grad += d1[m] * others * gm;
        hess += d2[m] * others * gm * gm.transpose();
        for (std::size_t k = 0; k < fn.factor_count; ++k) {
          if (k == m) {
            continue;
          }
          double rest = 1.0;
          for (std::size_t l = 0; l < fn.factor_count; ++l) {
            if (l != m && l != k) {
              rest *= f[l];
            }
          }
          hess += d1[m] * d1[k] * rest * gm * fn.factors[k].slope.transpose();
        }
      }
      out.value[b] = value;
      out.grad[b] = grad;
      out.hess[b] = hess;
    }
  }

private:
  struct Factor {
    Vec2 slope = Vec2::Zero();
    double offset = 0.0;
    double scale = 1.0;
    std::vector<std::pair<double, double>> linear;  // product of (a s + c)
  };
  struct Function {
    std::array<Factor, 3> factors;
    std::size_t factor_count = 0;
  };

  // R_m(s) = prod_{l<m} (p s - l) / (l + 1): vanishes at s = l/p, equals 1 at s = m/p.
  Factor silvester(int m, Vec2 slope, double offset) const {
    Factor f;
    f.slope = slope;
    f.offset = offset;
    for (int l = 0; l < m; ++l) {
      f.linear.emplace_back(static_cast<double>(degree_) / (l + 1), -static_cast<double>(l) / (l + 1));
    }
    return f;
  }

  void build_triangle() {
    const int p = degree_;
    for (int j = 0; j <= p; ++j) {
      for (int i = 0; i + j <= p; ++i) {
        const int k = p - i - j;
        LocalNode node;
        node.ref = {static_cast<double>(i) / p, static_cast<double>(j) / p};
        if (k == p) {
          node.where = LocalNode::Where::vertex;
          node.entity = 0;
        } else if (i == p) {
          node.where = LocalNode::Where::vertex;
          node.entity = 1;
        } else if (j == p) {
          node.where = LocalNode::Where::vertex;
          node.entity = 2;
        } else if (j == 0) {
          node.where = LocalNode::Where::edge;
          node.entity = 0;
          node.step = i;
        } else if (k == 0) {
          node.where = LocalNode::Where::edge;
          node.entity = 1;
          node.step = j;
        } else if (i == 0) {
          node.where = LocalNode::Where::edge;
          node.entity = 2;
          node.step = p - j;
        }
        nodes_.push_back(node);
        Function fn;
        fn.factors[0] = silvester(k, Vec2(-1.0, -1.0), 1.0);
        fn.factors[1] = silvester(i, Vec2(1.0, 0.0), 0.0);
        fn.factors[2] = silvester(j, Vec2(0.0, 1.0), 0.0);
        fn.factor_count = 3;
        functions_.push_back(fn);
      }
    }
  }

  void build_quad(const std::vector<double>& t) {
    const int p = degree_;
    const auto lagrange = [&](int i, Vec2 slope) {
      Factor f;
      f.slope = slope;
      for (int m = 0; m <= p; ++m) {
        if (m != i) {
          const double denom = t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(m)];
          f.linear.emplace_back(1.0 / denom, -t[static_cast<std::size_t>(m)] / denom);
        }
      }
      return f;
    };
    for (int j = 0; j <= p; ++j) {
      for (int i = 0; i <= p; ++i) {
        LocalNode node;
        node.ref = {t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)]};
        const bool left = i == 0, right = i == p, bottom = j == 0, top = j == p;
        if (bottom && left) {
          node.where = LocalNode::Where::vertex, node.entity = 0;
        } else if (bottom && right) {
          node.where = LocalNode::Where::vertex, node.entity = 1;
        } else if (top && right) {
          node.where = LocalNode::Where::vertex, node.entity = 2;
        } else if (top && left) {
          node.where = LocalNode::Where::vertex, node.entity = 3;
        } else if (bottom) {
          node.where = LocalNode::Where::edge, node.entity = 0, node.step = i;
        } else if (right) {
          node.where = LocalNode::Where::edge, node.entity = 1, node.step = j;
        } else if (top) {
          node.where = LocalNode::Where::edge, node.entity = 2, node.step = p - i;
        } else if (left) {
          node.where = LocalNode::Where::edge, node.entity = 3, node.step = p - j;
        }
        nodes_.push_back(node);
        Function fn;
        fn.factors[0] = lagrange(i, Vec2(1.0, 0.0));
        fn.factors[1] = lagrange(j, Vec2(0.0, 1.0));
        fn.factor_count = 2;
        functions_.push_back(fn);
      }
    }
  }

  CellKind kind_;
  int degree_;
  std::vector<LocalNode> nodes_;
  std::vector<Function> functions_;
};

/// Reference basis tabulated at the points of a quadrature rule.
struct Tabulation {
  QuadratureRule rule;
  std::vector<BasisValues> at;  // one entry per quadrature point

  Tabulation() = default;
  Tabulation(const ReferenceElement& element, QuadratureRule r) : rule(std::move(r)) {
    at.resize(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      element.evaluate(rule.points[q], at[q]);
    }
  }
};

}  // namespace monofem
