#pragma once

// Poisson problem on the unit square with exact solution sin(pi x) sin(pi y).

#include <cmath>
#include <numbers>

#include "mlq/fem.hpp"
#include "oracles.hpp"

namespace manufactured {

inline mlq::ProblemSpec problem() {
  using namespace mlq;
  const double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "manufactured";
  p.domain = Domain::unit_square;
  p.coeff = AffineCoefficient(SpatialFunction::constant(1.0), {});
  p.source = SpatialFunction(2 * pi * pi, {Builtin{Builtin::Kind::sine, {0.0, 0.5}},
                                           Builtin{Builtin::Kind::sine, {1.0, 0.5}}});
  return p;
}

/// H1 error against the exact solution, integrated with a degree-5 rule per triangle.
inline double h1_error(const mlq::ScalarField& uh) {
  const auto rule = oracle::triangle_rule_degree5();
  const double pi = std::numbers::pi;
  const mlq::Mesh& m = *uh.mesh;
  double sum = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    const mlq::Point2 p[3] = {m.vertices()[tri[0]], m.vertices()[tri[1]], m.vertices()[tri[2]]};
    const double area = m.signed_area(t);
    double gx = 0, gy = 0;
    for (int i = 0; i < 3; ++i) {
      const auto& a = p[(i + 1) % 3];
      const auto& b = p[(i + 2) % 3];
      gx += uh.values[tri[i]] * (a.y - b.y) / (2 * area);
      gy += uh.values[tri[i]] * (b.x - a.x) / (2 * area);
    }
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& l = rule.bary[q];
      const double x = l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x;
      const double y = l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y;
      const double uhq = l[0] * uh.values[tri[0]] + l[1] * uh.values[tri[1]] + l[2] * uh.values[tri[2]];
      const double u = std::sin(pi * x) * std::sin(pi * y);
      const double ux = pi * std::cos(pi * x) * std::sin(pi * y);
      const double uy = pi * std::sin(pi * x) * std::cos(pi * y);
      sum += area * rule.weights[q] *
             ((ux - gx) * (ux - gx) + (uy - gy) * (uy - gy) + (u - uhq) * (u - uhq));
    }
  }
  return std::sqrt(sum);
}

}  // namespace manufactured
