#pragma once

#include <span>
#include <vector>

#include "rda/mesh.hpp"

namespace rda {

struct QuadratureRule {
  int dim = 0;  // dimension of the integration domain
  int degree = 0;
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double weight_sum() const;
};

inline constexpr int kMaxTriangleDegree = 10;
inline constexpr int kMaxTetDegree = 8;
inline constexpr int kMaxSegmentDegree = 41;

/// Gauss-Legendre nodes and weights on [-1, 1].
QuadratureRule gauss_legendre(int npoints);

/// Rule on the reference simplex (0,0),(1,0),(0,1) or the unit tetrahedron,
/// exact for polynomials of total degree <= `degree`. Degrees 1-2 use the
/// classical symmetric rules, higher degrees a collapsed tensor Gauss rule.
QuadratureRule simplex_rule(int dim, int degree);

/// Rule on the reference face of a `dim`-dimensional element: [-1, 1] for
/// dim = 2, the reference triangle for dim = 3.
QuadratureRule face_rule(int dim, int degree);

/// Physical rule on a simple counter-clockwise polygon, built by fanning
/// triangles from the area centroid.
QuadratureRule polygon_rule(std::span<const Point> polygon, int degree);

/// Physical rule on element `k` of `mesh`.
QuadratureRule element_rule(const Mesh& mesh, std::size_t k, int degree);

/// Physical rule on face `f`; weights include the face measure.
QuadratureRule face_quadrature(const Mesh& mesh, std::size_t f, int degree);

}  // namespace rda
