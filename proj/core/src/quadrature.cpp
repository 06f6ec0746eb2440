#include "rda/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace rda {

double QuadratureRule::weight_sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.dim = 1;
  rule.degree = 2 * n - 1;
  rule.points.resize(n, Point::Zero());
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i].x() = -x;
    rule.points[n - 1 - i].x() = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2].x() = 0.0;
  return rule;
}

namespace {

struct Gauss01 {
  std::vector<double> x, w;
};

Gauss01 gauss01(int n) {
  const auto g = gauss_legendre(n);
  Gauss01 r;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(0.5 * (g.points[i].x() + 1.0));
    r.w.push_back(0.5 * g.weights[i]);
  }
  return r;
}

int npts(int exact_degree) { return std::max(1, (exact_degree + 2) / 2); }

QuadratureRule collapsed_triangle(int degree) {
  QuadratureRule rule;
  rule.dim = 2;
  rule.degree = degree;
  const auto gu = gauss01(npts(degree));
  const auto gv = gauss01(npts(degree + 1));
  for (std::size_t j = 0; j < gv.x.size(); ++j)
    for (std::size_t i = 0; i < gu.x.size(); ++i) {
      const double v = gv.x[j];
      rule.points.emplace_back(gu.x[i] * (1.0 - v), v, 0.0);
      rule.weights.push_back(gu.w[i] * gv.w[j] * (1.0 - v));
    }
  return rule;
}

QuadratureRule collapsed_tet(int degree) {
  QuadratureRule rule;
  rule.dim = 3;
  rule.degree = degree;
  const auto ga = gauss01(npts(degree));
  const auto gb = gauss01(npts(degree + 1));
  const auto gc = gauss01(npts(degree + 2));
  for (std::size_t k = 0; k < gc.x.size(); ++k)
    for (std::size_t j = 0; j < gb.x.size(); ++j)
      for (std::size_t i = 0; i < ga.x.size(); ++i) {
        const double a = ga.x[i], b = gb.x[j], c = gc.x[k];
        rule.points.emplace_back(a * (1.0 - b) * (1.0 - c), b * (1.0 - c), c);
        rule.weights.push_back(ga.w[i] * gb.w[j] * gc.w[k] * (1.0 - b) * (1.0 - c) * (1.0 - c));
      }
  return rule;
}

}  // namespace

QuadratureRule simplex_rule(int dim, int degree) {
  if (degree < 0) throw std::invalid_argument("simplex_rule: negative degree");
  QuadratureRule rule;
  rule.dim = dim;
  if (dim == 2) {
    if (degree > kMaxTriangleDegree)
      throw std::invalid_argument("simplex_rule: triangle degree " + std::to_string(degree) + " unsupported");
    if (degree <= 1) {
      rule.degree = 1;
      rule.points = {Point(1.0 / 3.0, 1.0 / 3.0, 0.0)};
      rule.weights = {0.5};
      return rule;
    }
    if (degree == 2) {
      rule.degree = 2;
      rule.points = {Point(1.0 / 6.0, 1.0 / 6.0, 0.0), Point(2.0 / 3.0, 1.0 / 6.0, 0.0),
                     Point(1.0 / 6.0, 2.0 / 3.0, 0.0)};
      rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
      return rule;
    }
    return collapsed_triangle(degree);
  }
  if (dim == 3) {
    if (degree > kMaxTetDegree)
      throw std::invalid_argument("simplex_rule: tetrahedron degree " + std::to_string(degree) + " unsupported");
    if (degree <= 1) {
      rule.degree = 1;
      rule.points = {Point(0.25, 0.25, 0.25)};
      rule.weights = {1.0 / 6.0};
      return rule;
    }
    if (degree == 2) {
      rule.degree = 2;
      const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
      const double b = (5.0 - std::sqrt(5.0)) / 20.0;
      rule.points = {Point(b, b, b), Point(a, b, b), Point(b, a, b), Point(b, b, a)};
      rule.weights.assign(4, 1.0 / 24.0);
      return rule;
    }
    return collapsed_tet(degree);
  }
  throw std::invalid_argument("simplex_rule: dim must be 2 or 3");
}

QuadratureRule face_rule(int dim, int degree) {
  if (dim == 2) {
    if (degree < 0 || degree > kMaxSegmentDegree)
      throw std::invalid_argument("face_rule: segment degree " + std::to_string(degree) + " unsupported");
    return gauss_legendre(npts(degree));
  }
  if (dim == 3) return simplex_rule(2, degree);
  throw std::invalid_argument("face_rule: dim must be 2 or 3");
}

namespace {

void append_mapped_triangle(QuadratureRule& out, const QuadratureRule& ref, const Point& a, const Point& b,
                            const Point& c) {
  const Point e1 = b - a, e2 = c - a;
  const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
  for (std::size_t q = 0; q < ref.size(); ++q) {
    out.points.push_back(a + ref.points[q].x() * e1 + ref.points[q].y() * e2);
    out.weights.push_back(ref.weights[q] * jac);
  }
}

}  // namespace

QuadratureRule polygon_rule(std::span<const Point> polygon, int degree) {
  if (polygon.size() < 3) throw std::invalid_argument("polygon_rule: need at least 3 vertices");
  const auto ref = simplex_rule(2, degree);

  double area = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point& p = polygon[i];
    const Point& q = polygon[(i + 1) % polygon.size()];
    const double cr = p.x() * q.y() - q.x() * p.y();
    area += cr;
    c.x() += (p.x() + q.x()) * cr;
    c.y() += (p.y() + q.y()) * cr;
  }
  area *= 0.5;
  if (!(area > 0.0)) throw std::invalid_argument("polygon_rule: polygon is not counter-clockwise");
  c /= 6.0 * area;

  QuadratureRule rule;
  rule.dim = 2;
  rule.degree = ref.degree;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point& p = polygon[i];
    const Point& q = polygon[(i + 1) % polygon.size()];
    const double tri = 0.5 * ((p - c).x() * (q - c).y() - (p - c).y() * (q - c).x());
    if (!(tri > 1e-14 * area))
      throw std::invalid_argument("polygon_rule: degenerate fan triangle at edge " + std::to_string(i));
    append_mapped_triangle(rule, ref, c, p, q);
  }
  return rule;
}

QuadratureRule element_rule(const Mesh& mesh, std::size_t k, int degree) {
  const auto pts = mesh.element_points(k);
  if (mesh.kind() == ElementKind::polygonal) return polygon_rule(pts, degree);
  const auto ref = simplex_rule(mesh.dim(), degree);
  QuadratureRule rule;
  rule.dim = mesh.dim();
  rule.degree = ref.degree;
  if (mesh.dim() == 2) {
    append_mapped_triangle(rule, ref, pts[0], pts[1], pts[2]);
    return rule;
  }
  Eigen::Matrix3d J;
  J << pts[1] - pts[0], pts[2] - pts[0], pts[3] - pts[0];
  const double jac = std::abs(J.determinant());
  rule.points.reserve(ref.size());
  for (std::size_t q = 0; q < ref.size(); ++q) {
    rule.points.push_back(pts[0] + J * ref.points[q]);
    rule.weights.push_back(ref.weights[q] * jac);
  }
  return rule;
}

QuadratureRule face_quadrature(const Mesh& mesh, std::size_t f, int degree) {
  const Face& face = mesh.face(f);
  const auto ref = face_rule(mesh.dim(), degree);
  QuadratureRule rule;
  rule.dim = mesh.dim() - 1;
  rule.degree = ref.degree;
  const Point& a = mesh.vertex(face.vertices[0]);
  const Point& b = mesh.vertex(face.vertices[1]);
  if (mesh.dim() == 2) {
    for (std::size_t q = 0; q < ref.size(); ++q) {
      const double t = 0.5 * (ref.points[q].x() + 1.0);
      rule.points.push_back(a + t * (b - a));
      rule.weights.push_back(0.5 * ref.weights[q] * face.measure);
    }
    return rule;
  }
  const Point& c = mesh.vertex(face.vertices[2]);
  for (std::size_t q = 0; q < ref.size(); ++q) {
    rule.points.push_back(a + ref.points[q].x() * (b - a) + ref.points[q].y() * (c - a));
    rule.weights.push_back(ref.weights[q] * 2.0 * face.measure);
  }
  return rule;
}

}  // namespace rda
