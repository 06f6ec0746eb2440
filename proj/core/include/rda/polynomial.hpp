#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "rda/mesh.hpp"

namespace rda {

/// Number of monomials of total degree <= m in `dim` variables.
int dim_polynomial_space(int m, int dim);

/// Monomials x^a y^b (z^c) of total degree <= m in graded-lex order:
/// degree 0, then degree 1 (x, y, z), then degree 2 (x^2, xy, xz, y^2, ...).
class MonomialBasis {
 public:
  MonomialBasis(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }
  const std::array<int, 3>& exponent(int i) const { return exponents_[i]; }

  /// Values at a reference point xi (components beyond dim ignored).
  void eval(const Point& xi, Eigen::Ref<Eigen::VectorXd> out) const;
  /// Gradients with respect to xi, one row per basis function.
  void eval_grad(const Point& xi, Eigen::Ref<Eigen::MatrixXd> out) const;

 private:
  int dim_;
  int degree_;
  std::vector<std::array<int, 3>> exponents_;
};

/// Element-local frame for the basis ((x - x_K) / h_K)^alpha.
struct ScaledFrame {
  Point center;
  double scale;

  Point to_local(const Point& x) const { return (x - center) / scale; }
};

inline ScaledFrame element_frame(const Mesh& mesh, std::size_t k) {
  return {mesh.barycenter(k), mesh.diameter(k)};
}

}  // namespace rda
