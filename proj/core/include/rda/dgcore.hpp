#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rda/mesh.hpp"
#include "rda/polynomial.hpp"
#include "rda/recon.hpp"
#include "rda/sparse.hpp"

namespace rda {

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Point(const Point&)>;
using TensorField = std::function<Eigen::Matrix3d(const Point&)>;

/// -div(A grad u) = f in the domain, u = g on the boundary.
struct EllipticProblem {
  std::string name;
  int dim = 2;
  Box domain;
  TensorField A;  // symmetric positive definite; only the leading dim x dim block is used
  ScalarField f;
  ScalarField g;
  ScalarField u_exact;     // optional
  VectorField grad_exact;  // optional
  double theta = -1.0;     // -1 symmetric, +1 nonsymmetric
  double mu = 15.0;

  bool has_exact() const { return static_cast<bool>(u_exact); }
  /// Throws std::invalid_argument on mu <= 0, |theta| != 1, or a
  /// non-SPD coefficient at the given points.
  void validate(std::span<const Point> sample_points = {}) const;
};

/// Broken P_m space with the scaled-centered monomial basis on every element.
class BrokenSpace {
 public:
  BrokenSpace(const Mesh& mesh, int m);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return m_; }
  int num_basis() const { return basis_.size(); }
  int num_dofs() const { return static_cast<int>(mesh_->num_elements()) * basis_.size(); }
  const MonomialBasis& basis() const { return basis_; }

  void eval(int k, const Point& x, Eigen::Ref<Eigen::VectorXd> values) const;
  /// Physical gradients, one row per basis function (P x dim).
  void eval_grad(int k, const Point& x, Eigen::Ref<Eigen::MatrixXd> grads) const;

 private:
  const Mesh* mesh_;
  int m_;
  MonomialBasis basis_;
};

/// Coefficients of the four face/volume groups of the interior penalty form
///   a(u, v) = volume * (A grad u, grad v)_K
///           + consistency * <{A grad u}, [v]>
///           + symmetry * <{A grad v}, [u]>
///           + penalty * <h_e^-1 [u], [v]>
struct FormWeights {
  double volume = 1.0;
  double consistency = -1.0;
  double symmetry = -1.0;
  double penalty = 15.0;

  static FormWeights full(double theta, double mu) { return {1.0, -1.0, theta, mu}; }
  /// Symmetric part of the nonsymmetric form.
  static FormWeights symmetric_part(double mu) { return {1.0, 0.0, 0.0, mu}; }
  /// A^N such that A_{m,1} = A^S - A^N.
  static FormWeights antisymmetric_part() { return {0.0, 1.0, -1.0, 0.0}; }
};

enum class SpaceTag { dg, rda, pwc };

struct AssembledSystem {
  CSRMatrix A;
  Eigen::VectorXd b;
  SpaceTag tag = SpaceTag::dg;
  int degree = 0;
};

struct AssemblyOptions {
  int volume_degree = -1;  // default 2m
  int face_degree = -1;    // default 2m+1
  int data_degree = -1;    // default 2m+2
  bool with_rhs = true;
};

/// Standard broken-P_m interior penalty matrix (n_e P x n_e P) and load vector.
AssembledSystem assemble_dg(const BrokenSpace& space, const EllipticProblem& prob, const FormWeights& w,
                            AssemblyOptions opts = {});
inline AssembledSystem assemble_dg(const BrokenSpace& space, const EllipticProblem& prob) {
  return assemble_dg(space, prob, FormWeights::full(prob.theta, prob.mu));
}

/// R^T A_DG R and R^T b_DG assembled element by element without forming A_DG.
AssembledSystem assemble_rda(const BrokenSpace& space, const ReconstructionOperator& R, const EllipticProblem& prob,
                             const FormWeights& w, AssemblyOptions opts = {});
inline AssembledSystem assemble_rda(const BrokenSpace& space, const ReconstructionOperator& R,
                                    const EllipticProblem& prob) {
  return assemble_rda(space, R, prob, FormWeights::full(prob.theta, prob.mu));
}

/// Generic sparse triple product R^T A R, R^T b.
AssembledSystem compose_rda(const AssembledSystem& dg, const ReconstructionOperator& R);

/// Piecewise-constant jump form sum_e h_e^-1 <[v], [w]>.
AssembledSystem assemble_a0(const Mesh& mesh);

/// Block-diagonal broken mass matrix.
CSRMatrix assemble_mass(const BrokenSpace& space);
/// R^T M_DG R.
CSRMatrix assemble_rda_mass(const BrokenSpace& space, const ReconstructionOperator& R);

struct ErrorNorms {
  double l2 = 0.0;
  double energy = 0.0;
  double energy_tilde = 0.0;
};

/// Errors of the discrete solution against prob.u_exact. With R, `dofs`
/// holds one value per element; without, broken-space coefficients.
ErrorNorms error_norms(const BrokenSpace& space, const ReconstructionOperator* R, std::span<const double> dofs,
                       const EllipticProblem& prob);

/// L2 projection of a field onto the broken space (element by element).
Eigen::VectorXd l2_projection(const BrokenSpace& space, const ScalarField& u);

}  // namespace rda
