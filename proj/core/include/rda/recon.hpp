#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rda/mesh.hpp"
#include "rda/patch.hpp"
#include "rda/sparse.hpp"

namespace rda {

/// Raised when a patch cannot determine a unique fit and the minimum-norm
/// fallback was not requested.
class UnisolvenceError : public std::runtime_error {
 public:
  UnisolvenceError(int element, int rank, int required);
  int element() const { return element_; }

 private:
  int element_;
};

/// Degree-m polynomial on one element in the scaled-centered monomial basis
/// ((x - x_K) / h_K)^alpha, graded-lex order.
struct LocalPolynomial {
  int owner = -1;
  int degree = 0;
  Eigen::VectorXd coeffs;
};

/// Linear map from the values at a patch's collocation points to the
/// coefficients of the constrained fit: coeffs = map * values.
struct LocalOperator {
  Eigen::MatrixXd map;  // dim P_m x |S(K)|
  int rank = 0;         // rank of the constraint-eliminated Vandermonde
  bool min_norm = false;
};

struct ReconOptions {
  bool allow_min_norm = false;
};

/// Builds the local operator. The constraint p(x_K) = v_K is eliminated by
/// fixing the constant coefficient; the remaining coefficients solve an
/// unconstrained least-squares problem by pivoted QR.
LocalOperator local_operator(const Mesh& mesh, const ElementPatch& patch, int m, ReconOptions opts = {});

/// values[i] is the datum at patch.members[i].
LocalPolynomial local_fit(const Mesh& mesh, const ElementPatch& patch, int m, std::span<const double> values,
                          ReconOptions opts = {});

/// Evaluates a local polynomial at x.
double evaluate(const Mesh& mesh, const LocalPolynomial& p, const Point& x);

struct LambdaEstimate {
  double value = 1.0;
  bool finite = true;
};

/// Default sample set: all vertices and barycenters of the patch members.
std::vector<Point> default_lambda_samples(const Mesh& mesh, const ElementPatch& patch);

/// max over samples s and p in P_m of |p(s)| / max_{I(K)} |p|, solved exactly
/// per sample as the linear program min ||w||_1 s.t. E_I^T w = e(s).
LambdaEstimate lambda_estimate(const Mesh& mesh, const ElementPatch& patch, int m,
                               std::span<const Point> samples);

/// ||E_S E_I^+||_inf, an upper bound for lambda_estimate.
double lambda_upper_bound(const Mesh& mesh, const ElementPatch& patch, int m, std::span<const Point> samples);

/// Global reconstruction R: piecewise-constant dofs -> stacked element
/// coefficients, shape (n_e * dim P_m) x n_e.
class ReconstructionOperator {
 public:
  ReconstructionOperator() = default;

  int degree() const { return m_; }
  int dim() const { return dim_; }
  int num_elements() const { return static_cast<int>(members_.size()); }
  int num_basis() const { return n_basis_; }

  /// Columns (element indices) of block K, in patch order.
  const std::vector<int>& members(int k) const { return members_[k]; }
  /// dim P_m x |S(K)| block.
  const Eigen::MatrixXd& block(int k) const { return blocks_[k]; }
  bool used_min_norm(int k) const { return min_norm_[k] != 0; }
  bool any_min_norm() const;

  /// supp(lambda_j): elements K with j in S(K), ascending.
  const std::vector<int>& support(int j) const { return support_[j]; }

  /// Stacked coefficients for all elements.
  Eigen::VectorXd apply(std::span<const double> dofs) const;
  LocalPolynomial local(int k, std::span<const double> dofs) const;
  double evaluate(const Mesh& mesh, std::span<const double> dofs, int k, const Point& x) const;

  /// Deterministic CSR layout: row k * P + i, sorted member columns.
  CSRMatrix matrix() const;

  /// Fills per-element Lambda estimates with the default sample sets.
  void compute_lambda(const Mesh& mesh, const std::vector<ElementPatch>& patches);
  const std::vector<double>& lambda_estimates() const { return lambda_; }
  double lambda_max() const;

 private:
  friend ReconstructionOperator build_operator(const Mesh&, const std::vector<ElementPatch>&, int, ReconOptions);

  int m_ = 0;
  int dim_ = 2;
  int n_basis_ = 1;
  std::vector<std::vector<int>> members_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<char> min_norm_;
  std::vector<std::vector<int>> support_;
  std::vector<double> lambda_;
};

ReconstructionOperator build_operator(const Mesh& mesh, const std::vector<ElementPatch>& patches, int m,
                                      ReconOptions opts = {});

}  // namespace rda
