#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rda/mesh.hpp"
#include "rda/sparse.hpp"

namespace rda {

/// Fixed linear operator z = M^-1 r.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
  virtual std::string name() const = 0;
  virtual int size() const = 0;
  /// Non-fatal conditions met during setup (e.g. shifted pivots).
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  explicit IdentityPreconditioner(int n) : n_(n) {}
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "none"; }
  int size() const override { return n_; }

 private:
  int n_;
};

class JacobiPreconditioner final : public Preconditioner {
 public:
  /// Throws std::invalid_argument on a zero diagonal entry.
  explicit JacobiPreconditioner(const CSRMatrix& A);
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "jacobi"; }
  int size() const override { return static_cast<int>(inv_diag_.size()); }

 private:
  std::vector<double> inv_diag_;
};

/// Incomplete LU on the sparsity pattern of A, no fill.
class Ilu0Preconditioner final : public Preconditioner {
 public:
  explicit Ilu0Preconditioner(const CSRMatrix& A);
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "ilu0"; }
  int size() const override { return lu_.rows(); }
  int shifted_pivots() const { return shifted_; }

 private:
  CSRMatrix lu_;
  std::vector<int> diag_;
  int shifted_ = 0;
};

/// Exact solve by sparse factorization. `spd` selects LDL^T, otherwise LU.
class DirectPreconditioner final : public Preconditioner {
 public:
  DirectPreconditioner(const CSRMatrix& A, bool spd, std::string label = "direct");
  ~DirectPreconditioner() override;
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return label_; }
  int size() const override { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_;
  std::string label_;
};

struct MGOptions {
  int pre_sweeps = 10;
  int post_sweeps = 10;
  int corrections = 1;  // q
};

struct MGLevel {
  CSRMatrix A;           // A_k^0
  CSRMatrix prolong;     // to the next finer level; empty on the finest
  std::vector<int> diag; // position of a_ii in A
};

/// Piecewise-constant multigrid hierarchy, level 0 coarsest.
class MGHierarchy {
 public:
  MGHierarchy(std::vector<MGLevel> levels, MGOptions opts);
  ~MGHierarchy();
  MGHierarchy(MGHierarchy&&) noexcept;
  MGHierarchy& operator=(MGHierarchy&&) noexcept;

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const MGLevel& level(int k) const { return levels_[k]; }
  const MGOptions& options() const { return opts_; }
  int fine_size() const { return levels_.back().A.rows(); }

  /// One cycle from a zero initial guess on the finest level.
  Eigen::VectorXd vcycle(std::span<const double> r) const;
  /// One cycle from x on level k (the recursion of the multigrid solver).
  void cycle(int k, Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

 private:
  std::vector<MGLevel> levels_;
  MGOptions opts_;
  struct Coarse;
  std::unique_ptr<Coarse> coarse_;
};

/// A_k^0 rediscretized on every mesh, injection prolongation from the parent
/// maps. Throws std::invalid_argument unless meshes[k] refines meshes[k-1].
MGHierarchy build_mg(const std::vector<Mesh>& meshes, MGOptions opts = {});

Eigen::VectorXd mg_vcycle(const MGHierarchy& h, std::span<const double> r);

/// max_k ||P^T A_k P - s A_{k-1}||_max / ||A_{k-1}||_max together with the
/// least-squares scale s (s = 1 means the hierarchy is Galerkin).
struct GalerkinReport {
  double mismatch = 0.0;
  double scaled_mismatch = 0.0;
  double scale = 1.0;
};
GalerkinReport galerkin_check(const MGHierarchy& h);

class MultigridPreconditioner final : public Preconditioner {
 public:
  explicit MultigridPreconditioner(std::shared_ptr<const MGHierarchy> h) : h_(std::move(h)) {}
  void apply(std::span<const double> r, std::span<double> z) const override;
  std::string name() const override { return "a0-mg"; }
  int size() const override { return h_->fine_size(); }
  const MGHierarchy& hierarchy() const { return *h_; }

 private:
  std::shared_ptr<const MGHierarchy> h_;
};

struct GmresOptions {
  int restart = 100;
  double tol = 1e-8;
  int maxit = 10000;
};

struct SolveStats {
  int iterations = 0;
  int restarts = 0;
  double relres = 0.0;
  double seconds = 0.0;
  bool converged = false;
  std::vector<std::pair<int, double>> history;  // (iteration, true or estimated relres)
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveStats stats;
};

/// Left-preconditioned restarted GMRES. Stops on ||b - Ax|| / ||b|| <= tol
/// (true residual). Throws std::runtime_error on NaN.
SolveResult gmres(const CSRMatrix& A, std::span<const double> b, const Preconditioner& M, GmresOptions opts = {},
                  std::span<const double> x0 = {});

void write_residual_history(const SolveStats& stats, const std::filesystem::path& path);

enum class CondMode { dense, iterative };

/// euclidean: singular values of B^-1 A in the l2 norm.
/// energy: singular values of B^-1 A in the B inner product, i.e. of
/// L^-1 A L^-T with B = L L^T. Same as euclidean when B is absent.
enum class CondNorm { euclidean, energy };

struct ConditionEstimate {
  double kappa = 0.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  CondMode mode = CondMode::dense;
  bool converged = true;
};

/// sigma_max / sigma_min of A, or of B^-1 A when B (SPD) is given.
/// Dense mode needs n <= dense_limit. Throws std::runtime_error on a
/// singular operator.
ConditionEstimate condition_estimate(const CSRMatrix& A, const CSRMatrix* B, CondMode mode, int dense_limit = 6000,
                                     CondNorm norm = CondNorm::euclidean);

}  // namespace rda
