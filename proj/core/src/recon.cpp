#include "rda/recon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>

#include "rda/polynomial.hpp"

namespace rda {

UnisolvenceError::UnisolvenceError(int element, int rank, int required)
    : std::runtime_error("element " + std::to_string(element) + ": collocation set is not unisolvent (rank " +
                         std::to_string(rank) + " < " + std::to_string(required) +
                         "); enlarge the patch threshold or enable the minimum-norm fallback"),
      element_(element) {}

namespace {

Eigen::MatrixXd vandermonde(const MonomialBasis& basis, const ScaledFrame& frame, std::span<const Point> pts) {
  Eigen::MatrixXd V(static_cast<Eigen::Index>(pts.size()), basis.size());
  Eigen::VectorXd row(basis.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    basis.eval(frame.to_local(pts[i]), row);
    V.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return V;
}

// Dense two-phase simplex on min c^T x, A x = b, x >= 0, Bland's rule.
// Small problems only; returns +inf when infeasible.
class Simplex {
 public:
  Simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) : m_(A.rows()), n_(A.cols()) {
    T_ = Eigen::MatrixXd::Zero(m_ + 1, n_ + m_ + 1);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double s = b(i) < 0 ? -1.0 : 1.0;
      T_.row(i).head(n_) = s * A.row(i);
      T_(i, n_ + i) = 1.0;
      T_(i, rhs()) = s * b(i);
    }
    basis_.resize(m_);
    std::iota(basis_.begin(), basis_.end(), static_cast<int>(n_));
    scale_ = std::max(1.0, A.cwiseAbs().maxCoeff());
  }

  double minimize(const Eigen::VectorXd& c) {
    // Phase 1: minimize the sum of artificials.
    for (Eigen::Index j = 0; j < n_; ++j) T_(m_, j) = -T_.col(j).head(m_).sum();
    T_(m_, rhs()) = -T_.col(rhs()).head(m_).sum();
    run(n_ + m_);
    if (-T_(m_, rhs()) > 1e-9 * scale_) return std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      for (Eigen::Index j = 0; j < n_; ++j)
        if (std::abs(T_(r, j)) > tol()) {
          pivot(r, j);
          break;
        }
    }
    // Phase 2 over the original columns.
    T_.row(m_).setZero();
    for (Eigen::Index j = 0; j < n_; ++j) T_(m_, j) = c(j);
    for (Eigen::Index r = 0; r < m_; ++r) {
      if (basis_[r] >= n_) continue;
      const double cb = c(basis_[r]);
      if (cb != 0.0) T_.row(m_) -= cb * T_.row(r);
    }
    if (!run(n_)) return -std::numeric_limits<double>::infinity();
    return -T_(m_, rhs());
  }

 private:
  Eigen::Index rhs() const { return n_ + m_; }
  double tol() const { return 1e-11 * scale_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    T_.row(r) /= T_(r, c);
    for (Eigen::Index i = 0; i <= m_; ++i)
      if (i != r && T_(i, c) != 0.0) T_.row(i) -= T_(i, c) * T_.row(r);
    basis_[r] = static_cast<int>(c);
  }

  // false when unbounded
  bool run(Eigen::Index ncols) {
    for (int iter = 0; iter < 100000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols; ++j)
        if (T_(m_, j) < -tol()) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (T_(i, enter) <= tol()) continue;
        const double ratio = T_(i, rhs()) / T_(i, enter);
        if (leave < 0 || ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration limit reached");
  }

  Eigen::Index m_, n_;
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
  double scale_ = 1.0;
};

}  // namespace

LocalOperator local_operator(const Mesh& mesh, const ElementPatch& patch, int m, ReconOptions opts) {
  if (patch.members.empty() || patch.members.front() != patch.owner)
    throw std::invalid_argument("local_operator: patch must list its owner first");
  const MonomialBasis basis(mesh.dim(), m);
  const int P = basis.size();
  const auto n = static_cast<Eigen::Index>(patch.members.size());

  LocalOperator op;
  op.map = Eigen::MatrixXd::Zero(P, n);
  op.map(0, 0) = 1.0;
  if (P == 1) return op;

  const Eigen::MatrixXd V = vandermonde(basis, element_frame(mesh, patch.owner), patch.collocation);
  const Eigen::MatrixXd Vr = V.rightCols(P - 1);

  Eigen::MatrixXd pinv;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Vr);
  qr.setThreshold(1e-10);
  op.rank = static_cast<int>(qr.rank());
  if (op.rank == P - 1) {
    pinv = qr.solve(Eigen::MatrixXd::Identity(n, n));
  } else {
    if (!opts.allow_min_norm) throw UnisolvenceError(patch.owner, op.rank + 1, P);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Vr);
    cod.setThreshold(1e-10);
    pinv = cod.pseudoInverse();
    op.min_norm = true;
  }
  // Fit (v_S - v_K 1): columns of the data map shift by -rowsum into column 0.
  op.map.bottomRows(P - 1) = pinv;
  op.map.bottomRows(P - 1).col(0) -= pinv.rowwise().sum();
  return op;
}

LocalPolynomial local_fit(const Mesh& mesh, const ElementPatch& patch, int m, std::span<const double> values,
                          ReconOptions opts) {
  if (values.size() != patch.members.size())
    throw std::invalid_argument("local_fit: one value per patch member required");
  const auto op = local_operator(mesh, patch, m, opts);
  LocalPolynomial p;
  p.owner = patch.owner;
  p.degree = m;
  p.coeffs = op.map * Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return p;
}

double evaluate(const Mesh& mesh, const LocalPolynomial& p, const Point& x) {
  const MonomialBasis basis(mesh.dim(), p.degree);
  Eigen::VectorXd phi(basis.size());
  basis.eval(element_frame(mesh, p.owner).to_local(x), phi);
  return phi.dot(p.coeffs);
}

std::vector<Point> default_lambda_samples(const Mesh& mesh, const ElementPatch& patch) {
  std::vector<int> verts;
  for (int k : patch.members)
    for (int v : mesh.element(k)) verts.push_back(v);
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  std::vector<Point> out;
  out.reserve(verts.size() + patch.members.size());
  for (int v : verts) out.push_back(mesh.vertex(v));
  for (int k : patch.members) out.push_back(mesh.barycenter(k));
  return out;
}

LambdaEstimate lambda_estimate(const Mesh& mesh, const ElementPatch& patch, int m, std::span<const Point> samples) {
  const MonomialBasis basis(mesh.dim(), m);
  const auto frame = element_frame(mesh, patch.owner);
  const Eigen::MatrixXd EI = vandermonde(basis, frame, patch.collocation);
  LambdaEstimate est;
  if (basis.size() == 1) return est;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(EI);
  qr.setThreshold(1e-10);
  if (qr.rank() < basis.size()) {
    est.value = std::numeric_limits<double>::infinity();
    est.finite = false;
    return est;
  }
  const Eigen::MatrixXd ES = vandermonde(basis, frame, samples);
  const Eigen::Index n = EI.rows();
  Eigen::MatrixXd A(EI.cols(), 2 * n);
  A << EI.transpose(), -EI.transpose();
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(2 * n);
  est.value = 1.0;
  for (Eigen::Index s = 0; s < ES.rows(); ++s) {
    Simplex lp(A, ES.row(s).transpose());
    est.value = std::max(est.value, lp.minimize(c));
  }
  return est;
}

double lambda_upper_bound(const Mesh& mesh, const ElementPatch& patch, int m, std::span<const Point> samples) {
  const MonomialBasis basis(mesh.dim(), m);
  const auto frame = element_frame(mesh, patch.owner);
  const Eigen::MatrixXd EI = vandermonde(basis, frame, patch.collocation);
  const Eigen::MatrixXd ES = vandermonde(basis, frame, samples);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(EI);
  cod.setThreshold(1e-10);
  const Eigen::MatrixXd G = ES * cod.pseudoInverse();
  return G.cwiseAbs().rowwise().sum().maxCoeff();
}

bool ReconstructionOperator::any_min_norm() const {
  return std::any_of(min_norm_.begin(), min_norm_.end(), [](char c) { return c != 0; });
}

Eigen::VectorXd ReconstructionOperator::apply(std::span<const double> dofs) const {
  if (static_cast<int>(dofs.size()) != num_elements())
    throw std::invalid_argument("ReconstructionOperator::apply: dof vector has wrong length");
  Eigen::VectorXd out(static_cast<Eigen::Index>(num_elements()) * n_basis_);
  for (int k = 0; k < num_elements(); ++k) {
    const auto& mem = members_[k];
    const auto& B = blocks_[k];
    auto seg = out.segment(static_cast<Eigen::Index>(k) * n_basis_, n_basis_);
    seg.setZero();
    for (std::size_t j = 0; j < mem.size(); ++j) seg += B.col(static_cast<Eigen::Index>(j)) * dofs[mem[j]];
  }
  return out;
}

LocalPolynomial ReconstructionOperator::local(int k, std::span<const double> dofs) const {
  LocalPolynomial p;
  p.owner = k;
  p.degree = m_;
  p.coeffs = Eigen::VectorXd::Zero(n_basis_);
  const auto& mem = members_[k];
  for (std::size_t j = 0; j < mem.size(); ++j) p.coeffs += blocks_[k].col(static_cast<Eigen::Index>(j)) * dofs[mem[j]];
  return p;
}

double ReconstructionOperator::evaluate(const Mesh& mesh, std::span<const double> dofs, int k, const Point& x) const {
  return rda::evaluate(mesh, local(k, dofs), x);
}

CSRMatrix ReconstructionOperator::matrix() const {
  const int ne = num_elements();
  std::vector<int> off{0}, ci;
  std::vector<double> v;
  for (int k = 0; k < ne; ++k) {
    const auto& mem = members_[k];
    std::vector<int> order(mem.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return mem[a] < mem[b]; });
    for (int i = 0; i < n_basis_; ++i) {
      for (int j : order) {
        ci.push_back(mem[j]);
        v.push_back(blocks_[k](i, j));
      }
      off.push_back(static_cast<int>(ci.size()));
    }
  }
  return CSRMatrix(ne * n_basis_, ne, std::move(off), std::move(ci), std::move(v));
}

void ReconstructionOperator::compute_lambda(const Mesh& mesh, const std::vector<ElementPatch>& patches) {
  lambda_.assign(num_elements(), 1.0);
  for (int k = 0; k < num_elements(); ++k) {
    const auto samples = default_lambda_samples(mesh, patches[k]);
    lambda_[k] = lambda_estimate(mesh, patches[k], m_, samples).value;
  }
}

double ReconstructionOperator::lambda_max() const {
  return lambda_.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : *std::max_element(lambda_.begin(), lambda_.end());
}

ReconstructionOperator build_operator(const Mesh& mesh, const std::vector<ElementPatch>& patches, int m,
                                      ReconOptions opts) {
  const int ne = static_cast<int>(mesh.num_elements());
  if (static_cast<int>(patches.size()) != ne) throw std::invalid_argument("build_operator: one patch per element");
  ReconstructionOperator op;
  op.m_ = m;
  op.dim_ = mesh.dim();
  op.n_basis_ = dim_polynomial_space(m, mesh.dim());
  op.members_.resize(ne);
  op.blocks_.resize(ne);
  op.min_norm_.assign(ne, 0);
  op.support_.assign(ne, {});
  for (int k = 0; k < ne; ++k) {
    auto local = local_operator(mesh, patches[k], m, opts);
    op.members_[k] = patches[k].members;
    op.blocks_[k] = std::move(local.map);
    op.min_norm_[k] = local.min_norm ? 1 : 0;
    for (int j : patches[k].members) op.support_[j].push_back(k);
  }
  return op;
}

}  // namespace rda
