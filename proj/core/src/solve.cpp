#include "rda/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <locale>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <lapacke.h>

#include "rda/dgcore.hpp"

namespace rda {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

void require_square(const CSRMatrix& A, const char* who) {
  if (A.rows() != A.cols()) throw std::invalid_argument(std::string(who) + ": matrix must be square");
}

std::vector<int> diagonal_positions(const CSRMatrix& A) {
  std::vector<int> d(A.rows());
  for (int i = 0; i < A.rows(); ++i) {
    const auto p = A.find(i, i);
    if (p < 0 || A.values()[p] == 0.0) throw std::invalid_argument("zero diagonal entry in row " + std::to_string(i));
    d[i] = static_cast<int>(p);
  }
  return d;
}

void gauss_seidel(const CSRMatrix& A, const std::vector<int>& diag, Eigen::VectorXd& x, const Eigen::VectorXd& b,
                  bool forward) {
  const auto& off = A.row_offsets();
  const auto& ci = A.col_indices();
  const auto& v = A.values();
  const int n = A.rows();
  for (int t = 0; t < n; ++t) {
    const int i = forward ? t : n - 1 - t;
    double s = b(i);
    for (int p = off[i]; p < off[i + 1]; ++p)
      if (p != diag[i]) s -= v[p] * x(ci[p]);
    x(i) = s / v[diag[i]];
  }
}

Eigen::VectorXd residual(const CSRMatrix& A, std::span<const double> b, const Eigen::VectorXd& x) {
  Eigen::VectorXd r(A.rows());
  A.multiply(std::span<const double>(x.data(), x.size()), std::span<double>(r.data(), r.size()));
  for (int i = 0; i < A.rows(); ++i) r(i) = b[i] - r(i);
  return r;
}

}  // namespace

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  std::copy(r.begin(), r.end(), z.begin());
}

JacobiPreconditioner::JacobiPreconditioner(const CSRMatrix& A) {
  require_square(A, "jacobi");
  const auto d = A.diagonal();
  inv_diag_.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) throw std::invalid_argument("jacobi: zero diagonal entry in row " + std::to_string(i));
    inv_diag_[i] = 1.0 / d[i];
  }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t i = 0; i < inv_diag_.size(); ++i) z[i] = inv_diag_[i] * r[i];
}

Ilu0Preconditioner::Ilu0Preconditioner(const CSRMatrix& A) : lu_(A) {
  require_square(A, "ilu0");
  const int n = A.rows();
  const auto& off = lu_.row_offsets();
  const auto& ci = lu_.col_indices();
  auto& v = lu_.values();
  const double shift = 1e-12 * A.max_abs();
  diag_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const auto p = lu_.find(i, i);
    diag_[i] = static_cast<int>(p);
  }
  for (int i = 0; i < n; ++i) {
    for (int p = off[i]; p < off[i + 1] && ci[p] < i; ++p) {
      const int k = ci[p];
      v[p] /= v[diag_[k]];
      // row_i -= l_ik * row_k restricted to the pattern of row i
      int q = p + 1;
      for (int s = diag_[k] + 1; s < off[k + 1]; ++s) {
        const int j = ci[s];
        while (q < off[i + 1] && ci[q] < j) ++q;
        if (q < off[i + 1] && ci[q] == j) v[q] -= v[p] * v[s];
      }
    }
    if (diag_[i] < 0) throw std::invalid_argument("ilu0: structurally missing diagonal in row " + std::to_string(i));
    if (std::abs(v[diag_[i]]) <= shift || v[diag_[i]] == 0.0) {
      v[diag_[i]] = v[diag_[i]] >= 0.0 ? v[diag_[i]] + std::max(shift, 1e-300) : v[diag_[i]] - shift;
      ++shifted_;
    }
  }
  if (shifted_ > 0)
    warnings_.push_back("ilu0: " + std::to_string(shifted_) + " zero pivot(s) shifted by " + std::to_string(shift));
}

void Ilu0Preconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const int n = lu_.rows();
  const auto& off = lu_.row_offsets();
  const auto& ci = lu_.col_indices();
  const auto& v = lu_.values();
  for (int i = 0; i < n; ++i) {
    double s = r[i];
    for (int p = off[i]; p < diag_[i]; ++p) s -= v[p] * z[ci[p]];
    z[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = z[i];
    for (int p = diag_[i] + 1; p < off[i + 1]; ++p) s -= v[p] * z[ci[p]];
    z[i] = s / v[diag_[i]];
  }
}

struct DirectPreconditioner::Impl {
  SpMat A;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Eigen::SparseLU<SpMat> lu;
  bool spd = false;
};

DirectPreconditioner::DirectPreconditioner(const CSRMatrix& A, bool spd, std::string label)
    : impl_(std::make_unique<Impl>()), n_(A.rows()), label_(std::move(label)) {
  require_square(A, "direct");
  impl_->A = A.to_eigen();
  impl_->spd = spd;
  if (spd) {
    impl_->ldlt.compute(impl_->A);
    if (impl_->ldlt.info() != Eigen::Success) throw std::runtime_error("direct: LDL^T factorization failed");
  } else {
    impl_->lu.analyzePattern(impl_->A);
    impl_->lu.factorize(impl_->A);
    if (impl_->lu.info() != Eigen::Success) throw std::runtime_error("direct: LU factorization failed");
  }
}

DirectPreconditioner::~DirectPreconditioner() = default;

void DirectPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
  Eigen::Map<Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  zv = impl_->spd ? Eigen::VectorXd(impl_->ldlt.solve(rv)) : Eigen::VectorXd(impl_->lu.solve(rv));
}

struct MGHierarchy::Coarse {
  Eigen::SimplicialLDLT<SpMat> ldlt;
};

MGHierarchy::MGHierarchy(std::vector<MGLevel> levels, MGOptions opts)
    : levels_(std::move(levels)), opts_(opts), coarse_(std::make_unique<Coarse>()) {
  if (levels_.empty()) throw std::invalid_argument("mg: empty hierarchy");
  if (opts_.pre_sweeps < 0 || opts_.post_sweeps < 0 || opts_.corrections < 1)
    throw std::invalid_argument("mg: invalid sweep or correction counts");
  for (auto& l : levels_) l.diag = diagonal_positions(l.A);
  coarse_->ldlt.compute(levels_.front().A.to_eigen());
  if (coarse_->ldlt.info() != Eigen::Success) throw std::runtime_error("mg: coarse factorization failed");
}

MGHierarchy::~MGHierarchy() = default;
MGHierarchy::MGHierarchy(MGHierarchy&&) noexcept = default;
MGHierarchy& MGHierarchy::operator=(MGHierarchy&&) noexcept = default;

void MGHierarchy::cycle(int k, Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (k == 0) {
    x = coarse_->ldlt.solve(y);
    return;
  }
  const auto& L = levels_[k];
  for (int s = 0; s < opts_.pre_sweeps; ++s) gauss_seidel(L.A, L.diag, x, y, true);
  const Eigen::VectorXd r = residual(L.A, std::span<const double>(y.data(), y.size()), x);
  const auto& P = levels_[k - 1].prolong;
  Eigen::VectorXd rc(P.cols());
  P.multiply_transpose(std::span<const double>(r.data(), r.size()), std::span<double>(rc.data(), rc.size()));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(P.cols());
  for (int i = 0; i < opts_.corrections; ++i) cycle(k - 1, z, rc);
  Eigen::VectorXd pz(P.rows());
  P.multiply(std::span<const double>(z.data(), z.size()), std::span<double>(pz.data(), pz.size()));
  x += pz;
  for (int s = 0; s < opts_.post_sweeps; ++s) gauss_seidel(L.A, L.diag, x, y, false);
}

Eigen::VectorXd MGHierarchy::vcycle(std::span<const double> r) const {
  if (static_cast<int>(r.size()) != fine_size()) throw std::invalid_argument("mg: residual size mismatch");
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(y.size());
  cycle(num_levels() - 1, x, y);
  return x;
}

MGHierarchy build_mg(const std::vector<Mesh>& meshes, MGOptions opts) {
  if (meshes.empty()) throw std::invalid_argument("build_mg: no meshes");
  std::vector<MGLevel> levels(meshes.size());
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    levels[k].A = assemble_a0(meshes[k]).A;
    if (k == 0) continue;
    const auto& fine = meshes[k];
    const int nc = static_cast<int>(meshes[k - 1].num_elements());
    const int nf = static_cast<int>(fine.num_elements());
    if (!fine.has_parent() || static_cast<int>(fine.parent().size()) != nf)
      throw std::invalid_argument("build_mg: level " + std::to_string(k) + " has no parent map");
    const int children = fine.dim() == 2 ? 4 : 8;
    if (nf != children * nc) throw std::invalid_argument("build_mg: meshes are not nested");
    std::vector<int> count(nc, 0);
    std::vector<int> off(nf + 1), ci(nf);
    for (int i = 0; i < nf; ++i) {
      const int p = fine.parent()[i];
      if (p < 0 || p >= nc) throw std::invalid_argument("build_mg: parent index out of range");
      ++count[p];
      off[i + 1] = i + 1;
      ci[i] = p;
    }
    for (int c : count)
      if (c != children) throw std::invalid_argument("build_mg: meshes are not nested");
    levels[k - 1].prolong = CSRMatrix(nf, nc, std::move(off), std::move(ci), std::vector<double>(nf, 1.0));
  }
  return MGHierarchy(std::move(levels), opts);
}

Eigen::VectorXd mg_vcycle(const MGHierarchy& h, std::span<const double> r) { return h.vcycle(r); }

GalerkinReport galerkin_check(const MGHierarchy& h) {
  GalerkinReport rep;
  for (int k = 1; k < h.num_levels(); ++k) {
    const auto P = h.level(k - 1).prolong.to_eigen_rowmajor();
    const auto Af = h.level(k).A.to_eigen_rowmajor();
    const Eigen::MatrixXd G = Eigen::MatrixXd(SpMat(P.transpose()) * SpMat(Af) * SpMat(P));
    const Eigen::MatrixXd Ac = h.level(k - 1).A.to_dense();
    const double amax = Ac.cwiseAbs().maxCoeff();
    const double s = (G.array() * Ac.array()).sum() / Ac.squaredNorm();
    rep.mismatch = std::max(rep.mismatch, (G - Ac).cwiseAbs().maxCoeff() / amax);
    rep.scaled_mismatch = std::max(rep.scaled_mismatch, (G - s * Ac).cwiseAbs().maxCoeff() / amax);
    rep.scale = s;
  }
  return rep;
}

void MultigridPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const Eigen::VectorXd x = h_->vcycle(r);
  std::copy(x.data(), x.data() + x.size(), z.begin());
}

SolveResult gmres(const CSRMatrix& A, std::span<const double> b, const Preconditioner& M, GmresOptions opts,
                  std::span<const double> x0) {
  require_square(A, "gmres");
  const int n = A.rows();
  if (static_cast<int>(b.size()) != n || M.size() != n) throw std::invalid_argument("gmres: size mismatch");
  if (opts.restart < 1 || opts.tol <= 0.0 || opts.maxit < 0) throw std::invalid_argument("gmres: invalid options");
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  auto& st = res.stats;
  res.x = x0.empty() ? Eigen::VectorXd::Zero(n)
                     : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(n)));
  const double bnorm = norm2(b);
  const auto finish = [&] {
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(res);
  };
  if (bnorm == 0.0) {
    res.x.setZero();
    st.converged = true;
    st.history.emplace_back(0, 0.0);
    return finish();
  }
  Eigen::VectorXd r = residual(A, b, res.x);
  double relres = r.norm() / bnorm;
  st.relres = relres;
  st.history.emplace_back(0, relres);
  if (!std::isfinite(relres)) throw std::runtime_error("gmres: non-finite residual");
  Eigen::VectorXd best = res.x;
  double best_relres = relres;
  if (relres <= opts.tol) {
    st.converged = true;
    return finish();
  }
  const int m = opts.restart;
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs(m), sn(m), g(m + 1), w(n), Av(n);
  while (st.iterations < opts.maxit) {
    Eigen::VectorXd z(n);
    M.apply(std::span<const double>(r.data(), n), std::span<double>(z.data(), n));
    const double beta = z.norm();
    if (!std::isfinite(beta)) throw std::runtime_error("gmres: non-finite preconditioned residual");
    if (beta == 0.0) break;
    const double target = opts.tol / relres;
    V.col(0) = z / beta;
    H.setZero();
    g.setZero();
    g(0) = beta;
    int j = 0;
    for (; j < m && st.iterations < opts.maxit; ++j) {
      A.multiply(std::span<const double>(V.col(j).data(), n), std::span<double>(Av.data(), n));
      M.apply(std::span<const double>(Av.data(), n), std::span<double>(w.data(), n));
      for (int i = 0; i <= j; ++i) {
        H(i, j) = w.dot(V.col(i));
        w -= H(i, j) * V.col(i);
      }
      const double hnext = w.norm();
      H(j + 1, j) = hnext;
      if (!std::isfinite(hnext)) throw std::runtime_error("gmres: breakdown with non-finite values");
      if (hnext > 0.0) V.col(j + 1) = w / hnext;
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double rr = std::hypot(H(j, j), H(j + 1, j));
      cs(j) = rr == 0.0 ? 1.0 : H(j, j) / rr;
      sn(j) = rr == 0.0 ? 0.0 : H(j + 1, j) / rr;
      H(j, j) = rr;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      ++st.iterations;
      const double ratio = std::abs(g(j + 1)) / beta;
      st.history.emplace_back(st.iterations, relres * ratio);
      if (ratio <= target || hnext == 0.0) {
        ++j;
        break;
      }
    }
    if (j > 0) {
      const Eigen::VectorXd y =
          H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
      res.x += V.leftCols(j) * y;
    }
    ++st.restarts;
    r = residual(A, b, res.x);
    relres = r.norm() / bnorm;
    if (!std::isfinite(relres)) throw std::runtime_error("gmres: non-finite residual");
    st.history.emplace_back(st.iterations, relres);
    if (relres < best_relres) {
      best_relres = relres;
      best = res.x;
    }
    if (relres <= opts.tol) {
      st.converged = true;
      break;
    }
  }
  if (!st.converged) res.x = best;
  st.relres = st.converged ? relres : best_relres;
  return finish();
}

void write_residual_history(const SolveStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "iteration,relres\n";
  for (const auto& [it, r] : stats.history) out << it << ',' << r << '\n';
}

namespace {

ConditionEstimate dense_condition(const CSRMatrix& A, const CSRMatrix* B, CondNorm norm) {
  Eigen::MatrixXd D = A.to_dense();
  if (B) {
    Eigen::LLT<Eigen::MatrixXd> llt(B->to_dense());
    if (llt.info() != Eigen::Success) throw std::invalid_argument("condition_estimate: B is not SPD");
    if (norm == CondNorm::energy) {
      const auto L = llt.matrixL();
      const Eigen::MatrixXd X = L.solve(D.transpose());
      D = L.solve(X.transpose());
    } else {
      D = llt.solve(D);
    }
  }
  const lapack_int n = static_cast<lapack_int>(D.rows());
  Eigen::VectorXd s(n);
  const lapack_int info =
      LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', n, n, D.data(), n, s.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw std::runtime_error("condition_estimate: SVD failed (info " + std::to_string(info) + ")");
  ConditionEstimate c;
  c.mode = CondMode::dense;
  c.sigma_max = s(0);
  c.sigma_min = s(n - 1);
  if (c.sigma_min <= std::numeric_limits<double>::epsilon() * n * c.sigma_max)
    throw std::runtime_error("condition_estimate: operator is numerically singular");
  c.kappa = c.sigma_max / c.sigma_min;
  return c;
}

ConditionEstimate iterative_condition(const CSRMatrix& A, const CSRMatrix* B, CondNorm norm) {
  const int n = A.rows();
  const SpMat a = A.to_eigen();
  const SpMat at = SpMat(a.transpose());
  const SpMat bmat = B ? B->to_eigen() : SpMat();
  Eigen::SimplicialLDLT<SpMat> bfac;
  if (B) {
    bfac.compute(B->to_eigen());
    if (bfac.info() != Eigen::Success) throw std::invalid_argument("condition_estimate: B is not SPD");
  }
  Eigen::SparseLU<SpMat> lu(a), lut(at);
  if (lu.info() != Eigen::Success || lut.info() != Eigen::Success)
    throw std::runtime_error("condition_estimate: operator is singular");
  const bool energy = B && norm == CondNorm::energy;
  // energy: O = F^-1 A F^-T with F = P^T L, where P B P^T = L L^T
  Eigen::SimplicialLLT<SpMat> efac;
  if (energy) {
    efac.compute(bmat);
    if (efac.info() != Eigen::Success) throw std::invalid_argument("condition_estimate: B is not SPD");
  }
  const auto f_inv = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return efac.matrixL().solve(Eigen::VectorXd(efac.permutationP() * x));
  };
  const auto f_inv_t = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return efac.permutationPinv() * Eigen::VectorXd(efac.matrixU().solve(x));
  };
  const auto f_t = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return efac.matrixU() * Eigen::VectorXd(efac.permutationP() * x);
  };
  const auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return efac.permutationPinv() * Eigen::VectorXd(efac.matrixL() * x);
  };
  // O = B^-1 A; O^T = A^T B^-1; O^-1 = A^-1 B; O^-T = B A^-T
  const auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (energy) return f_inv(a * f_inv_t(x));
    Eigen::VectorXd y = a * x;
    return B ? Eigen::VectorXd(bfac.solve(y)) : y;
  };
  const auto op_t = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (energy) return f_inv(at * f_inv_t(x));
    return at * (B ? Eigen::VectorXd(bfac.solve(x)) : x);
  };
  const auto inv = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (energy) return f_t(lu.solve(f(x)));
    return lu.solve(B ? Eigen::VectorXd(bmat * x) : x);
  };
  const auto inv_t = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (energy) return f_t(lut.solve(f(x)));
    Eigen::VectorXd y = lut.solve(x);
    return B ? Eigen::VectorXd(bmat * y) : y;
  };
  const auto power = [&](auto&& apply, auto&& apply_t, bool& ok) {
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n) + 0.1 * Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    x.normalize();
    double lam = 0.0;
    ok = false;
    for (int it = 0; it < 1000; ++it) {
      Eigen::VectorXd y = apply_t(apply(x));
      const double next = y.norm();
      if (!std::isfinite(next) || next == 0.0) throw std::runtime_error("condition_estimate: iteration breakdown");
      x = y / next;
      if (std::abs(next - lam) <= 1e-8 * next) {
        lam = next;
        ok = true;
        break;
      }
      lam = next;
    }
    return std::sqrt(lam);
  };
  ConditionEstimate c;
  c.mode = CondMode::iterative;
  bool ok_max = false, ok_min = false;
  c.sigma_max = power(op, op_t, ok_max);
  // ||(O^T O)^-1|| = 1 / sigma_min^2 with (O^T O)^-1 = O^-1 O^-T
  c.sigma_min = 1.0 / power(inv_t, inv, ok_min);
  c.converged = ok_max && ok_min;
  c.kappa = c.sigma_max / c.sigma_min;
  return c;
}

}  // namespace

ConditionEstimate condition_estimate(const CSRMatrix& A, const CSRMatrix* B, CondMode mode, int dense_limit,
                                     CondNorm norm) {
  require_square(A, "condition_estimate");
  if (B && (B->rows() != A.rows() || B->cols() != A.cols()))
    throw std::invalid_argument("condition_estimate: B shape mismatch");
  if (mode == CondMode::dense) {
    if (A.rows() > dense_limit)
      throw std::invalid_argument("condition_estimate: n = " + std::to_string(A.rows()) +
                                  " exceeds the dense limit " + std::to_string(dense_limit));
    return dense_condition(A, B, norm);
  }
  return iterative_condition(A, B, norm);
}

}  // namespace rda
