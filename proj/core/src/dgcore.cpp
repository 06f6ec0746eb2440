#include "rda/dgcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "rda/quadrature.hpp"

namespace rda {

void EllipticProblem::validate(std::span<const Point> sample_points) const {
  if (!(mu > 0.0)) throw std::invalid_argument("penalty mu must be positive");
  if (theta != -1.0 && theta != 1.0) throw std::invalid_argument("theta must be -1 or +1");
  if (!A || !f || !g) throw std::invalid_argument("problem " + name + " is missing A, f or g");
  std::vector<Point> pts(sample_points.begin(), sample_points.end());
  if (pts.empty()) pts = {domain.lower, domain.upper, 0.5 * (domain.lower + domain.upper)};
  for (const auto& x : pts) {
    const Eigen::MatrixXd a = A(x).topLeftCorner(dim, dim);
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("coefficient A is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw std::invalid_argument("coefficient A is not positive definite");
  }
}

BrokenSpace::BrokenSpace(const Mesh& mesh, int m) : mesh_(&mesh), m_(m), basis_(mesh.dim(), m) {}

void BrokenSpace::eval(int k, const Point& x, Eigen::Ref<Eigen::VectorXd> values) const {
  basis_.eval(element_frame(*mesh_, k).to_local(x), values);
}

void BrokenSpace::eval_grad(int k, const Point& x, Eigen::Ref<Eigen::MatrixXd> grads) const {
  const auto frame = element_frame(*mesh_, k);
  basis_.eval_grad(frame.to_local(x), grads);
  grads /= frame.scale;
}

namespace {

struct Degrees {
  int volume, face, data;
};

Degrees resolve(const AssemblyOptions& o, int m) {
  return {o.volume_degree >= 0 ? o.volume_degree : 2 * m, o.face_degree >= 0 ? o.face_degree : 2 * m + 1,
          o.data_degree >= 0 ? o.data_degree : 2 * m + 2};
}

// Element and face contributions of the interior penalty form for one
// broken space. Rows index test functions, columns trial functions.
class Kernel {
 public:
  Kernel(const BrokenSpace& sp, const EllipticProblem& prob, const FormWeights& w, Degrees deg)
      : sp_(sp), mesh_(sp.mesh()), prob_(prob), w_(w), deg_(deg), P_(sp.num_basis()), d_(mesh_.dim()) {}

  void volume(int k, Eigen::MatrixXd& out) const {
    out.setZero(P_, P_);
    if (w_.volume == 0.0) return;
    const auto rule = element_rule(mesh_, k, deg_.volume);
    Eigen::MatrixXd G(P_, d_);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      sp_.eval_grad(k, rule.points[q], G);
      const Eigen::MatrixXd a = prob_.A(rule.points[q]).topLeftCorner(d_, d_);
      out.noalias() += (rule.weights[q] * w_.volume) * G * a * G.transpose();
    }
  }

  // blocks[a][b]: test on side a, trial on side b (0 = left, 1 = right).
  void face(int f, Eigen::MatrixXd blocks[2][2]) const {
    const Face& face = mesh_.face(f);
    const bool interior = !face.is_boundary();
    const int sides = interior ? 2 : 1;
    const double beta = interior ? 0.5 : 1.0;
    const auto rule = face_quadrature(mesh_, f, deg_.face);
    const auto nq = static_cast<Eigen::Index>(rule.size());
    const Eigen::VectorXd n = face.normal.head(d_);
    const int elem[2] = {face.left, face.right};
    const double sigma[2] = {1.0, -1.0};

    Eigen::MatrixXd Phi[2], Gn[2];
    Eigen::VectorXd phi(P_);
    Eigen::MatrixXd G(P_, d_);
    for (int s = 0; s < sides; ++s) {
      Phi[s].resize(P_, nq);
      Gn[s].resize(P_, nq);
    }
    Eigen::VectorXd wq(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
      const Point& x = rule.points[q];
      wq(q) = rule.weights[q];
      const Eigen::VectorXd an = prob_.A(x).topLeftCorner(d_, d_) * n;
      for (int s = 0; s < sides; ++s) {
        sp_.eval(elem[s], x, phi);
        sp_.eval_grad(elem[s], x, G);
        Phi[s].col(q) = phi;
        Gn[s].col(q) = G * an;
      }
    }
    const double pen = w_.penalty / face.diameter;
    for (int a = 0; a < sides; ++a) {
      const Eigen::MatrixXd PhiW = Phi[a] * wq.asDiagonal();
      const Eigen::MatrixXd GnW = Gn[a] * wq.asDiagonal();
      for (int b = 0; b < sides; ++b) {
        auto& B = blocks[a][b];
        B.noalias() = (w_.consistency * beta * sigma[a]) * PhiW * Gn[b].transpose();
        B.noalias() += (w_.symmetry * beta * sigma[b]) * GnW * Phi[b].transpose();
        B.noalias() += (pen * sigma[a] * sigma[b]) * PhiW * Phi[b].transpose();
      }
    }
  }

  void rhs_volume(int k, Eigen::Ref<Eigen::VectorXd> out) const {
    const auto rule = element_rule(mesh_, k, deg_.data);
    Eigen::VectorXd phi(P_);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      sp_.eval(k, rule.points[q], phi);
      out += (rule.weights[q] * prob_.f(rule.points[q])) * phi;
    }
  }

  void rhs_boundary(int f, Eigen::Ref<Eigen::VectorXd> out) const {
    const Face& face = mesh_.face(f);
    const auto rule = face_quadrature(mesh_, f, deg_.data);
    const Eigen::VectorXd n = face.normal.head(d_);
    const double pen = w_.penalty / face.diameter;
    Eigen::VectorXd phi(P_);
    Eigen::MatrixXd G(P_, d_);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point& x = rule.points[q];
      sp_.eval(face.left, x, phi);
      sp_.eval_grad(face.left, x, G);
      const Eigen::VectorXd an = prob_.A(x).topLeftCorner(d_, d_) * n;
      const double gw = rule.weights[q] * prob_.g(x);
      out += gw * (w_.symmetry * (G * an) + pen * phi);
    }
  }

 private:
  const BrokenSpace& sp_;
  const Mesh& mesh_;
  const EllipticProblem& prob_;
  FormWeights w_;
  Degrees deg_;
  int P_, d_;
};

void check_problem(const BrokenSpace& space, const EllipticProblem& prob, const FormWeights& w) {
  if (space.mesh().dim() != prob.dim) throw std::invalid_argument("problem and mesh dimensions differ");
  if (w.penalty < 0.0 || (w.penalty == 0.0 && w.volume != 0.0))
    throw std::invalid_argument("penalty mu must be positive");
  if (!prob.A) throw std::invalid_argument("problem has no coefficient A");
}

std::vector<std::vector<int>> face_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> nb(mesh.num_elements());
  for (const auto& f : mesh.faces())
    if (!f.is_boundary()) {
      nb[f.left].push_back(f.right);
      nb[f.right].push_back(f.left);
    }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

// Accumulates dense blocks into a CSR matrix with a precomputed pattern.
class Scatter {
 public:
  explicit Scatter(CSRMatrix& m) : m_(m) {}

  void add(std::span<const int> rows, std::span<const int> cols, const Eigen::MatrixXd& G) {
    auto& vals = m_.values();
    const auto& ci = m_.col_indices();
    const auto& off = m_.row_offsets();
    for (std::size_t s = 0; s < rows.size(); ++s) {
      const int r = rows[s];
      const int* b = ci.data() + off[r];
      const int* e = ci.data() + off[r + 1];
      for (std::size_t t = 0; t < cols.size(); ++t) {
        const int* p = std::lower_bound(b, e, cols[t]);
        vals[p - ci.data()] += G(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
      }
    }
  }

 private:
  CSRMatrix& m_;
};

// Row i of R^T X R couples i to every member of S(b) where i is in S(a) and
// (a, b) is a nonzero block of X: b = a or b a face neighbor of a.
CSRMatrix fused_pattern(const ReconstructionOperator& R, const std::vector<std::vector<int>>* nb) {
  const int ne = R.num_elements();
  std::vector<int> mark(ne, -1);
  std::vector<int> off{0}, ci;
  std::vector<int> row;
  for (int i = 0; i < ne; ++i) {
    row.clear();
    auto take = [&](int b) {
      for (int t : R.members(b))
        if (mark[t] != i) {
          mark[t] = i;
          row.push_back(t);
        }
    };
    for (int a : R.support(i)) {
      take(a);
      if (nb)
        for (int b : (*nb)[a]) take(b);
    }
    std::sort(row.begin(), row.end());
    ci.insert(ci.end(), row.begin(), row.end());
    off.push_back(static_cast<int>(ci.size()));
  }
  std::vector<double> vals(ci.size(), 0.0);
  return CSRMatrix(ne, ne, std::move(off), std::move(ci), std::move(vals));
}

}  // namespace

AssembledSystem assemble_dg(const BrokenSpace& space, const EllipticProblem& prob, const FormWeights& w,
                            AssemblyOptions opts) {
  check_problem(space, prob, w);
  const Mesh& mesh = space.mesh();
  const int ne = static_cast<int>(mesh.num_elements());
  const int P = space.num_basis();
  const Kernel kernel(space, prob, w, resolve(opts, space.degree()));

  // block pattern: K and its face neighbors, ascending
  auto nb = face_neighbors(mesh);
  std::vector<std::vector<int>> blocks(ne);
  for (int k = 0; k < ne; ++k) {
    blocks[k] = nb[k];
    blocks[k].insert(std::lower_bound(blocks[k].begin(), blocks[k].end(), k), k);
  }
  std::vector<int> off{0}, ci;
  for (int k = 0; k < ne; ++k)
    for (int i = 0; i < P; ++i) {
      for (int j : blocks[k])
        for (int c = 0; c < P; ++c) ci.push_back(j * P + c);
      off.push_back(static_cast<int>(ci.size()));
    }
  std::vector<double> vals(ci.size(), 0.0);
  AssembledSystem sys;
  sys.tag = SpaceTag::dg;
  sys.degree = space.degree();
  sys.A = CSRMatrix(ne * P, ne * P, std::move(off), std::move(ci), std::move(vals));

  auto& v = sys.A.values();
  const auto& roff = sys.A.row_offsets();
  auto add_block = [&](int a, int b, const Eigen::MatrixXd& B) {
    const auto idx = std::find(blocks[a].begin(), blocks[a].end(), b) - blocks[a].begin();
    for (int i = 0; i < P; ++i) {
      const int base = roff[a * P + i] + static_cast<int>(idx) * P;
      for (int c = 0; c < P; ++c) v[base + c] += B(i, c);
    }
  };

  Eigen::MatrixXd B;
  for (int k = 0; k < ne; ++k) {
    kernel.volume(k, B);
    add_block(k, k, B);
  }
  Eigen::MatrixXd F[2][2];
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    kernel.face(static_cast<int>(f), F);
    add_block(face.left, face.left, F[0][0]);
    if (!face.is_boundary()) {
      add_block(face.left, face.right, F[0][1]);
      add_block(face.right, face.left, F[1][0]);
      add_block(face.right, face.right, F[1][1]);
    }
  }

  sys.b = Eigen::VectorXd::Zero(ne * P);
  if (opts.with_rhs) {
    if (!prob.f || !prob.g) throw std::invalid_argument("problem has no source or boundary data");
    for (int k = 0; k < ne; ++k) kernel.rhs_volume(k, sys.b.segment(k * P, P));
    for (std::size_t f = 0; f < mesh.num_faces(); ++f)
      if (mesh.face(f).is_boundary()) kernel.rhs_boundary(static_cast<int>(f), sys.b.segment(mesh.face(f).left * P, P));
  }
  return sys;
}

AssembledSystem assemble_rda(const BrokenSpace& space, const ReconstructionOperator& R, const EllipticProblem& prob,
                             const FormWeights& w, AssemblyOptions opts) {
  check_problem(space, prob, w);
  const Mesh& mesh = space.mesh();
  const int ne = static_cast<int>(mesh.num_elements());
  if (R.num_elements() != ne || R.degree() != space.degree())
    throw std::invalid_argument("assemble_rda: reconstruction does not match the space");
  const int P = space.num_basis();
  const Kernel kernel(space, prob, w, resolve(opts, space.degree()));
  const auto nb = face_neighbors(mesh);

  AssembledSystem sys;
  sys.tag = SpaceTag::rda;
  sys.degree = space.degree();
  sys.A = fused_pattern(R, &nb);
  Scatter scatter(sys.A);

  std::vector<Eigen::MatrixXd> diag(ne);
  Eigen::MatrixXd F[2][2];
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    kernel.face(static_cast<int>(f), F);
    auto acc = [&](int k, const Eigen::MatrixXd& B) {
      if (diag[k].size() == 0)
        diag[k] = B;
      else
        diag[k] += B;
    };
    acc(face.left, F[0][0]);
    if (face.is_boundary()) continue;
    acc(face.right, F[1][1]);
    const auto& BL = R.block(face.left);
    const auto& BR = R.block(face.right);
    scatter.add(R.members(face.left), R.members(face.right), BL.transpose() * F[0][1] * BR);
    scatter.add(R.members(face.right), R.members(face.left), BR.transpose() * F[1][0] * BL);
  }
  Eigen::MatrixXd V;
  for (int k = 0; k < ne; ++k) {
    kernel.volume(k, V);
    if (diag[k].size() != 0) V += diag[k];
    diag[k] = Eigen::MatrixXd();
    const auto& Bk = R.block(k);
    scatter.add(R.members(k), R.members(k), Bk.transpose() * V * Bk);
  }

  sys.b = Eigen::VectorXd::Zero(ne);
  if (opts.with_rhs) {
    if (!prob.f || !prob.g) throw std::invalid_argument("problem has no source or boundary data");
    Eigen::MatrixXd bl = Eigen::MatrixXd::Zero(P, ne);
    for (int k = 0; k < ne; ++k) kernel.rhs_volume(k, bl.col(k));
    for (std::size_t f = 0; f < mesh.num_faces(); ++f)
      if (mesh.face(f).is_boundary()) kernel.rhs_boundary(static_cast<int>(f), bl.col(mesh.face(f).left));
    for (int k = 0; k < ne; ++k) {
      const Eigen::VectorXd loc = R.block(k).transpose() * bl.col(k);
      const auto& mem = R.members(k);
      for (std::size_t s = 0; s < mem.size(); ++s) sys.b(mem[s]) += loc(static_cast<Eigen::Index>(s));
    }
  }
  return sys;
}

AssembledSystem compose_rda(const AssembledSystem& dg, const ReconstructionOperator& R) {
  const auto Rm = R.matrix();
  if (dg.A.rows() != Rm.rows() || dg.A.cols() != Rm.rows() || dg.b.size() != Rm.rows())
    throw std::invalid_argument("compose_rda: shape mismatch between system and reconstruction");
  const Eigen::SparseMatrix<double, Eigen::RowMajor> r = Rm.to_eigen_rowmajor();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> a = dg.A.to_eigen_rowmajor();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> ar = a * r;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rt = r.transpose();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> prod = rt * ar;
  AssembledSystem out;
  out.tag = SpaceTag::rda;
  out.degree = dg.degree;
  out.A = CSRMatrix::from_eigen(prod);
  out.b = rt * dg.b;
  return out;
}

AssembledSystem assemble_a0(const Mesh& mesh) {
  const int ne = static_cast<int>(mesh.num_elements());
  std::vector<Triplet> t;
  t.reserve(4 * mesh.num_faces());
  for (const auto& f : mesh.faces()) {
    const double c = f.measure / f.diameter;
    t.push_back({f.left, f.left, c});
    if (!f.is_boundary()) {
      t.push_back({f.right, f.right, c});
      t.push_back({f.left, f.right, -c});
      t.push_back({f.right, f.left, -c});
    }
  }
  AssembledSystem sys;
  sys.tag = SpaceTag::pwc;
  sys.A = CSRMatrix::from_triplets(ne, ne, std::move(t));
  sys.b = Eigen::VectorXd::Zero(ne);
  return sys;
}

namespace {

Eigen::MatrixXd element_mass(const BrokenSpace& space, int k) {
  const int P = space.num_basis();
  const auto rule = element_rule(space.mesh(), k, 2 * space.degree());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd phi(P);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    space.eval(k, rule.points[q], phi);
    M.noalias() += rule.weights[q] * phi * phi.transpose();
  }
  return M;
}

}  // namespace

CSRMatrix assemble_mass(const BrokenSpace& space) {
  const int ne = static_cast<int>(space.mesh().num_elements());
  const int P = space.num_basis();
  std::vector<int> off{0}, ci;
  std::vector<double> v;
  ci.reserve(static_cast<std::size_t>(ne) * P * P);
  v.reserve(ci.capacity());
  for (int k = 0; k < ne; ++k) {
    const auto M = element_mass(space, k);
    for (int i = 0; i < P; ++i) {
      for (int j = 0; j < P; ++j) {
        ci.push_back(k * P + j);
        v.push_back(M(i, j));
      }
      off.push_back(static_cast<int>(ci.size()));
    }
  }
  return CSRMatrix(ne * P, ne * P, std::move(off), std::move(ci), std::move(v));
}

CSRMatrix assemble_rda_mass(const BrokenSpace& space, const ReconstructionOperator& R) {
  CSRMatrix M = fused_pattern(R, nullptr);
  Scatter scatter(M);
  for (int k = 0; k < R.num_elements(); ++k) {
    const auto& B = R.block(k);
    scatter.add(R.members(k), R.members(k), B.transpose() * element_mass(space, k) * B);
  }
  return M;
}

namespace {

Point fd_gradient(const ScalarField& u, const Point& x, int dim, double h) {
  Point g = Point::Zero();
  for (int c = 0; c < dim; ++c) {
    Point e = Point::Zero();
    e[c] = h;
    g[c] = (u(x + e) - u(x - e)) / (2 * h);
  }
  return g;
}

}  // namespace

ErrorNorms error_norms(const BrokenSpace& space, const ReconstructionOperator* R, std::span<const double> dofs,
                       const EllipticProblem& prob) {
  if (!prob.u_exact) throw std::invalid_argument("error_norms: problem " + prob.name + " has no exact solution");
  const Mesh& mesh = space.mesh();
  const int ne = static_cast<int>(mesh.num_elements());
  const int P = space.num_basis();
  const int d = mesh.dim();
  Eigen::VectorXd coeffs;
  if (R) {
    coeffs = R->apply(dofs);
  } else {
    if (static_cast<int>(dofs.size()) != ne * P) throw std::invalid_argument("error_norms: wrong coefficient count");
    coeffs = Eigen::Map<const Eigen::VectorXd>(dofs.data(), ne * P);
  }
  const double fd_step = 1e-6 * mesh.min_diameter();
  auto grad_u = [&](const Point& x) -> Point {
    return prob.grad_exact ? prob.grad_exact(x) : fd_gradient(prob.u_exact, x, d, fd_step);
  };
  const int deg = 2 * space.degree() + 2;

  Eigen::VectorXd phi(P);
  Eigen::MatrixXd G(P, d);
  double l2 = 0.0, h1 = 0.0, jump = 0.0, avg = 0.0;
  for (int k = 0; k < ne; ++k) {
    const auto rule = element_rule(mesh, k, deg);
    const auto c = coeffs.segment(k * P, P);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point& x = rule.points[q];
      space.eval(k, x, phi);
      space.eval_grad(k, x, G);
      const double e = prob.u_exact(x) - phi.dot(c);
      const Eigen::VectorXd ge = grad_u(x).head(d) - G.transpose() * c;
      l2 += rule.weights[q] * e * e;
      h1 += rule.weights[q] * ge.squaredNorm();
    }
  }
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const auto rule = face_quadrature(mesh, f, deg);
    double fj = 0.0, fa = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point& x = rule.points[q];
      const Eigen::VectorXd gu = grad_u(x).head(d);
      auto side = [&](int k, double& e, Eigen::VectorXd& ge) {
        const auto c = coeffs.segment(k * P, P);
        space.eval(k, x, phi);
        space.eval_grad(k, x, G);
        e = phi.dot(c);
        ge = gu - G.transpose() * c;
      };
      double uhL = 0.0, uhR = 0.0;
      Eigen::VectorXd gL, gR;
      side(face.left, uhL, gL);
      double j;
      Eigen::VectorXd a;
      if (face.is_boundary()) {
        const double gval = prob.g ? prob.g(x) : prob.u_exact(x);
        j = gval - uhL;
        a = gL;
      } else {
        side(face.right, uhR, gR);
        j = uhR - uhL;  // [u - u_h] with u continuous
        a = 0.5 * (gL + gR);
      }
      fj += rule.weights[q] * j * j;
      fa += rule.weights[q] * a.squaredNorm();
    }
    jump += fj / face.diameter;
    avg += fa * face.diameter;
  }
  ErrorNorms out;
  out.l2 = std::sqrt(l2);
  out.energy = std::sqrt(h1 + jump);
  out.energy_tilde = std::sqrt(h1 + jump + avg);
  return out;
}

Eigen::VectorXd l2_projection(const BrokenSpace& space, const ScalarField& u) {
  const int ne = static_cast<int>(space.mesh().num_elements());
  const int P = space.num_basis();
  Eigen::VectorXd out(ne * P);
  Eigen::VectorXd phi(P);
  for (int k = 0; k < ne; ++k) {
    const auto rule = element_rule(space.mesh(), k, 2 * space.degree() + 2);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      space.eval(k, rule.points[q], phi);
      rhs += rule.weights[q] * u(rule.points[q]) * phi;
    }
    out.segment(k * P, P) = element_mass(space, k).ldlt().solve(rhs);
  }
  return out;
}

}  // namespace rda
