#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <random>

#include "rda/dgcore.hpp"
#include "rda/problems.hpp"
#include "rda/quadrature.hpp"
#include "test_util.hpp"

using namespace rda;
using rda::testing::square;

namespace {

EllipticProblem quadratic_problem(double theta) {
  EllipticProblem p;
  p.name = "x^2";
  p.dim = 2;
  p.domain = square(0, 1);
  p.A = [](const Point&) -> Eigen::Matrix3d { return Eigen::Matrix3d::Identity(); };
  p.u_exact = [](const Point& x) { return x.x() * x.x(); };
  p.grad_exact = [](const Point& x) { return Point(2 * x.x(), 0, 0); };
  p.f = [](const Point&) { return -2.0; };
  p.g = p.u_exact;
  p.theta = theta;
  return p;
}

Eigen::VectorXd solve(const CSRMatrix& A, const Eigen::VectorXd& b) {
  Eigen::SparseMatrix<double> a = A.to_eigen();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  return lu.solve(b);
}

double boundary_penalty(const Mesh& mesh, double mu) {
  double s = 0.0;
  for (const auto& f : mesh.faces())
    if (f.is_boundary()) s += mu * f.measure / f.diameter;
  return s;
}

ReconstructionOperator make_operator(const Mesh& mesh, int m) {
  return build_operator(mesh, build_patches(mesh, *default_threshold(m, mesh.dim(), mesh.kind())), m);
}

Eigen::VectorXd constant_coeffs(int ne, int P) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ne * P);
  for (int k = 0; k < ne; ++k) v(k * P) = 1.0;
  return v;
}

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(AssembleDg, ConstantsSeeOnlyBoundaryPenalty) {
  const auto mesh = gen_tri_mesh(square(0, 1), 4);
  for (double theta : {-1.0, 1.0}) {
    auto prob = quadratic_problem(theta);
    const BrokenSpace space(mesh, 1);
    const auto sys = assemble_dg(space, prob);
    const auto v = constant_coeffs(32, 3);
    const Eigen::MatrixXd A = sys.A.to_dense();
    EXPECT_NEAR(v.dot(A * v), boundary_penalty(mesh, 15.0), 1e-10);
  }
}

TEST(AssembleDg, SymmetricForThetaMinusOne) {
  const auto mesh = gen_tri_mesh(square(0, 1), 3);
  for (int m = 1; m <= 3; ++m) {
    const BrokenSpace space(mesh, m);
    const auto A = assemble_dg(space, quadratic_problem(-1.0)).A.to_dense();
    EXPECT_LE(max_abs(A - A.transpose()), 1e-10 * max_abs(A));
  }
}

TEST(AssembleDg, QuadraticSolutionReproduced) {
  const auto mesh = gen_tri_mesh(square(0, 1), 4);
  for (double theta : {-1.0, 1.0}) {
    const auto prob = quadratic_problem(theta);
    const BrokenSpace space(mesh, 2);
    const auto sys = assemble_dg(space, prob);
    const Eigen::VectorXd c = solve(sys.A, sys.b);
    const auto err = error_norms(space, nullptr, std::span<const double>(c.data(), c.size()), prob);
    EXPECT_LT(err.l2, 1e-9);
    EXPECT_LT(err.energy, 1e-8);
  }
}

TEST(AssembleDg, GalerkinResidualOfInterpolantVanishes) {
  const auto mesh = gen_tri_mesh(square(0, 1), 3);
  const auto prob = quadratic_problem(1.0);
  const BrokenSpace space(mesh, 3);
  const auto sys = assemble_dg(space, prob);
  const Eigen::VectorXd c = l2_projection(space, prob.u_exact);
  const Eigen::VectorXd r = sys.A.to_dense() * c - sys.b;
  EXPECT_LE(r.norm(), 1e-9 * sys.b.norm());
}

TEST(AssembleDg, SplittingIdentity) {
  const auto mesh = gen_tri_mesh(square(0, 1), 3);
  const auto prob = quadratic_problem(1.0);
  for (int m = 1; m <= 3; ++m) {
    const BrokenSpace space(mesh, m);
    const auto A = assemble_dg(space, prob).A.to_dense();
    const auto S = assemble_dg(space, prob, FormWeights::symmetric_part(15.0)).A.to_dense();
    const auto N = assemble_dg(space, prob, FormWeights::antisymmetric_part()).A.to_dense();
    EXPECT_LE(max_abs(A - (S - N)), 1e-12 * max_abs(A));
    EXPECT_LE(max_abs(S - S.transpose()), 1e-12 * max_abs(S));
    EXPECT_LE(max_abs(N + N.transpose()), 1e-12 * max_abs(N));
  }
}

TEST(AssembleDg, InvalidPenaltyRejected) {
  const auto mesh = gen_tri_mesh(square(0, 1), 2);
  auto prob = quadratic_problem(-1.0);
  prob.mu = 0.0;
  EXPECT_THROW(prob.validate(), std::invalid_argument);
  EXPECT_THROW(assemble_dg(BrokenSpace(mesh, 1), prob), std::invalid_argument);
}

TEST(AssembleA0, TwoTriangleEntries) {
  const auto mesh = gen_tri_mesh(square(0, 1), 1);
  const auto A0 = assemble_a0(mesh).A;
  EXPECT_NEAR(A0.at(0, 1), -1.0, 1e-15);
  EXPECT_NEAR(A0.at(1, 0), -1.0, 1e-15);
  // one diagonal face plus two unit boundary edges per triangle
  EXPECT_NEAR(A0.at(0, 0), 3.0, 1e-15);
}

TEST(AssembleA0, ConstantVectorGivesBoundaryTerms) {
  const auto mesh = gen_tri_mesh(square(-1, 1), 5);
  const auto A0 = assemble_a0(mesh).A;
  const std::vector<double> ones(mesh.num_elements(), 1.0);
  const auto y = A0 * ones;
  std::vector<double> expected(mesh.num_elements(), 0.0);
  for (const auto& f : mesh.faces())
    if (f.is_boundary()) expected[f.left] += f.measure / f.diameter;
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(y[k], expected[k], 1e-13);
}

TEST(AssembleA0, SymmetricPositiveDefinite) {
  const auto mesh = gen_tri_mesh(square(0, 1), 4);
  const auto A = assemble_a0(mesh).A.to_dense();
  EXPECT_LE(max_abs(A - A.transpose()), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(AssembleA0, RestrictionOfFullFormToConstants) {
  const auto mesh = gen_tri_mesh(square(0, 1), 3);
  const BrokenSpace space(mesh, 1);
  const auto A = assemble_dg(space, quadratic_problem(-1.0)).A.to_dense();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(mesh.num_elements() * 3, mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) C(k * 3, k) = 1.0;
  const Eigen::MatrixXd restricted = C.transpose() * A * C;
  EXPECT_LE(max_abs(restricted - 15.0 * assemble_a0(mesh).A.to_dense()), 1e-11);
}

TEST(ComposeRda, MatchesDenseTripleProduct) {
  for (int n : {2, 3, 4}) {
    const auto mesh = gen_tri_mesh(square(0, 1), n);
    for (int m = 1; m <= 2; ++m) {
      const auto R = make_operator(mesh, m);
      const BrokenSpace space(mesh, m);
      const auto dg = assemble_dg(space, quadratic_problem(1.0));
      const auto rda = compose_rda(dg, R);
      const Eigen::MatrixXd Rd = R.matrix().to_dense();
      const Eigen::MatrixXd oracle = Rd.transpose() * dg.A.to_dense() * Rd;
      EXPECT_LE(max_abs(rda.A.to_dense() - oracle), 1e-12 * max_abs(oracle)) << "n=" << n << " m=" << m;
      EXPECT_LE((rda.b - Rd.transpose() * dg.b).cwiseAbs().maxCoeff(), 1e-12 * dg.b.cwiseAbs().maxCoeff());
      EXPECT_TRUE(rda.A.structurally_valid());
    }
  }
}

TEST(ComposeRda, ShapeMismatchRejected) {
  const auto mesh = gen_tri_mesh(square(0, 1), 2);
  const auto dg = assemble_dg(BrokenSpace(mesh, 1), quadratic_problem(1.0));
  EXPECT_THROW(compose_rda(dg, make_operator(mesh, 2)), std::invalid_argument);
}

TEST(AssembleRda, FusedMatchesCompose) {
  const auto tri = gen_tri_mesh(square(-1, 1), 4);
  const auto prob = make_problem("example1");
  for (int m = 1; m <= 4; ++m) {
    const auto R = make_operator(tri, m);
    const BrokenSpace space(tri, m);
    for (double theta : {-1.0, 1.0}) {
      auto p = prob;
      p.theta = theta;
      const auto fused = assemble_rda(space, R, p);
      const auto composed = compose_rda(assemble_dg(space, p), R);
      const Eigen::MatrixXd a = fused.A.to_dense(), b = composed.A.to_dense();
      EXPECT_LE(max_abs(a - b), 1e-12 * max_abs(b)) << "m=" << m;
      EXPECT_LE((fused.b - composed.b).cwiseAbs().maxCoeff(), 1e-12 * composed.b.cwiseAbs().maxCoeff());
      EXPECT_TRUE(fused.A.structurally_valid());
      if (theta < 0) EXPECT_LE(max_abs(a - a.transpose()), 1e-10 * max_abs(a));
    }
  }
  const auto tet = gen_tet_mesh(rda::testing::cube(0, 1), 2);
  const auto p3 = make_problem("example2");
  const auto R3 = make_operator(tet, 2);
  const BrokenSpace s3(tet, 2);
  const auto a = assemble_rda(s3, R3, p3).A.to_dense();
  const auto b = compose_rda(assemble_dg(s3, p3), R3).A.to_dense();
  EXPECT_LE(max_abs(a - b), 1e-12 * max_abs(b));
}

TEST(AssembleRda, ConstantsSeeOnlyBoundaryPenalty) {
  const auto mesh = gen_tri_mesh(square(0, 1), 5);
  auto prob = quadratic_problem(-1.0);
  const auto R = make_operator(mesh, 2);
  const auto A = assemble_rda(BrokenSpace(mesh, 2), R, prob).A.to_dense();
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(mesh.num_elements());
  EXPECT_NEAR(v.dot(A * v), boundary_penalty(mesh, 15.0), 1e-9);
}

TEST(AssembleRda, GalerkinResidualForPolynomialSolution) {
  const auto mesh = gen_tri_mesh(square(0, 1), 5);
  for (double theta : {-1.0, 1.0}) {
    auto prob = quadratic_problem(theta);
    const auto R = make_operator(mesh, 2);
    const auto sys = assemble_rda(BrokenSpace(mesh, 2), R, prob);
    Eigen::VectorXd v(mesh.num_elements());
    for (std::size_t k = 0; k < mesh.num_elements(); ++k) v(k) = prob.u_exact(mesh.barycenter(k));
    const Eigen::VectorXd r = sys.A.to_dense() * v - sys.b;
    EXPECT_LE(r.norm(), 1e-9 * sys.b.norm());
  }
}

TEST(AssembleRda, CoercivityProxy) {
  for (int n : {4, 8}) {
    const auto mesh = gen_tri_mesh(square(-1, 1), n);
    for (int m = 1; m <= 4; ++m) {
      const auto R = make_operator(mesh, m);
      const auto A = assemble_rda(BrokenSpace(mesh, m), R, make_problem("example1")).A.to_dense();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "n=" << n << " m=" << m;
    }
  }
}

TEST(AssembleRda, AntisymmetricPartHasImaginarySpectrum) {
  const auto mesh = gen_tri_mesh(square(-1, 1), 6);
  for (int m = 1; m <= 3; ++m) {
    const auto R = make_operator(mesh, m);
    const BrokenSpace space(mesh, m);
    const auto prob = make_problem("example1");
    const auto N = assemble_rda(space, R, prob, FormWeights::antisymmetric_part()).A.to_dense();
    Eigen::EigenSolver<Eigen::MatrixXd> es(N, false);
    EXPECT_LE(es.eigenvalues().real().cwiseAbs().maxCoeff(), 1e-10 * max_abs(N));
  }
}

TEST(Mass, SingleElementGram) {
  const auto mesh = parse_poly_mesh("POLYMESH 2\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n");
  const BrokenSpace space(mesh, 1);
  const auto M = assemble_mass(space).to_dense();
  EXPECT_NEAR(M(0, 0), 1.0, 1e-15);
  // centered basis: first moments vanish
  EXPECT_NEAR(M(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(M(0, 2), 0.0, 1e-15);
  // ((x - 1/2) / sqrt 2)^2 over the unit square = 1/24
  EXPECT_NEAR(M(1, 1), 1.0 / 24.0, 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_GT(M(i, i), 0.0);
}

TEST(Mass, QuadratureOracleAndSpd) {
  const auto mesh = gen_tri_mesh(square(0, 1), 4);
  const BrokenSpace space(mesh, 2);
  const auto M = assemble_mass(space).to_dense();
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  Eigen::VectorXd c(M.rows());
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = g(rng);
  double oracle = 0.0;
  Eigen::VectorXd phi(6);
  for (int k = 0; k < 32; ++k) {
    const auto rule = element_rule(mesh, k, 6);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      space.eval(k, rule.points[q], phi);
      const double u = phi.dot(c.segment(k * 6, 6));
      oracle += rule.weights[q] * u * u;
    }
  }
  EXPECT_NEAR(c.dot(M * c), oracle, 1e-12 * oracle);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);

  const auto R = make_operator(mesh, 2);
  const auto Mr = assemble_rda_mass(space, R).to_dense();
  const Eigen::MatrixXd Rd = R.matrix().to_dense();
  EXPECT_LE(max_abs(Mr - Rd.transpose() * M * Rd), 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esr(Mr);
  EXPECT_GT(esr.eigenvalues().minCoeff(), 0.0);
}

TEST(ErrorNorms, ExactInterpolantGivesZero) {
  const auto mesh = gen_tri_mesh(square(0, 1), 4);
  const auto prob = make_problem("manufactured:poly2", 2);
  const BrokenSpace space(mesh, 2);
  const Eigen::VectorXd c = l2_projection(space, prob.u_exact);
  const auto e = error_norms(space, nullptr, std::span<const double>(c.data(), c.size()), prob);
  EXPECT_LT(e.l2, 1e-9);
  EXPECT_LT(e.energy, 1e-9);
  EXPECT_LT(e.energy_tilde, 1e-9);

  const auto R = make_operator(mesh, 3);
  std::vector<double> v(mesh.num_elements());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = prob.u_exact(mesh.barycenter(k));
  const auto er = error_norms(BrokenSpace(mesh, 3), &R, v, prob);
  EXPECT_LT(er.l2, 1e-9);
  EXPECT_LT(er.energy_tilde, 1e-9);
}

TEST(ErrorNorms, ZeroSolution) {
  const auto mesh = gen_tri_mesh(square(0, 1), 3);
  const auto prob = make_problem("manufactured:poly0", 2);
  auto zero = prob;
  zero.u_exact = [](const Point&) { return 0.0; };
  zero.grad_exact = [](const Point&) { return Point::Zero().eval(); };
  zero.g = zero.u_exact;
  const BrokenSpace space(mesh, 1);
  const std::vector<double> c(space.num_dofs(), 0.0);
  const auto e = error_norms(space, nullptr, c, zero);
  EXPECT_EQ(e.l2, 0.0);
  EXPECT_EQ(e.energy, 0.0);
  EXPECT_EQ(e.energy_tilde, 0.0);
}

TEST(ErrorNorms, MissingExactSolution) {
  const auto mesh = gen_tri_mesh(square(0, 1), 2);
  auto prob = quadratic_problem(-1);
  prob.u_exact = nullptr;
  const BrokenSpace space(mesh, 1);
  const std::vector<double> c(space.num_dofs(), 0.0);
  EXPECT_THROW(error_norms(space, nullptr, c, prob), std::invalid_argument);
}

TEST(AssembleRda, SolutionMinimizesEnergyFunctional) {
  const auto mesh = gen_tri_mesh(square(-1, 1), 10);
  const auto prob = make_problem("example1");
  const auto R = make_operator(mesh, 2);
  const auto sys = assemble_rda(BrokenSpace(mesh, 2), R, prob);
  const Eigen::MatrixXd A = sys.A.to_dense();
  const Eigen::VectorXd u = solve(sys.A, sys.b);
  const auto J = [&](const Eigen::VectorXd& v) { return v.dot(A * v) - 2.0 * sys.b.dot(v); };
  Eigen::VectorXd interp(mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) interp(k) = prob.u_exact(mesh.barycenter(k));
  EXPECT_LT(J(u), J(interp));
  std::mt19937 rng(12);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd d(u.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = 1e-3 * g(rng);
    EXPECT_LT(J(u), J(u + d));
  }
}

TEST(ErrorNorms, ExampleOneErrorDecreasesUnderRefinement) {
  const auto prob = make_problem("example1");
  double prev = 0.0;
  for (int n : {20, 40}) {
    const auto mesh = gen_tri_mesh(square(-1, 1), n);
    const auto R = make_operator(mesh, 1);
    const BrokenSpace space(mesh, 1);
    const auto sys = assemble_rda(space, R, prob);
    const Eigen::VectorXd v = solve(sys.A, sys.b);
    const auto e = error_norms(space, &R, std::span<const double>(v.data(), v.size()), prob);
    EXPECT_LE(e.energy, e.energy_tilde);
    if (prev > 0.0) EXPECT_GT(prev / e.l2, 2.5);
    prev = e.l2;
  }
}
