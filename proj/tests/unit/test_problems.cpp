#include <gtest/gtest.h>

#include <random>

#include "rda/problems.hpp"

using namespace rda;

namespace {

// -div(A grad u) by central differences of the exact solution.
double fd_operator(const EllipticProblem& p, const Point& x, double h) {
  double s = 0.0;
  for (int i = 0; i < p.dim; ++i) {
    Point ei = Point::Zero();
    ei[i] = h;
    for (int j = 0; j < p.dim; ++j) {
      Point ej = Point::Zero();
      ej[j] = h;
      const double d2 = (p.u_exact(x + ei + ej) - p.u_exact(x + ei - ej) - p.u_exact(x - ei + ej) +
                         p.u_exact(x - ei - ej)) /
                        (4 * h * h);
      s += p.A(x)(i, j) * d2;
    }
  }
  return -s;
}

Point random_point(const EllipticProblem& p, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x = Point::Zero();
  for (int c = 0; c < p.dim; ++c) x[c] = p.domain.lower[c] + u(rng) * (p.domain.upper[c] - p.domain.lower[c]);
  return x;
}

}  // namespace

TEST(Problems, SourceMatchesFiniteDifferences) {
  std::mt19937 rng(9);
  for (const std::string id : {"example1", "example2", "example5", "example6", "manufactured:poly3"}) {
    const auto p = make_problem(id);
    for (int t = 0; t < 20; ++t) {
      const Point x = random_point(p, rng);
      const double scale = std::max(1.0, std::abs(p.f(x)));
      EXPECT_NEAR(fd_operator(p, x, 1e-4), p.f(x), 2e-5 * scale * 100) << id;
    }
  }
}

TEST(Problems, GradientMatchesFiniteDifferences) {
  std::mt19937 rng(10);
  for (const std::string id : {"example1", "example2", "example5", "example6", "manufactured:poly4"}) {
    const auto p = make_problem(id);
    for (int t = 0; t < 20; ++t) {
      const Point x = random_point(p, rng);
      for (int c = 0; c < p.dim; ++c) {
        Point e = Point::Zero();
        e[c] = 1e-6;
        const double fd = (p.u_exact(x + e) - p.u_exact(x - e)) / 2e-6;
        EXPECT_NEAR(fd, p.grad_exact(x)[c], 1e-6 * std::max(1.0, std::abs(fd))) << id;
      }
    }
  }
}

TEST(Problems, BoundaryDataIsExactSolution) {
  const auto p = make_problem("example6");
  const Point x(1.0, 0.3, 0.0);
  EXPECT_EQ(p.g(x), p.u_exact(x));
  EXPECT_NO_THROW(p.validate());
}

TEST(Problems, DimensionsAndErrors) {
  EXPECT_EQ(make_problem("example2").dim, 3);
  EXPECT_EQ(make_problem("example7").dim, 3);
  EXPECT_EQ(make_problem("manufactured:poly2", 3).dim, 3);
  EXPECT_THROW(make_problem("example1", 3), std::invalid_argument);
  EXPECT_THROW(make_problem("example9"), std::invalid_argument);
  EXPECT_THROW(make_problem("manufactured:polyx"), std::invalid_argument);
}

TEST(Problems, NonSpdCoefficientRejected) {
  auto p = make_problem("example6");
  p.A = [](const Point&) -> Eigen::Matrix3d {
    Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
    a(1, 1) = -0.1;
    return a;
  };
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.A = [](const Point&) -> Eigen::Matrix3d {
    Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
    a(0, 1) = 0.5;
    return a;
  };
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
