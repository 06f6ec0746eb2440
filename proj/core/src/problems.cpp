#include "rda/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rda {

namespace {

constexpr double pi = std::numbers::pi;

Box square(double lo, double hi) { return {Point(lo, lo, 0.0), Point(hi, hi, 0.0)}; }
Box cube(double lo, double hi) { return {Point(lo, lo, lo), Point(hi, hi, hi)}; }

TensorField identity_tensor() {
  return [](const Point&) -> Eigen::Matrix3d { return Eigen::Matrix3d::Identity(); };
}

EllipticProblem example1() {
  EllipticProblem p;
  p.name = "example1";
  p.dim = 2;
  p.domain = square(-1, 1);
  p.A = identity_tensor();
  p.u_exact = [](const Point& x) {
    return std::sin(2 * pi * (x.x() + x.y())) * std::sin(2 * pi * x.y()) + x.x() * x.x() * x.y();
  };
  p.grad_exact = [](const Point& x) {
    const double a = 2 * pi * (x.x() + x.y()), b = 2 * pi * x.y();
    return Point(2 * pi * std::cos(a) * std::sin(b) + 2 * x.x() * x.y(),
                 2 * pi * std::cos(a) * std::sin(b) + 2 * pi * std::sin(a) * std::cos(b) + x.x() * x.x(), 0.0);
  };
  p.f = [](const Point& x) {
    const double a = 2 * pi * (x.x() + x.y()), b = 2 * pi * x.y();
    return 12 * pi * pi * std::sin(a) * std::sin(b) - 8 * pi * pi * std::cos(a) * std::cos(b) - 2 * x.y();
  };
  p.g = p.u_exact;
  return p;
}

EllipticProblem example2() {
  EllipticProblem p;
  p.name = "example2";
  p.dim = 3;
  p.domain = cube(0, 1);
  p.A = identity_tensor();
  p.u_exact = [](const Point& x) { return std::sin(x.x() + x.y() + x.z()); };
  p.grad_exact = [](const Point& x) {
    const double c = std::cos(x.x() + x.y() + x.z());
    return Point(c, c, c);
  };
  p.f = [](const Point& x) { return 3 * std::sin(x.x() + x.y() + x.z()); };
  p.g = p.u_exact;
  return p;
}

EllipticProblem example5() {
  EllipticProblem p;
  p.name = "example5";
  p.dim = 2;
  p.domain = square(-1, 1);
  p.A = identity_tensor();
  p.u_exact = [](const Point& x) { return std::exp(x.x() * x.x() + x.y() * x.y()) * std::sin(x.x() * x.y()); };
  p.grad_exact = [](const Point& x) {
    const double e = std::exp(x.x() * x.x() + x.y() * x.y());
    const double s = std::sin(x.x() * x.y()), c = std::cos(x.x() * x.y());
    return Point(e * (2 * x.x() * s + x.y() * c), e * (2 * x.y() * s + x.x() * c), 0.0);
  };
  p.f = [](const Point& x) {
    const double r = x.x() * x.x() + x.y() * x.y();
    const double xy = x.x() * x.y();
    return -std::exp(r) * ((3 * r + 4) * std::sin(xy) + 8 * xy * std::cos(xy));
  };
  p.g = p.u_exact;
  return p;
}

EllipticProblem example6() {
  EllipticProblem p;
  p.name = "example6";
  p.dim = 2;
  p.domain = square(-1, 1);
  p.A = [](const Point&) -> Eigen::Matrix3d {
    Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
    a(0, 0) = 3.0;
    a(1, 1) = 0.1;
    return a;
  };
  p.u_exact = [](const Point& x) { return std::sin(x.x() / 3) + std::cos(10 * x.y()); };
  p.grad_exact = [](const Point& x) { return Point(std::cos(x.x() / 3) / 3, -10 * std::sin(10 * x.y()), 0.0); };
  p.f = [](const Point& x) { return std::sin(x.x() / 3) / 3 + 10 * std::cos(10 * x.y()); };
  p.g = p.u_exact;
  return p;
}

EllipticProblem manufactured_poly(int k, int dim) {
  if (k < 0) throw std::invalid_argument("manufactured polynomial degree must be >= 0");
  if (dim != 2 && dim != 3) throw std::invalid_argument("manufactured problems need dim 2 or 3");
  EllipticProblem p;
  p.name = "manufactured:poly" + std::to_string(k);
  p.dim = dim;
  p.domain = dim == 2 ? square(0, 1) : cube(0, 1);
  p.A = identity_tensor();
  const Point c(1.0, 0.5, dim == 3 ? 0.25 : 0.0);
  const double cc = c.squaredNorm();
  auto lin = [c](const Point& x) { return 0.3 + c.dot(x); };
  p.u_exact = [k, lin](const Point& x) { return std::pow(lin(x), k); };
  p.grad_exact = [k, lin, c](const Point& x) -> Point {
    return k == 0 ? Point::Zero().eval() : (k * std::pow(lin(x), k - 1) * c).eval();
  };
  p.f = [k, lin, cc](const Point& x) { return k < 2 ? 0.0 : -k * (k - 1) * cc * std::pow(lin(x), k - 2); };
  p.g = p.u_exact;
  return p;
}

void check_dim(const EllipticProblem& p, int dim) {
  if (dim != 0 && dim != p.dim)
    throw std::invalid_argument("problem " + p.name + " is " + std::to_string(p.dim) + "D, requested " +
                                std::to_string(dim) + "D");
}

}  // namespace

EllipticProblem make_problem(const std::string& id, int dim) {
  const std::string prefix = "manufactured:poly";
  if (id.rfind(prefix, 0) == 0) {
    const std::string deg = id.substr(prefix.size());
    if (deg.empty() || deg.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("bad manufactured problem id: " + id);
    return manufactured_poly(std::stoi(deg), dim == 0 ? 2 : dim);
  }
  EllipticProblem p;
  if (id == "example1" || id == "example3" || id == "example4") {
    p = example1();
  } else if (id == "example2" || id == "example7") {
    p = example2();
  } else if (id == "example5") {
    p = example5();
  } else if (id == "example6") {
    p = example6();
  } else {
    throw std::invalid_argument("unknown problem id: " + id);
  }
  p.name = id;
  check_dim(p, dim);
  return p;
}

std::vector<std::string> problem_ids() {
  return {"example1", "example2", "example3", "example4", "example5", "example6", "example7", "manufactured:poly<k>"};
}

}  // namespace rda
