#include "rda/polynomial.hpp"

#include <stdexcept>

namespace rda {

int dim_polynomial_space(int m, int dim) {
  if (m < 0) return 0;
  // binomial(m + dim, dim)
  long r = 1;
  for (int i = 1; i <= dim; ++i) r = r * (m + i) / i;
  return static_cast<int>(r);
}

MonomialBasis::MonomialBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("MonomialBasis: dim must be 2 or 3");
  if (degree < 0 || degree > 15) throw std::invalid_argument("MonomialBasis: degree must be in [0, 15]");
  for (int d = 0; d <= degree; ++d) {
    if (dim == 2) {
      for (int a = d; a >= 0; --a) exponents_.push_back({a, d - a, 0});
    } else {
      for (int a = d; a >= 0; --a)
        for (int b = d - a; b >= 0; --b) exponents_.push_back({a, b, d - a - b});
    }
  }
}

namespace {
// powers[c][p] = xi_c^p
inline void fill_powers(const Point& xi, int dim, int degree, double powers[3][16]) {
  for (int c = 0; c < dim; ++c) {
    powers[c][0] = 1.0;
    for (int p = 1; p <= degree; ++p) powers[c][p] = powers[c][p - 1] * xi[c];
  }
}
}  // namespace

void MonomialBasis::eval(const Point& xi, Eigen::Ref<Eigen::VectorXd> out) const {
  double pw[3][16];
  fill_powers(xi, dim_, degree_, pw);
  for (int i = 0; i < size(); ++i) {
    const auto& e = exponents_[i];
    double v = pw[0][e[0]] * pw[1][e[1]];
    if (dim_ == 3) v *= pw[2][e[2]];
    out[i] = v;
  }
}

void MonomialBasis::eval_grad(const Point& xi, Eigen::Ref<Eigen::MatrixXd> out) const {
  double pw[3][16];
  fill_powers(xi, dim_, degree_, pw);
  for (int i = 0; i < size(); ++i) {
    const auto& e = exponents_[i];
    for (int c = 0; c < dim_; ++c) {
      if (e[c] == 0) {
        out(i, c) = 0.0;
        continue;
      }
      double v = e[c] * pw[c][e[c] - 1];
      for (int o = 0; o < dim_; ++o)
        if (o != c) v *= pw[o][e[o]];
      out(i, c) = v;
    }
  }
}

}  // namespace rda
