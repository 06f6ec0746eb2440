#include "rda/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <locale>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace rda {

CSRMatrix::CSRMatrix(int rows, int cols, std::vector<int> row_offsets, std::vector<int> col_indices,
                     std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != static_cast<std::size_t>(rows_) + 1 || col_indices_.size() != values_.size() ||
      static_cast<std::size_t>(row_offsets_.back()) != values_.size())
    throw std::invalid_argument("CSRMatrix: inconsistent array sizes");
}

CSRMatrix CSRMatrix::from_triplets(int rows, int cols, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> offsets(rows + 1, 0);
  std::vector<int> cols_out;
  std::vector<double> vals;
  cols_out.reserve(t.size());
  vals.reserve(t.size());
  int last_row = -1, last_col = -1;
  for (const auto& e : t) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw std::out_of_range("CSRMatrix::from_triplets: index out of range");
    if (e.row == last_row && e.col == last_col) {
      vals.back() += e.value;
      continue;
    }
    cols_out.push_back(e.col);
    vals.push_back(e.value);
    ++offsets[e.row + 1];
    last_row = e.row;
    last_col = e.col;
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return CSRMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

CSRMatrix CSRMatrix::identity(int n) {
  std::vector<int> off(n + 1), ci(n);
  std::iota(off.begin(), off.end(), 0);
  std::iota(ci.begin(), ci.end(), 0);
  return CSRMatrix(n, n, std::move(off), std::move(ci), std::vector<double>(n, 1.0));
}

CSRMatrix CSRMatrix::from_dense(const Eigen::MatrixXd& d, double drop_tol) {
  std::vector<int> off{0}, ci;
  std::vector<double> v;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (!(std::abs(d(i, j)) <= drop_tol)) {
        ci.push_back(static_cast<int>(j));
        v.push_back(d(i, j));
      }
    off.push_back(static_cast<int>(ci.size()));
  }
  return CSRMatrix(static_cast<int>(d.rows()), static_cast<int>(d.cols()), std::move(off), std::move(ci),
                   std::move(v));
}

CSRMatrix CSRMatrix::from_eigen(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m_in) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> m = m_in;
  m.makeCompressed();
  std::vector<int> off(m.outerIndexPtr(), m.outerIndexPtr() + m.rows() + 1);
  std::vector<int> ci(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
  std::vector<double> v(m.valuePtr(), m.valuePtr() + m.nonZeros());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const int b = off[i], e = off[i + 1];
    if (std::is_sorted(ci.begin() + b, ci.begin() + e)) continue;
    std::vector<std::pair<int, double>> row;
    for (int p = b; p < e; ++p) row.emplace_back(ci[p], v[p]);
    std::sort(row.begin(), row.end());
    for (int p = b; p < e; ++p) std::tie(ci[p], v[p]) = row[p - b];
  }
  return CSRMatrix(static_cast<int>(m.rows()), static_cast<int>(m.cols()), std::move(off), std::move(ci),
                   std::move(v));
}

double CSRMatrix::at(int i, int j) const {
  const auto p = find(i, j);
  return p < 0 ? 0.0 : values_[p];
}

std::ptrdiff_t CSRMatrix::find(int i, int j) const {
  const auto b = col_indices_.begin() + row_offsets_[i];
  const auto e = col_indices_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return -1;
  return it - col_indices_.begin();
}

void CSRMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) s += values_[p] * x[col_indices_[p]];
    y[i] = s;
  }
}

std::vector<double> CSRMatrix::operator*(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

void CSRMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < rows_; ++i)
    for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) y[col_indices_[p]] += values_[p] * x[i];
}

CSRMatrix CSRMatrix::transpose() const {
  std::vector<int> off(cols_ + 1, 0);
  for (int c : col_indices_) ++off[c + 1];
  std::partial_sum(off.begin(), off.end(), off.begin());
  std::vector<int> cursor(off.begin(), off.end() - 1);
  std::vector<int> ci(nnz());
  std::vector<double> v(nnz());
  for (int i = 0; i < rows_; ++i)
    for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const int dst = cursor[col_indices_[p]]++;
      ci[dst] = i;
      v[dst] = values_[p];
    }
  return CSRMatrix(cols_, rows_, std::move(off), std::move(ci), std::move(v));
}

std::vector<double> CSRMatrix::diagonal() const {
  std::vector<double> d(std::min(rows_, cols_), 0.0);
  for (int i = 0; i < static_cast<int>(d.size()); ++i) d[i] = at(i, i);
  return d;
}

double CSRMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Eigen::MatrixXd CSRMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) d(i, col_indices_[p]) += values_[p];
  return d;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> CSRMatrix::to_eigen_rowmajor() const {
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(rows_, cols_);
  m.resizeNonZeros(static_cast<Eigen::Index>(nnz()));
  std::copy(row_offsets_.begin(), row_offsets_.end(), m.outerIndexPtr());
  std::copy(col_indices_.begin(), col_indices_.end(), m.innerIndexPtr());
  std::copy(values_.begin(), values_.end(), m.valuePtr());
  return m;
}

Eigen::SparseMatrix<double> CSRMatrix::to_eigen() const { return Eigen::SparseMatrix<double>(to_eigen_rowmajor()); }

CSRMatrix CSRMatrix::add(const CSRMatrix& o, double alpha, double beta) const {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("CSRMatrix::add: shape mismatch");
  std::vector<int> off{0}, ci;
  std::vector<double> v;
  ci.reserve(nnz() + o.nnz());
  v.reserve(nnz() + o.nnz());
  for (int i = 0; i < rows_; ++i) {
    int p = row_offsets_[i], q = o.row_offsets_[i];
    const int pe = row_offsets_[i + 1], qe = o.row_offsets_[i + 1];
    while (p < pe || q < qe) {
      if (q >= qe || (p < pe && col_indices_[p] < o.col_indices_[q])) {
        ci.push_back(col_indices_[p]);
        v.push_back(alpha * values_[p++]);
      } else if (p >= pe || o.col_indices_[q] < col_indices_[p]) {
        ci.push_back(o.col_indices_[q]);
        v.push_back(beta * o.values_[q++]);
      } else {
        ci.push_back(col_indices_[p]);
        v.push_back(alpha * values_[p++] + beta * o.values_[q++]);
      }
    }
    off.push_back(static_cast<int>(ci.size()));
  }
  return CSRMatrix(rows_, cols_, std::move(off), std::move(ci), std::move(v));
}

bool CSRMatrix::structurally_valid() const {
  if (row_offsets_.size() != static_cast<std::size_t>(rows_) + 1 || row_offsets_.front() != 0) return false;
  for (int i = 0; i < rows_; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i]) return false;
    for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (col_indices_[p] < 0 || col_indices_[p] >= cols_) return false;
      if (p > row_offsets_[i] && col_indices_[p] <= col_indices_[p - 1]) return false;
    }
  }
  return true;
}

void write_matrix_market(const CSRMatrix& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  for (int i = 0; i < a.rows(); ++i) {
    const auto c = a.row_cols(i);
    const auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) out << i + 1 << ' ' << c[p] + 1 << ' ' << v[p] << '\n';
  }
}

CSRMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.imbue(std::locale::classic());
  std::string line;
  std::getline(in, line);
  if (line.rfind("%%MatrixMarket matrix coordinate real", 0) != 0)
    throw std::runtime_error("unsupported Matrix Market header: " + line);
  const bool symmetric = line.find("symmetric") != std::string::npos;
  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream hdr(line);
  hdr.imbue(std::locale::classic());
  long r = 0, c = 0, n = 0;
  if (!(hdr >> r >> c >> n)) throw std::runtime_error("bad Matrix Market size line");
  std::vector<Triplet> t;
  t.reserve(symmetric ? 2 * n : n);
  for (long k = 0; k < n; ++k) {
    long i = 0, j = 0;
    double v = 0;
    if (!(in >> i >> j >> v)) throw std::runtime_error("truncated Matrix Market file");
    t.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
    if (symmetric && i != j) t.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), v});
  }
  return CSRMatrix::from_triplets(static_cast<int>(r), static_cast<int>(c), std::move(t));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace rda
