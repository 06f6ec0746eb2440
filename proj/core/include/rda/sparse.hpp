#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace rda {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row; explicit zeros are allowed.
class CSRMatrix {
 public:
  CSRMatrix() = default;
  CSRMatrix(int rows, int cols, std::vector<int> row_offsets, std::vector<int> col_indices,
            std::vector<double> values);

  /// Duplicate entries are summed.
  static CSRMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static CSRMatrix identity(int n);
  static CSRMatrix from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);
  static CSRMatrix from_eigen(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<int>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::span<const int> row_cols(int i) const {
    return {col_indices_.data() + row_offsets_[i], col_indices_.data() + row_offsets_[i + 1]};
  }
  std::span<const double> row_values(int i) const {
    return {values_.data() + row_offsets_[i], values_.data() + row_offsets_[i + 1]};
  }

  /// Entry (i, j), zero when not stored.
  double at(int i, int j) const;
  /// Position of (i, j) in values(), or -1.
  std::ptrdiff_t find(int i, int j) const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> operator*(std::span<const double> x) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  CSRMatrix transpose() const;
  std::vector<double> diagonal() const;
  double max_abs() const;
  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;  // column-major copy for Eigen solvers
  Eigen::SparseMatrix<double, Eigen::RowMajor> to_eigen_rowmajor() const;

  /// this * alpha + other * beta on the union pattern.
  CSRMatrix add(const CSRMatrix& other, double alpha = 1.0, double beta = 1.0) const;

  bool structurally_valid() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

/// Matrix Market coordinate/real/general.
void write_matrix_market(const CSRMatrix& a, const std::filesystem::path& path);
CSRMatrix read_matrix_market(const std::filesystem::path& path);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace rda
