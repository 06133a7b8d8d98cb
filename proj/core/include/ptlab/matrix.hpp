#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ptlab {

/// Dense real matrix, column-major. Sequences store tokens as columns,
/// so a d x L sequence has L contiguous d-vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_row_major(std::size_t rows, std::size_t cols,
                               std::span<const double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

  std::span<double> col(std::size_t c) { return {data_.data() + c * rows_, rows_}; }
  std::span<const double> col(std::size_t c) const {
    return {data_.data() + c * rows_, rows_};
  }

  void set_col(std::size_t c, std::span<const double> v);

  std::vector<double> row_major() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Tokens-as-columns sequence carrier (d rows, L columns).
using SeqMatrix = Matrix;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hconcat(const Matrix& a, const Matrix& b);
Matrix outer(std::span<const double> u, std::span<const double> v);

std::vector<double> mat_vec(const Matrix& a, std::span<const double> x);
/// a^T x without forming the transpose.
std::vector<double> matT_vec(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double max_abs(std::span<const double> v);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Singular values in descending order (one-sided Jacobi; fine for the
/// small construction matrices used here).
std::vector<double> singular_values(Matrix a);

}  // namespace ptlab
