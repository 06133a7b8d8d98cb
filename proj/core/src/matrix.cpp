#include "ptlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptlab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m.cols_) throw std::invalid_argument("ragged row list");
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix Matrix::from_row_major(std::size_t rows, std::size_t cols,
                              std::span<const double> data) {
  if (data.size() != rows * cols) throw std::invalid_argument("row-major size mismatch");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
  return m;
}

void Matrix::set_col(std::size_t c, std::span<const double> v) {
  if (v.size() != rows_) throw std::invalid_argument("column size mismatch");
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(c * rows_));
}

std::vector<double> Matrix::row_major() const {
  std::vector<double> out(rows_ * cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[r * cols_ + c] = (*this)(r, c);
  return out;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkc = b(k, c);
      if (bkc == 0.0) continue;
      for (std::size_t r = 0; r < a.rows(); ++r) out(r, c) += a(r, k) * bkc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.rows() != b.rows()) throw std::invalid_argument("hconcat row mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t c = 0; c < a.cols(); ++c) out.set_col(c, a.col(c));
  for (std::size_t c = 0; c < b.cols(); ++c) out.set_col(a.cols() + c, b.col(c));
  return out;
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
  Matrix out(u.size(), v.size());
  for (std::size_t c = 0; c < v.size(); ++c)
    for (std::size_t r = 0; r < u.size(); ++r) out(r, c) = u[r] * v[c];
  return out;
}

std::vector<double> mat_vec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw std::invalid_argument("mat_vec shape mismatch");
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double xc = x[c];
    if (xc == 0.0) continue;
    for (std::size_t r = 0; r < a.rows(); ++r) out[r] += a(r, c) * xc;
  }
  return out;
}

std::vector<double> matT_vec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw std::invalid_argument("matT_vec shape mismatch");
  std::vector<double> out(a.cols());
  for (std::size_t c = 0; c < a.cols(); ++c) out[c] = dot(a.col(c), x);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c)
    for (std::size_t r = 0; r < a.rows(); ++r)
      m = std::max(m, std::abs(a(r, c) - b(r, c)));
  return m;
}

std::vector<double> singular_values(Matrix a) {
  // One-sided Jacobi: orthogonalize columns of a (tall orientation).
  if (a.rows() < a.cols()) a = transpose(a);
  const std::size_t n = a.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double app = dot(a.col(p), a.col(p));
        const double aqq = dot(a.col(q), a.col(q));
        const double apq = dot(a.col(p), a.col(q));
        if (std::abs(apq) <= 1e-30 + 1e-15 * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < a.rows(); ++r) {
          const double vp = a(r, p), vq = a(r, q);
          a(r, p) = c * vp - s * vq;
          a(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(n);
  for (std::size_t c = 0; c < n; ++c) sv[c] = norm2(a.col(c));
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

}  // namespace ptlab
