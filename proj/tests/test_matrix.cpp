#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ptlab/matrix.hpp"
#include "ptlab/rng.hpp"

using namespace ptlab;

TEST_CASE("matmul against hand expansion") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  const Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 19);
  CHECK(c(0, 1) == 22);
  CHECK(c(1, 0) == 43);
  CHECK(c(1, 1) == 50);
  CHECK_THROWS_AS(matmul(a, Matrix(3, 2)), std::invalid_argument);
}

TEST_CASE("transpose, concat and vector products") {
  const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix at = transpose(a);
  CHECK(at.rows() == 3);
  CHECK(at(2, 1) == 6);
  const std::vector<double> x{1.0, -1.0, 2.0};
  const auto ax = mat_vec(a, x);
  CHECK(ax[0] == doctest::Approx(5.0));
  CHECK(ax[1] == doctest::Approx(11.0));
  const std::vector<double> y{1.0, 1.0};
  const auto aty = matT_vec(a, y);
  CHECK(aty[2] == doctest::Approx(9.0));
  const Matrix h = hconcat(a, a);
  CHECK(h.cols() == 6);
  CHECK(h(1, 5) == 6);
  CHECK(hconcat(Matrix(2, 0), a).cols() == 3);
}

TEST_CASE("row-major round trip") {
  SplitRng rng(7);
  Matrix m(3, 4);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 3; ++r) m(r, c) = rng.uniform(-2, 2);
  const auto rm = m.row_major();
  CHECK(Matrix::from_row_major(3, 4, rm) == m);
}

TEST_CASE("singular values of known matrices") {
  // diag(3, 2) embedded in a rotation keeps singular values {3, 2}
  const Matrix d = Matrix::from_rows({{3, 0}, {0, 2}});
  const auto sv = singular_values(d);
  CHECK(sv[0] == doctest::Approx(3.0));
  CHECK(sv[1] == doctest::Approx(2.0));

  // rank-1 outer product: one nonzero singular value = |u||v|
  const std::vector<double> u{1, 2, 2};
  const std::vector<double> v{3, 4};
  const auto sv2 = singular_values(outer(u, v));
  CHECK(sv2[0] == doctest::Approx(15.0));
  CHECK(sv2[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("singular values match Frobenius norm on random matrices") {
  SplitRng rng(11);
  for (int c = 0; c < 20; ++c) {
    const std::size_t r = 2 + rng.next_below(5), k = 2 + rng.next_below(5);
    Matrix m(r, k);
    double fro2 = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < r; ++i) {
        m(i, j) = rng.uniform(-2, 2);
        fro2 += m(i, j) * m(i, j);
      }
    const auto sv = singular_values(m);
    double sum2 = 0.0;
    for (double s : sv) sum2 += s * s;
    CHECK(sum2 == doctest::Approx(fro2).epsilon(1e-10));
  }
}
