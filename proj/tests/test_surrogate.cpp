#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/rng.hpp"
#include "ptlab/surrogate.hpp"

using namespace ptlab;

TEST_CASE("grid validation") {
  CHECK(make_grid(0.25, 1, 2).levels() == 4);
  CHECK_THROWS_AS(make_grid(0.3, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.5, 0, 1), std::invalid_argument);
}

TEST_CASE("grid quantization conventions") {
  const Grid g = make_grid(0.5, 1, 1);
  // on-grid values are fixed points of both conventions
  for (double v : {0.0, 0.5}) {
    CHECK(grid_quantize(Matrix::from_rows({{v}}), g, Convention::floor_conv)(0, 0) == v);
    CHECK(grid_quantize(Matrix::from_rows({{v}}), g, Convention::step_conv)(0, 0) == v);
  }
  CHECK(grid_quantize(Matrix::from_rows({{0.7}}), g, Convention::floor_conv)(0, 0) ==
        doctest::Approx(0.5));
  CHECK(grid_quantize(Matrix::from_rows({{0.7}}), g, Convention::step_conv)(0, 0) ==
        doctest::Approx(1.0));
  CHECK(grid_quantize(Matrix::from_rows({{1.0}}), g, Convention::floor_conv)(0, 0) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(grid_quantize(Matrix::from_rows({{1.2}}), g, Convention::floor_conv),
                  std::invalid_argument);

  // random entries against a per-entry loop oracle
  SplitRng rng(3);
  const Grid g2 = make_grid(0.25, 2, 3);
  for (int trial = 0; trial < 300; ++trial) {
    SeqMatrix z(2, 3);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t r = 0; r < 2; ++r) z(r, c) = rng.uniform(0.0, 1.0);
    const auto fl = grid_quantize(z, g2, Convention::floor_conv);
    const auto st = grid_quantize(z, g2, Convention::step_conv);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t r = 0; r < 2; ++r) {
        const double scaled = z(r, c) / 0.25;
        const bool exact = std::abs(scaled - std::round(scaled)) <= 1e-9;
        const double want_floor =
            exact ? z(r, c) : std::min(std::floor(scaled), 3.0) * 0.25;
        const double want_step = exact ? z(r, c) : std::ceil(scaled) * 0.25;
        CHECK(fl(r, c) == doctest::Approx(want_floor).epsilon(1e-12));
        CHECK(st(r, c) == doctest::Approx(want_step).epsilon(1e-12));
      }
    // idempotence
    CHECK(grid_quantize(fl, g2, Convention::floor_conv) == fl);
    CHECK(grid_quantize(st, g2, Convention::step_conv) == st);
  }
}

TEST_CASE("grid codes round trip") {
  const Grid g = make_grid(0.25, 2, 2);
  SplitRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t code = rng.next_below(4 * 4 * 4 * 4);
    CHECK(grid_encode(grid_decode(code, g), g) == code);
  }
  CHECK_THROWS_AS(grid_encode(Matrix::from_rows({{0.1, 0.0}, {0.0, 0.0}}), g),
                  std::invalid_argument);
}

TEST_CASE("quantize_fn basics and Lipschitz gap") {
  const Grid g = make_grid(0.25, 1, 2);

  auto ident = quantize_fn([](const SeqMatrix& z) { return z; }, g);
  CHECK(ident.is_dense());
  for (std::uint64_t code = 0; code < 16; ++code) {
    const auto z = grid_decode(code, g);
    CHECK(ident.eval(z) == z);
  }

  const SeqMatrix c = Matrix::from_rows({{0.5, 0.25}});
  auto constant = quantize_fn([&](const SeqMatrix&) { return c; }, g);
  CHECK(constant.eval(grid_decode(7, g)) == c);

  // f = clamp(2 z): 2-Lipschitz; measured sup gap <= C delta (d L) = 1
  auto clamp2 = [](const SeqMatrix& z) {
    SeqMatrix out = z;
    for (std::size_t col = 0; col < z.cols(); ++col)
      out(0, col) = std::min(1.0, 2.0 * z(0, col));
    return out;
  };
  auto fbar = quantize_fn(clamp2, g);
  SplitRng rng(11);
  double sup = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    SeqMatrix z(1, 2);
    for (std::size_t col = 0; col < 2; ++col) z(0, col) = rng.uniform(0.0, 1.0);
    const auto zq = grid_quantize(z, g, Convention::floor_conv);
    sup = std::max(sup, alpha_norm_diff(fbar.eval(zq), clamp2(z), 1.0));
  }
  CHECK(sup <= 2.0 * 0.25 * 2.0);
}

TEST_CASE("quantize_fn rejects out-of-range outputs") {
  const Grid g = make_grid(0.5, 1, 1);
  auto bad = [](const SeqMatrix& z) {
    SeqMatrix out = z;
    out(0, 0) = 1.5;
    return out;
  };
  CHECK_THROWS_AS(quantize_fn(bad, g), std::invalid_argument);
}

TEST_CASE("prompt length bound") {
  CHECK(min_prompt_length(1, 2, 1.0, 1.0, 1.0) == 32);
  // base of the exponent collapses to 1: L_p = L
  CHECK(min_prompt_length(1, 2, 2.0 * 1.0 * 2.0, 1.0, 1.0) == 2);
  // halving eps multiplies lambda by 2^(d l)
  const auto a = min_prompt_length(1, 2, 1.0, 1.0, 1.0);
  const auto b = min_prompt_length(1, 2, 0.5, 1.0, 1.0);
  CHECK(b == a * 4);
  // monotone in eps, C, d, L
  CHECK(min_prompt_length(1, 2, 0.5, 1.0, 1.0) > min_prompt_length(1, 2, 1.0, 1.0, 1.0));
  CHECK(min_prompt_length(1, 2, 1.0, 2.0, 1.0) > min_prompt_length(1, 2, 1.0, 1.0, 1.0));
  CHECK(min_prompt_length(2, 2, 1.0, 1.0, 1.0) > min_prompt_length(1, 2, 1.0, 1.0, 1.0));
  CHECK_THROWS_AS(min_prompt_length(1, 2, 0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(min_prompt_length(4, 8, 1e-6, 1.0, 1.0), std::overflow_error);
}

TEST_CASE("surrogate construction and evaluation") {
  const Grid g = make_grid(0.5, 1, 2);
  auto ident = quantize_fn([](const SeqMatrix& z) { return z; }, g);

  SUBCASE("single target reproduces it on every grid input") {
    const auto h = build_surrogate({ident}, g, 3);
    const auto prompt = select_prompt(h, 0);
    CHECK(prompt.cols() == 3);
    // prompts avoid the all-zero first column
    CHECK(norm2(prompt.col(0)) > 0.0);
    for (std::uint64_t code = 0; code < 4; ++code) {
      const auto z = grid_decode(code, g);
      const auto out = h.eval(hconcat(prompt, z));
      for (std::size_t c = 0; c < 3; ++c) CHECK(out(0, c) == 0.0);  // zero prefix
      for (std::size_t c = 0; c < 2; ++c) CHECK(out(0, 3 + c) == z(0, c));
    }
  }

  SUBCASE("off-table prompts resolve to zero output") {
    const auto h = build_surrogate({ident}, g, 3);
    SeqMatrix other(1, 3);  // on-grid but not in the table
    other(0, 0) = 0.5;
    other(0, 1) = 0.5;
    other(0, 2) = 0.5;
    if (h.prompt_index(other)) return;  // (not the selected prompt by construction)
    const auto out = h.eval(hconcat(other, grid_decode(1, g)));
    for (std::size_t c = 0; c < 5; ++c) CHECK(out(0, c) == 0.0);
  }

  SUBCASE("off-grid prompt inside the cell of the table prompt behaves like it") {
    const auto h = build_surrogate({ident}, g, 3);
    const auto prompt = select_prompt(h, 0);
    SeqMatrix nudged = prompt;
    for (std::size_t c = 0; c < 3; ++c)
      if (nudged(0, c) > 0.0) nudged(0, c) -= 0.2;  // stays in the (p-d, p] cell
    const auto z = grid_decode(2, g);
    CHECK(h.eval(hconcat(nudged, z)) == h.eval(hconcat(prompt, z)));
  }

  SUBCASE("distinct targets get distinct prompts") {
    auto flip = quantize_fn(
        [](const SeqMatrix& z) {
          SeqMatrix out = z;
          for (std::size_t c = 0; c < z.cols(); ++c) out(0, c) = 0.5 - z(0, c);
          return out;
        },
        g);
    const auto h = build_surrogate({ident, flip}, g, 3);
    CHECK_FALSE(select_prompt(h, 0) == select_prompt(h, 1));
    CHECK_THROWS_AS(select_prompt(h, 2), std::invalid_argument);
    // round trip: the table index of prompt i is i
    CHECK(h.prompt_index(select_prompt(h, 1)) == 1);
  }

  SUBCASE("insufficient prompt length is rejected") {
    std::vector<QuantizedSeqFn> many(2, ident);
    CHECK_THROWS_AS(build_surrogate(many, g, 0), precondition_error);
  }
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.d = 1;
  ds.l = 1;
  ds.pairs.emplace_back(Matrix::from_rows({{0.25}}), Matrix::from_rows({{0.5}}));
  ds.pairs.emplace_back(Matrix::from_rows({{0.25}}), Matrix::from_rows({{0.75}}));
  CHECK_THROWS_AS(validate_dataset(ds), precondition_error);

  ds.pairs[1] = {Matrix::from_rows({{0.3}}), Matrix::from_rows({{1.5}})};
  CHECK_THROWS_AS(validate_dataset(ds), std::invalid_argument);

  ds.pairs[1] = {Matrix::from_rows({{0.25}}), Matrix::from_rows({{0.5}})};
  CHECK_NOTHROW(validate_dataset(ds));  // duplicate pair with equal label is fine
}

TEST_CASE("alpha norms") {
  const auto a = Matrix::from_rows({{1.0, 0.0}});
  const auto b = Matrix::from_rows({{0.0, 2.0}});
  CHECK(alpha_norm_diff(a, b, 1.0) == doctest::Approx(3.0));
  CHECK(alpha_norm_diff(a, b, 2.0) == doctest::Approx(std::sqrt(5.0)));
  CHECK_THROWS_AS(alpha_norm_diff(a, Matrix(1, 3), 1.0), std::invalid_argument);
}
