#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/memorize.hpp"
#include "ptlab/rng.hpp"

using namespace ptlab;

namespace {

// Net with one planted target; the dataset is generated by the net itself.
struct Planted {
  Surrogate h;
  TauNet tau;
  SeqMatrix prompt;
  Dataset ds;
};

Planted plant(std::uint64_t seed) {
  const Grid grid = make_grid(0.5, 1, 1);
  auto flip = quantize_fn(
      [](const SeqMatrix& z) {
        SeqMatrix out = z;
        out(0, 0) = 0.5 - z(0, 0);
        return out;
      },
      grid);
  Planted p{build_surrogate({flip}, grid, 2), {}, {}, {}};
  p.tau = assemble_tau_a(p.h, seed);
  p.prompt = select_prompt(p.h, 0);
  p.ds.d = 1;
  p.ds.l = 1;
  for (std::uint64_t code = 0; code < 2; ++code) {
    const SeqMatrix x = grid_decode(code, grid);
    const SeqMatrix out = forward(p.tau.net, hconcat(p.prompt, x));
    SeqMatrix y(1, 1);
    y(0, 0) = out(0, 2);
    p.ds.pairs.emplace_back(x, y);
  }
  return p;
}

}  // namespace

TEST_CASE("grid search recovers a planted prompt with zero loss") {
  const auto p = plant(21);
  const auto res = grid_search_prompt(p.tau.net, p.ds, p.h.input_grid, p.h.l_p,
                                      LossKind::sup_alpha, 1.0);
  CHECK(res.loss <= 1e-9);

  // no probed prompt beats the argmin
  SplitRng rng(4);
  const Grid pgrid = make_grid(0.5, 1, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const SeqMatrix probe = grid_decode(rng.next_below(4), pgrid);
    double acc = 0.0;
    for (const auto& [x, y] : p.ds.pairs) {
      const SeqMatrix out = forward(p.tau.net, hconcat(probe, x));
      SeqMatrix tail(1, 1);
      tail(0, 0) = out(0, 2);
      acc = std::max(acc, alpha_norm_diff(tail, y, 1.0));
    }
    CHECK(res.loss <= acc + 1e-12);
  }
}

TEST_CASE("prompt-free search returns the empty prompt with its loss") {
  const Grid grid = make_grid(0.5, 1, 1);
  auto ident = quantize_fn([](const SeqMatrix& z) { return z; }, grid);
  const auto h = build_surrogate({ident}, grid, 0);
  const auto tau = assemble_tau_a(h, 3);
  Dataset ds;
  ds.d = 1;
  ds.l = 1;
  ds.pairs.emplace_back(Matrix::from_rows({{0.5}}), Matrix::from_rows({{0.5}}));
  const auto res = grid_search_prompt(tau.net, ds, grid, 0, LossKind::mean_alpha, 1.0);
  CHECK(res.prompt.cols() == 0);
  CHECK(res.loss <= 1e-9);
}

TEST_CASE("search-space guard") {
  const auto p = plant(22);
  CHECK_THROWS_AS(
      grid_search_prompt(p.tau.net, p.ds, make_grid(0.1, 1, 1), 9,
                         LossKind::sup_alpha, 1.0),
      precondition_error);
}

TEST_CASE("memorize a single trivial pair") {
  Dataset ds;
  ds.d = 1;
  ds.l = 1;
  ds.pairs.emplace_back(Matrix::from_rows({{0.3}}), Matrix::from_rows({{0.8}}));
  for (Family fam : {Family::A, Family::B}) {
    const auto res = memorize(ds, 1.0, 1.0, 1.0, fam, 12);
    CHECK(res.report.max_err <= 1.0);
    CHECK(res.report.l_p == res.report.l_p_bound);
    CHECK(res.report.delta == 0.5);
    // re-running the stored net reproduces the fit
    const SeqMatrix out = forward(res.net, hconcat(res.prompt, ds.pairs[0].first));
    SeqMatrix tail(1, 1);
    tail(0, 0) = out(0, res.report.l_p);
    CHECK(alpha_norm_diff(tail, ds.pairs[0].second, 1.0) <= 1.0);
  }
}

TEST_CASE("memorize rejects conflicting labels") {
  Dataset ds;
  ds.d = 1;
  ds.l = 1;
  ds.pairs.emplace_back(Matrix::from_rows({{0.25}}), Matrix::from_rows({{0.0}}));
  ds.pairs.emplace_back(Matrix::from_rows({{0.25}}), Matrix::from_rows({{1.0}}));
  CHECK_THROWS_AS(memorize(ds, 1.0, 1.0, 1.0, Family::B, 1), precondition_error);

  // same grid cell, labels further than the grid can represent
  Dataset ds2;
  ds2.d = 1;
  ds2.l = 1;
  ds2.pairs.emplace_back(Matrix::from_rows({{0.26}}), Matrix::from_rows({{0.0}}));
  ds2.pairs.emplace_back(Matrix::from_rows({{0.27}}), Matrix::from_rows({{1.0}}));
  CHECK_THROWS_AS(memorize(ds2, 1.0, 1.0, 1.0, Family::B, 1), precondition_error);
}

TEST_CASE("approximation error chains through the surrogate") {
  // tau -> h -> quantized target -> smooth target, sampled pointwise:
  // each link's gap bounds the end-to-end gap by the triangle inequality,
  // and the first two links vanish on this exact pipeline.
  const Grid grid = make_grid(0.25, 1, 2);
  auto smooth = [](const SeqMatrix& z) {
    SeqMatrix out = z;
    for (std::size_t c = 0; c < z.cols(); ++c)
      out(0, c) = std::min(1.0, 0.5 * z(0, c) + 0.2);
    return out;
  };
  auto fbar = quantize_fn(smooth, grid);
  const auto h = build_surrogate({fbar}, grid, 3);
  const auto tau = assemble_tau_a(h, 9);
  const SeqMatrix prompt = select_prompt(h, 0);

  SplitRng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    SeqMatrix z(1, 2);
    for (int c = 0; c < 2; ++c) z(0, c) = rng.uniform(0.0, 1.0);
    const SeqMatrix zq = grid_quantize(z, grid, Convention::floor_conv);
    const SeqMatrix hv = h.eval(hconcat(prompt, zq), Convention::floor_conv);
    const SeqMatrix out = forward(tau.net, hconcat(prompt, z));
    SeqMatrix tail(1, 2), h_tail(1, 2);
    for (int c = 0; c < 2; ++c) {
      tail(0, c) = out(0, 3 + c);
      h_tail(0, c) = hv(0, 3 + c);
    }
    const double end_to_end = alpha_norm_diff(tail, smooth(z), 1.0);
    const double tau_to_h = alpha_norm_diff(tail, h_tail, 1.0);
    const double h_to_fbar = alpha_norm_diff(h_tail, fbar.eval(zq), 1.0);
    const double fbar_to_f = alpha_norm_diff(fbar.eval(zq), smooth(z), 1.0);
    CHECK(end_to_end <= tau_to_h + h_to_fbar + fbar_to_f + 1e-12);
    CHECK(tau_to_h <= 1e-9);
    CHECK(h_to_fbar == 0.0);
    // quantization link respects the Lipschitz budget C delta (d L)
    CHECK(fbar_to_f <= 0.5 * 0.25 * 2.0 + 0.25 * 2.0 + 1e-12);
  }
}

TEST_CASE("prompt capacity identity in log space") {
  // at L_p = L (1/delta)^(d L) the prompt grid indexes the dense function
  // class: d L_p ln(levels) >= levels^(d L) * d L ln(levels), with equality
  for (const auto& [d, l, levels] :
       {std::tuple<std::size_t, std::size_t, std::size_t>{1, 2, 2},
        std::tuple<std::size_t, std::size_t, std::size_t>{2, 1, 3},
        std::tuple<std::size_t, std::size_t, std::size_t>{1, 3, 2}}) {
    const double n_points = std::pow(static_cast<double>(levels),
                                     static_cast<double>(d * l));
    const double l_p = static_cast<double>(l) * n_points;
    const double lhs = static_cast<double>(d) * l_p * std::log(levels);
    const double rhs = n_points * static_cast<double>(d * l) * std::log(levels);
    CHECK(lhs >= rhs - 1e-9);
    CHECK(lhs == doctest::Approx(rhs));
  }
}

TEST_CASE("memorize four pairs with both families") {
  // the acceptance-scale shape: N = 4, d = 1, L = 2, C = 1, alpha = 1, eps = 1
  SplitRng rng(31);
  Dataset ds;
  ds.d = 1;
  ds.l = 2;
  const double xs[4] = {0.1, 0.35, 0.6, 0.12};
  const double x2[4] = {0.4, 0.65, 0.2, 0.7};
  for (int i = 0; i < 4; ++i) {
    SeqMatrix x(1, 2), y(1, 2);
    x(0, 0) = xs[i];
    x(0, 1) = x2[i];
    y(0, 0) = rng.uniform(0.0, 1.0);
    y(0, 1) = rng.uniform(0.0, 1.0);
    ds.pairs.emplace_back(x, y);
  }
  for (Family fam : {Family::B, Family::A}) {
    const auto res = memorize(ds, 1.0, 1.0, 1.0, fam, 7);
    CHECK(res.report.max_err <= 1.0);
    CHECK(res.report.l_p >= min_prompt_length(1, 2, 1.0, 1.0, 1.0));
    CHECK(res.report.delta == doctest::Approx(0.25));
    if (fam == Family::B) {
      CHECK(res.report.ffn_layers == 2);
      CHECK(res.net.post_ffn.size() == 1);
      // bump width formula: 3 d (l_p + l) per table sequence
      CHECK(res.net.post_ffn[0].neurons() ==
            3 * 1 * (res.report.l_p + 2) * res.report.table_sequences);
    } else {
      // quantizer depth formula d (l_p + l) / delta plus one gate per entry
      CHECK(res.net.pre_ffn.size() == 1 * (res.report.l_p + 2) * 4);
      CHECK(res.report.ffn_layers ==
            res.net.pre_ffn.size() + res.net.post_ffn.size());
    }
  }
}
