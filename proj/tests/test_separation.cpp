#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/rng.hpp"
#include "ptlab/separation.hpp"

using namespace ptlab;

namespace {

// Independent exhaustive pairwise checker used as an oracle.
bool naive_tokenwise(const std::vector<SeqMatrix>& seqs, const SeparationCert& cert) {
  struct Tok {
    std::vector<double> v;
  };
  std::vector<Tok> toks;
  for (const auto& s : seqs)
    for (std::size_t k = 0; k < s.cols(); ++k)
      toks.push_back({std::vector<double>(s.col(k).begin(), s.col(k).end())});
  for (const auto& t : toks) {
    const double n = norm2(t.v);
    if (cert.kind == SeparationKind::full && !(n > cert.gamma_min)) return false;
    if (cert.kind != SeparationKind::delta_only && !(n < cert.gamma_max)) return false;
  }
  for (std::size_t a = 0; a < toks.size(); ++a)
    for (std::size_t b = a + 1; b < toks.size(); ++b) {
      if (toks[a].v == toks[b].v) continue;
      double s2 = 0.0;
      for (std::size_t i = 0; i < toks[a].v.size(); ++i) {
        const double d = toks[a].v[i] - toks[b].v[i];
        s2 += d * d;
      }
      if (!(std::sqrt(s2) > cert.delta)) return false;
    }
  return true;
}

std::vector<SeqMatrix> random_suite(SplitRng& rng) {
  const std::size_t n = 1 + rng.next_below(8);
  const std::size_t d = 1 + rng.next_below(5);
  const std::size_t l = 1 + rng.next_below(6);
  std::vector<SeqMatrix> seqs;
  for (std::size_t i = 0; i < n; ++i) {
    SeqMatrix s(d, l);
    for (std::size_t c = 0; c < l; ++c)
      for (std::size_t r = 0; r < d; ++r) s(r, c) = rng.uniform(-2.0, 2.0);
    seqs.push_back(std::move(s));
  }
  return seqs;
}

}  // namespace

TEST_CASE("tokenwise check basics") {
  const SeqMatrix s = Matrix::from_rows({{1.0}, {0.0}});
  CHECK(check_tokenwise(std::vector<SeqMatrix>{s}, {0.5, 2.0, 0.1, SeparationKind::full}).ok);

  // shared column is exempt from the gap condition
  const SeqMatrix a = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const SeqMatrix b = Matrix::from_rows({{1.0, -1.0}, {0.0, -1.0}});
  const auto res = check_tokenwise(std::vector<SeqMatrix>{a, b},
                                   {0.5, 3.0, 1.0, SeparationKind::full});
  CHECK(res.ok);

  // exactly delta apart fails (strict inequality)
  const SeqMatrix c = Matrix::from_rows({{0.0, 1.0}});
  const auto res2 = check_tokenwise(std::vector<SeqMatrix>{c},
                                    {-1.0, 3.0, 1.0, SeparationKind::gamma_delta});
  CHECK_FALSE(res2.ok);
  CHECK(res2.first_violation.find("within delta") != std::string::npos);

  CHECK_THROWS_AS(
      check_tokenwise(std::vector<SeqMatrix>{Matrix(2, 2), Matrix(3, 2)},
                      {0.1, 1.0, 0.1, SeparationKind::full}),
      std::invalid_argument);
}

TEST_CASE("tokenwise check agrees with the exhaustive oracle") {
  SplitRng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    auto seqs = random_suite(rng);
    SeparationCert cert;
    cert.gamma_min = rng.uniform(0.0, 1.0);
    cert.gamma_max = cert.gamma_min + rng.uniform(0.5, 4.0);
    cert.delta = rng.uniform(0.0, 1.5);
    const int kind = static_cast<int>(rng.next_below(3));
    cert.kind = kind == 0 ? SeparationKind::full
                          : (kind == 1 ? SeparationKind::gamma_delta
                                       : SeparationKind::delta_only);
    CHECK(check_tokenwise(seqs, cert).ok == naive_tokenwise(seqs, cert));
  }
}

TEST_CASE("vocabulary extraction") {
  SeqMatrix same(2, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    same(0, c) = 1.0;
    same(1, c) = 2.0;
  }
  CHECK(extract_vocab(std::vector<SeqMatrix>{same}).tokens.size() == 1);

  const SeqMatrix a = Matrix::from_rows({{0.0, 1.0}});
  const SeqMatrix b = Matrix::from_rows({{2.0, 3.0}});
  const auto v = extract_vocab(std::vector<SeqMatrix>{a, b});
  CHECK(v.tokens.size() == 4);
  CHECK(v.seq_tokens[0] != v.seq_tokens[1]);

  SplitRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto seqs = random_suite(rng);
    // naive nested-loop dedup
    std::vector<std::vector<double>> uniq;
    for (const auto& s : seqs)
      for (std::size_t k = 0; k < s.cols(); ++k) {
        std::vector<double> t(s.col(k).begin(), s.col(k).end());
        bool found = false;
        for (const auto& u : uniq) found = found || u == t;
        if (!found) uniq.push_back(t);
      }
    CHECK(extract_vocab(seqs).tokens.size() == uniq.size());
  }
}

TEST_CASE("separating unit vector: pair example") {
  // X = {0, e_1} in d = 2: |u_1| >= (1/4) sqrt(4/pi)
  const std::vector<std::vector<double>> pts{{0.0, 0.0}, {1.0, 0.0}};
  const auto u = find_separating_unit_vector(pts, 42);
  CHECK(norm2(u) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(u[0]) >= 0.25 * std::sqrt(4.0 / 3.14159265358979323846) - 1e-12);
}

TEST_CASE("separating unit vector: singleton and random sets") {
  const auto u = find_separating_unit_vector({{3.0, 4.0, 0.0}}, 1);
  CHECK(norm2(u) == doctest::Approx(1.0).epsilon(1e-12));

  SplitRng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> pts(8, std::vector<double>(4));
    for (auto& p : pts)
      for (double& x : p) x = rng.uniform(-3.0, 3.0);
    const auto v = find_separating_unit_vector(pts, 1000 + trial);
    const double factor = separating_lower_factor(pts.size(), 4);
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        std::vector<double> diff(4);
        for (int i = 0; i < 4; ++i) diff[i] = pts[a][i] - pts[b][i];
        const double proj = std::abs(dot(v, diff));
        CHECK(proj >= factor * norm2(diff) - 1e-15);
        CHECK(proj <= norm2(diff) + 1e-12);  // Cauchy-Schwarz side
      }
  }

  // determinism per seed
  const std::vector<std::vector<double>> pts{{0.0, 1.0}, {2.0, 0.5}, {-1.0, 2.0}};
  CHECK(find_separating_unit_vector(pts, 9) == find_separating_unit_vector(pts, 9));
}

TEST_CASE("single-draw acceptance rate clears the union-bound floor") {
  SplitRng rng(77);
  int accepted = 0;
  const int trials = 10000;
  const std::size_t n_pts = 8, d = 3;
  std::vector<std::vector<double>> pts(n_pts, std::vector<double>(d));
  for (auto& p : pts)
    for (double& x : p) x = rng.uniform(-2.0, 2.0);
  const double factor = separating_lower_factor(n_pts, d);
  for (int t = 0; t < trials; ++t) {
    std::vector<double> u(d);
    for (double& x : u) x = rng.gaussian();
    const double nn = norm2(u);
    for (double& x : u) x /= nn;
    bool ok = true;
    for (std::size_t a = 0; a < n_pts && ok; ++a)
      for (std::size_t b = a + 1; b < n_pts && ok; ++b) {
        std::vector<double> diff(d);
        for (std::size_t i = 0; i < d; ++i) diff[i] = pts[a][i] - pts[b][i];
        ok = std::abs(dot(u, diff)) >= factor * norm2(diff);
      }
    accepted += ok;
  }
  const double rate = static_cast<double>(accepted) / trials;
  const double pairs = n_pts * (n_pts - 1) / 2.0;
  const double floor_bound = 1.0 - 2.0 * pairs * (2.0 / (n_pts * n_pts));
  CHECK(rate > std::max(0.0, floor_bound));
  CHECK(rate > 1.0 / static_cast<double>(n_pts));  // per-draw success floor
}

TEST_CASE("contextual verification negative cases") {
  // identity map on sequences violating the gap condition
  const SeqMatrix a = Matrix::from_rows({{1.0, 1.05}});
  const SeqMatrix b = Matrix::from_rows({{2.0, 2.05}});
  std::vector<SeqMatrix> seqs{a, b};
  const auto rep = verify_contextual(seqs, seqs, 10.0, 0.5);
  CHECK_FALSE(rep.pass);
  CHECK(rep.norm_ok);

  // all-zero ids: norms fine, gaps all zero
  std::vector<SeqMatrix> zeros{SeqMatrix(1, 2), SeqMatrix(1, 2)};
  const auto rep2 = verify_contextual(zeros, seqs, 1.0, 0.1);
  CHECK(rep2.norm_ok);
  CHECK_FALSE(rep2.gap_ok);
  CHECK(rep2.min_gap == 0.0);
}
