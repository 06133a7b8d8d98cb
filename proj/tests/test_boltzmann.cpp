#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/boltzmann_suite.hpp"
#include "ptlab/rng.hpp"

using namespace ptlab;

TEST_CASE("softmax basics") {
  const auto p = softmax(std::vector<double>{0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  for (double c : {-3.0, 0.0, 7.5}) {
    const auto q = softmax(std::vector<double>{c, c, c, c});
    for (double v : q) CHECK(v == doctest::Approx(0.25));
  }

  // e^0 / (e^0 + 3) = 1/4
  const auto r = softmax(std::vector<double>{0.0, std::log(3.0)});
  CHECK(r[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(softmax(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, std::nan("")}),
                  std::invalid_argument);
}

TEST_CASE("softmax survives huge logits") {
  const auto p = softmax(std::vector<double>{1e6, 1e6 - 5.0, -1e6});
  CHECK(p[0] > 0.99);
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boltz basics") {
  CHECK(boltz(std::vector<double>{4.2, 4.2, 4.2}) == doctest::Approx(4.2));
  CHECK(boltz(std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
  // p = (1/4, 3/4): 0 * 1/4 + ln 3 * 3/4
  CHECK(boltz(std::vector<double>{0.0, std::log(3.0)}) ==
        doctest::Approx(0.75 * std::log(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(boltz(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("partition function and entropy") {
  auto [logz, ent] = partition_entropy(std::vector<double>{0.0, 0.0});
  CHECK(logz == doctest::Approx(std::log(2.0)));
  CHECK(ent == doctest::Approx(std::log(2.0)));

  auto [logz1, ent1] = partition_entropy(std::vector<double>{0.0});
  CHECK(logz1 == doctest::Approx(0.0));
  CHECK(ent1 == doctest::Approx(0.0));

  auto [logz2, ent2] = partition_entropy(std::vector<double>{0.0, std::log(3.0)});
  CHECK(logz2 == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const double expected =
      -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
  CHECK(ent2 == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient closed form and decrease condition") {
  const auto g = boltz_grad(std::vector<double>{0.0, 0.0});
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));

  // entry far below the max has a strictly negative partial
  const std::vector<double> z{5.0, 5.0 - (std::log(2.0) + 1.5)};
  CHECK(boltz_grad(z)[1] < 0.0);
}

TEST_CASE("second derivative example and uniform case") {
  // gap 10 > ln 2 + 3
  CHECK(boltz_second_deriv(std::vector<double>{10.0, 0.0}, 1) < 0.0);
  CHECK_THROWS_AS(boltz_second_deriv(std::vector<double>{1.0, 2.0}, 2),
                  std::invalid_argument);

  // uniform z: formula reduces to p (2 - 2p) > 0
  const std::vector<double> z{1.3, 1.3, 1.3};
  const double p = 1.0 / 3.0;
  CHECK(boltz_second_deriv(z, 0) == doctest::Approx(p * (2.0 - 2.0 * p)).epsilon(1e-12));
}

TEST_CASE("separation checker preconditions") {
  CHECK_THROWS_AS(
      check_boltz_separation({{1.0, 30.0}, {30.0, 1.0}}, 40.0, 4.0 * std::log(2.0)),
      precondition_error);  // identical sorted entries
  CHECK_THROWS_AS(check_boltz_separation({{1.0, 2.0}, {8.0, 16.0}}, 20.0, 1.0),
                  precondition_error);  // delta below 4 ln n
  CHECK_THROWS_AS(
      check_boltz_separation({{1.0, 1.0 + 6.0}, {15.0, 2.0}}, 20.0, 6.0),
      precondition_error);  // unequal entries within delta (1 vs 2)
  // injected gamma below the data
  auto suite = make_separation_suite(separation_suite_params(4), 3, 0);
  CHECK_THROWS_AS(check_boltz_separation(suite, 1.0, 4.0 * std::log(4.0)),
                  precondition_error);
}

TEST_CASE("separation example evaluated directly") {
  // Shared top entries, last entries -6 vs -7; the output gap clears
  // ln^2(4) e^{-2 * 12.001} by orders of magnitude.
  const std::vector<double> a{12.0, 6.0, 0.0, -6.0};
  const std::vector<double> b{12.0, 6.0, 0.0, -7.0};
  const double gap = std::abs(boltz(a) - boltz(b));
  const double bound = std::pow(std::log(4.0), 2.0) * std::exp(-2.0 * 12.001);
  CHECK(gap > bound);
  // the cross pair (-6, -7) sits within delta = 6, so the validated
  // entry point refuses this input
  CHECK_THROWS_AS(check_boltz_separation({a, b}, 12.001, 6.0), precondition_error);
}

TEST_CASE("generated separation suites pass the checker") {
  for (std::size_t n : {std::size_t{4}, std::size_t{8}, std::size_t{16}}) {
    const auto params = separation_suite_params(n);
    for (std::uint64_t idx = 0; idx < 8; ++idx) {
      const auto suite = make_separation_suite(params, 17, idx);
      if (suite.size() < 2) continue;
      const auto rep = check_boltz_separation(suite, params.gamma, params.delta);
      CHECK(rep.pass);
      CHECK(rep.min_gap > rep.bound);
      CHECK_FALSE(rep.vacuous_subprecision);
    }
  }
}

TEST_CASE("boltz identity holds for large entries") {
  SplitRng rng(23);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 2 + rng.next_below(31);
    std::vector<double> z(n);
    for (double& v : z) v = rng.uniform(-50.0, 50.0);
    const auto pe = partition_entropy(z);
    CHECK(std::abs(boltz(z) - (pe.log_partition - pe.entropy)) <= 1e-10);
  }
}

TEST_CASE("property suites all pass on a reduced budget") {
  BoltzSuiteConfig cfg;
  cfg.seed = 5;
  cfg.normalization_cases = 200;
  cfg.identity_cases = 200;
  cfg.bounds_cases = 100;
  cfg.gradient_cases = 150;
  cfg.decrease_cases = 60;
  cfg.second_deriv_cases = 60;
  cfg.concavity_cases = 60;
  cfg.ladder_cases = 60;
  cfg.extension_cases = 60;
  cfg.single_entry_cases = 60;
  cfg.prefix_gap_cases = 60;
  cfg.separation_suites = 30;
  const auto results = run_boltz_suites(cfg);
  CHECK(results.size() == 12);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.note);
    CHECK(r.failures == 0);
    CHECK(r.precondition_violations == 0);
    CHECK(r.cases > 0);
  }
}

TEST_CASE("suite runner reports injected bad tolerance") {
  BoltzSuiteConfig cfg;
  cfg.seed = 5;
  cfg.normalization_cases = 1;
  cfg.identity_cases = 1;
  cfg.bounds_cases = 1;
  cfg.gradient_cases = 1;
  cfg.decrease_cases = 1;
  cfg.second_deriv_cases = 1;
  cfg.concavity_cases = 1;
  cfg.ladder_cases = 1;
  cfg.extension_cases = 1;
  cfg.single_entry_cases = 1;
  cfg.prefix_gap_cases = 1;
  cfg.separation_suites = 6;
  cfg.separation_gamma_override = 2.0;  // below the generated data
  const auto results = run_boltz_suites(cfg);
  const auto& sep = results.back();
  CHECK(sep.name == "output_separation");
  CHECK(sep.precondition_violations > 0);
}
