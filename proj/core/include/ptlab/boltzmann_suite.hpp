#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptlab/boltzmann.hpp"

namespace ptlab {

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  int precondition_violations = 0;
  std::string note;  // first failure/violation description
  bool pass() const { return failures == 0 && precondition_violations == 0; }
};

struct BoltzSuiteConfig {
  std::uint64_t seed = 1;
  int normalization_cases = 1000;
  int identity_cases = 1000;
  int bounds_cases = 500;
  int gradient_cases = 1000;
  int decrease_cases = 300;
  int second_deriv_cases = 300;
  int concavity_cases = 300;
  int ladder_cases = 200;
  int extension_cases = 200;
  int single_entry_cases = 200;
  int prefix_gap_cases = 200;
  int separation_suites = 200;
  double entry_range = 20.0;    // |z_i| bound for the generic generators
  double identity_tol = 1e-10;
  double gradient_rel_tol = 1e-5;
  double second_deriv_rel_tol = 1e-3;
  // Overrides the per-n output-separation gamma; used to inject an
  // undersized tolerance and exercise the precondition error path.
  double separation_gamma_override = -1.0;
};

/// Per-length parameters for the output-separation suite. The in-vector
/// spread of an n-entry, (4 ln n)-separated vector forces |entries| past
/// (n-1) * 2 ln n, so gamma grows with n.
struct SeparationSuiteParams {
  std::size_t n;
  double gamma;
  double delta;
  std::size_t ladder_size;
  bool distinct_tops;  // keep pairwise first-difference at the top entry
};
SeparationSuiteParams separation_suite_params(std::size_t n);

/// One randomly generated output-separation suite (vectors sharing a
/// delta-separated ladder). Deterministic per (seed, index).
std::vector<std::vector<double>> make_separation_suite(const SeparationSuiteParams& p,
                                                       std::uint64_t seed,
                                                       std::uint64_t index,
                                                       std::size_t max_vectors = 6);

std::vector<SuiteResult> run_boltz_suites(const BoltzSuiteConfig& cfg);

}  // namespace ptlab
