#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptlab/attention.hpp"
#include "ptlab/matrix.hpp"
#include "ptlab/separation.hpp"

namespace ptlab {

/// Randomly generated embedding suite satisfying the contextual-mapping
/// hypotheses: tokens with norms inside (gamma_min, gamma_max), pairwise
/// gaps above eps, no duplicated token within a sequence.
struct ContextualSuite {
  std::vector<SeqMatrix> seqs;
  ContextualParams params;  // measured separation constants, profile unset
  std::size_t d = 0, l = 0;
};

/// d <= 4, |vocab| <= 6, 2 <= L <= 4, N <= 6; deterministic per (seed, index).
ContextualSuite make_contextual_suite(std::uint64_t seed, std::uint64_t index);

struct ContextualRunResult {
  bool pass = false;
  bool subprecision = false;  // certificate gap bound below 1e-300
  double gamma_check = 0.0;   // gamma_max + eps / 4
  double gap_bound = 0.0;     // certificate proof-exact bound (0 if subprecision)
  double measured_min_gap = 0.0;
  double measured_max_norm = 0.0;
  double max_psi = 0.0;
  double psi_bound = 0.0;
  bool psi_ok = false;
  HeadCertificate cert;
  std::string note;
};

/// Builds a head for the suite's vocabulary and verifies the contextual
/// mapping conditions. Desk profile with scale_factor <= 0 picks the scale
/// automatically (logit range pinned at gamma_target). A sub-precision gap
/// bound is reported as vacuously satisfied.
ContextualRunResult run_contextual_suite(const ContextualSuite& suite,
                                         ScaleProfile profile, double scale_factor,
                                         std::uint64_t seed,
                                         double gamma_target = 12.0);

}  // namespace ptlab
