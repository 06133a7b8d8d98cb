#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptlab/matrix.hpp"

namespace ptlab {

/// Which of the tokenwise-separateness conditions a certificate asserts:
/// full = norms above gamma_min, below gamma_max, unequal tokens > delta apart;
/// gamma_delta drops the lower norm bound; delta_only keeps just the gap.
enum class SeparationKind { full, gamma_delta, delta_only };

struct SeparationCert {
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  double delta = 0.0;
  SeparationKind kind = SeparationKind::full;
};

struct TokenwiseCheck {
  bool ok = true;
  std::string first_violation;  // empty when ok
};

/// Euclidean-norm tokenwise separateness over a set of sequences. Token
/// equality is exact on stored doubles; tokens at distance exactly delta fail.
TokenwiseCheck check_tokenwise(std::span<const SeqMatrix> seqs,
                               const SeparationCert& cert);

struct Vocab {
  std::vector<std::vector<double>> tokens;          // deduplicated, insertion order
  std::vector<std::vector<std::size_t>> seq_tokens; // per-sequence token indices
};

Vocab extract_vocab(std::span<const SeqMatrix> seqs);

/// Samples unit vectors uniformly (normalized Gaussian draws) until one
/// satisfies |u.(x - x')| >= ||x - x'|| sqrt(8 / (pi d)) / |X|^2 for every
/// pair. Throws precondition_error carrying the attempt count on exhaustion.
/// max_tries <= 0 selects the default 10 |X|^2.
std::vector<double> find_separating_unit_vector(
    const std::vector<std::vector<double>>& points, std::uint64_t seed,
    int max_tries = 0);

/// Lower-bound factor of the separating-vector guarantee for |X| = n_points
/// in dimension d.
double separating_lower_factor(std::size_t n_points, std::size_t d);

struct ContextualReport {
  bool pass = false;
  bool norm_ok = false;
  bool gap_ok = false;
  double max_norm = 0.0;
  double min_gap = 0.0;  // over checked (non-exempt) pairs
  std::size_t pairs_checked = 0;
};

/// Checks that `ids` are a (gamma, delta)-contextual mapping image of `seqs`:
/// every ID column norm stays below gamma, and any two positions whose
/// vocabularies or tokens differ keep ID columns more than delta apart.
ContextualReport verify_contextual(std::span<const SeqMatrix> ids,
                                   std::span<const SeqMatrix> seqs, double gamma,
                                   double delta);

}  // namespace ptlab
