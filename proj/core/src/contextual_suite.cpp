#include "ptlab/contextual_suite.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ptlab/boltzmann.hpp"
#include "ptlab/rng.hpp"

namespace ptlab {

ContextualSuite make_contextual_suite(std::uint64_t seed, std::uint64_t index) {
  SplitRng rng = SplitRng(seed).split("contextual-suite").split(index);
  const std::size_t d = 1 + rng.next_below(4);
  const std::size_t vocab_size = 2 + rng.next_below(5);
  const std::size_t l = 2 + rng.next_below(std::min<std::size_t>(3, vocab_size - 1));
  const std::size_t n_seq = 2 + rng.next_below(5);

  // Tokens on shells of radius [1, 3], pairwise at least 0.35 apart.
  std::vector<std::vector<double>> tokens;
  while (tokens.size() < vocab_size) {
    std::vector<double> t(d);
    double nrm = 0.0;
    for (double& x : t) {
      x = rng.gaussian();
      nrm += x * x;
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    const double radius = rng.uniform(1.0, 3.0);
    for (double& x : t) x *= radius / nrm;
    bool ok = true;
    for (const auto& other : tokens) {
      double s2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = t[i] - other[i];
        s2 += diff * diff;
      }
      ok = ok && std::sqrt(s2) > 0.35;
    }
    if (ok) tokens.push_back(std::move(t));
  }

  // Sequences draw L distinct tokens each; duplicate sequences are rerolled.
  // Small vocabularies can exhaust the distinct arrangements, so the loop is
  // attempt-bounded and callers skip suites that came out short.
  std::set<std::vector<std::size_t>> seen;
  ContextualSuite suite;
  suite.d = d;
  suite.l = l;
  for (int attempt = 0; attempt < 256 && suite.seqs.size() < n_seq; ++attempt) {
    std::vector<std::size_t> pick(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) pick[i] = i;
    for (std::size_t i = vocab_size; i > 1; --i)
      std::swap(pick[i - 1], pick[rng.next_below(i)]);
    pick.resize(l);
    if (!seen.insert(pick).second) continue;
    SeqMatrix s(d, l);
    for (std::size_t c = 0; c < l; ++c)
      for (std::size_t r = 0; r < d; ++r) s(r, c) = tokens[pick[c]][r];
    suite.seqs.push_back(std::move(s));
  }

  double min_norm = 1e300, max_norm = 0.0, min_gap = 1e300;
  for (const auto& t : tokens) {
    const double nn = norm2(t);
    min_norm = std::min(min_norm, nn);
    max_norm = std::max(max_norm, nn);
  }
  for (std::size_t a = 0; a + 1 < tokens.size(); ++a)
    for (std::size_t b = a + 1; b < tokens.size(); ++b) {
      double s2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = tokens[a][i] - tokens[b][i];
        s2 += diff * diff;
      }
      min_gap = std::min(min_gap, std::sqrt(s2));
    }

  suite.params.eps = 0.999 * min_gap;
  suite.params.gamma_min = 0.999 * min_norm;
  suite.params.gamma_max = 1.001 * max_norm;
  suite.params.vocab_size = vocab_size;
  suite.params.seq_len = l;
  return suite;
}

ContextualRunResult run_contextual_suite(const ContextualSuite& suite,
                                         ScaleProfile profile, double scale_factor,
                                         std::uint64_t seed, double gamma_target) {
  ContextualParams params = suite.params;
  params.profile = profile;
  const auto vocab = extract_vocab(suite.seqs);
  params.vocab_size = vocab.tokens.size();
  if (profile == ScaleProfile::desk)
    params.scale_factor = scale_factor > 0.0
                              ? scale_factor
                              : desk_scale_for_gamma(params, suite.d, gamma_target);

  const auto built = build_contextual_head(vocab, params, /*s=*/1, /*rho=*/1, seed);
  const auto cids = context_ids(suite.seqs, built.head, params);

  ContextualRunResult out;
  out.cert = built.cert;
  out.subprecision = built.cert.subprecision;
  out.gamma_check = params.gamma_max + params.eps / 4.0;
  out.gap_bound = built.cert.gap_bound_proof();
  out.max_psi = cids.max_psi_norm;
  out.psi_bound = cids.psi_bound;
  out.psi_ok = cids.psi_within_bound;

  const auto rep =
      verify_contextual(cids.ids, suite.seqs, out.gamma_check, out.gap_bound);
  out.measured_min_gap = rep.min_gap;
  out.measured_max_norm = rep.max_norm;
  if (out.subprecision) {
    out.pass = rep.norm_ok && out.psi_ok;
    out.note = "gap bound sub-precision, vacuously satisfied";
  } else {
    out.pass = rep.pass && out.psi_ok && rep.min_gap > 0.0;
  }
  return out;
}

}  // namespace ptlab
