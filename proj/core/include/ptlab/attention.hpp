#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptlab/matrix.hpp"
#include "ptlab/separation.hpp"

namespace ptlab {

/// Single self-attention head. Construction-produced heads keep
/// rank(w_k) = rank(w_q) = rank(w_v) = rank_rho (singular values above
/// 1e-9 * sigma_max).
struct AttentionHead {
  Matrix w_o;  // d x s
  Matrix w_v;  // s x d
  Matrix w_k;  // s x d
  Matrix w_q;  // s x d
  int rank_rho = 1;

  std::size_t dim() const { return w_o.rows(); }
  std::size_t hidden() const { return w_v.rows(); }
};

enum class ScaleProfile { paper_faithful, desk };

/// Constants driving the contextual-mapping head construction. Under the
/// paper_faithful profile the key-query product is sized for the proof's
/// exact constants (logits can reach ~1e6 and the gap bound underflows);
/// the desk profile multiplies it by scale_factor to keep the logit range
/// representable, trading certified constants for measurable gaps.
struct ContextualParams {
  double eps = 0.0;        // token separation (Def. condition gap)
  double gamma_min = 0.0;  // strict lower bound on token norms
  double gamma_max = 0.0;  // strict upper bound on token norms
  std::size_t vocab_size = 0;
  std::size_t seq_len = 0;   // L: softmax width, drives delta_sep and bounds
  double delta_sep = 0.0;    // <= 0 selects the default 4 ln seq_len
  ScaleProfile profile = ScaleProfile::desk;
  double scale_factor = 1e-4;  // desk profile multiplier c

  double scale() const {
    return profile == ScaleProfile::paper_faithful ? 1.0 : scale_factor;
  }
  double effective_delta_sep() const;
};

/// Scale factor that pins the worst-case logit magnitude at gamma_target
/// so exp(-2 gamma) stays representable.
double desk_scale_for_gamma(const ContextualParams& p, std::size_t d,
                            double gamma_target = 20.0);

struct HeadCertificate {
  double scale_c = 1.0;
  double key_query_product = 0.0;  // |p1 . p1'|
  double delta_sep = 0.0;
  double eps = 0.0, gamma_min = 0.0, gamma_max = 0.0;
  std::size_t vocab_size = 0, seq_len = 0;
  int rho = 1, hidden = 1;
  double gamma_logit = 0.0;            // bound on key-query logits
  double log_boltz_gap = 0.0;          // ln of ln^2(L) e^{-2 gamma_logit}
  double log_gap_bound_proof = 0.0;    // proof-exact ID gap bound (log)
  double log_gap_bound_simplified = 0.0;
  bool subprecision = false;           // proof bound below 1e-300
  std::vector<double> sep_vector;      // separating unit vector q1
  std::uint64_t seed = 0;

  double gap_bound_proof() const;       // 0 when sub-precision
  double gap_bound_simplified() const;
};

struct BuiltHead {
  AttentionHead head;
  HeadCertificate cert;
};

/// Attention for one query token: (w_v Z) softmax((w_k Z)^T (w_q x)),
/// softmax over columns with max-subtraction.
std::vector<double> attn_token(std::span<const double> x, const SeqMatrix& z,
                               const AttentionHead& head);

/// Residual self-attention layer: column k maps to
/// Z_k + w_o attn_token(Z_k, Z).
SeqMatrix self_attn_layer(const SeqMatrix& z, const AttentionHead& head);

/// Outer-product-sum weight construction making the head a contextual
/// mapping for any vocabulary that is (gamma_min, gamma_max, eps)-separated:
/// w_k, w_q share a dominant component along the separating unit vector of
/// the vocabulary (plus the zero vector), w_v reuses that vector on the value
/// side, and w_o is calibrated so every value component lands with norm
/// eps / (4 rho gamma_max). Secondary components only raise the rank.
BuiltHead build_contextual_head(const Vocab& vocab, const ContextualParams& params,
                                int s, int rho, std::uint64_t seed);

struct ContextIds {
  std::vector<SeqMatrix> ids;
  double max_psi_norm = 0.0;
  double psi_bound = 0.0;  // eps / 4
  bool psi_within_bound = false;
};

/// Applies the residual attention layer as a contextual mapping after
/// validating its hypotheses (tokenwise separation per `params`, no
/// duplicated token within a sequence). Also records the attention
/// displacement norms ||Psi||.
ContextIds context_ids(std::span<const SeqMatrix> seqs, const AttentionHead& head,
                       const ContextualParams& params);

struct PromptDecomposition {
  double lambda = 0.0;                // in (0, 1)
  std::vector<double> att_prompt;     // w_o attn_token(x, P)
  std::vector<double> att_input;      // w_o attn_token(x, X)
};

/// Splits attention over a concatenated [P, X] into the prompt-only and
/// input-only attention vectors: w_o attn_token(x, [P, X]) equals
/// lambda * att_prompt + (1 - lambda) * att_input. The weights are computed
/// in log space with a common max so the ratio is stable.
PromptDecomposition prompt_decomposition(std::span<const double> x,
                                         const SeqMatrix& prompt,
                                         const SeqMatrix& input,
                                         const AttentionHead& head);

}  // namespace ptlab
