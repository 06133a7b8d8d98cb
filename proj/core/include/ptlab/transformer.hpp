#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptlab/attention.hpp"
#include "ptlab/matrix.hpp"
#include "ptlab/surrogate.hpp"

namespace ptlab {

/// Piecewise-linear scalar activation with at most three pieces, at least
/// one of them constant. Piece p covers [breaks[p-1], breaks[p]); the first
/// piece extends to -inf and the last to +inf. Evaluated exactly rather than
/// re-expressed through ReLU neurons.
struct PiecewiseLinearActivation {
  std::vector<double> breaks;      // sorted, size <= 2
  std::vector<double> slopes;      // size breaks.size() + 1
  std::vector<double> intercepts;  // same size as slopes

  double eval(double t) const;
  std::size_t pieces() const { return slopes.size(); }
  bool phi_class() const;  // <= 3 pieces, >= 1 constant
};

enum class Activation { relu, plw };

/// Residual feed-forward layer: token z gains w2 * act(w1 z + b1) + b2.
struct FfnLayer {
  Matrix w1;                // r x d
  std::vector<double> b1;   // r
  Matrix w2;                // d x r
  std::vector<double> b2;   // d
  Activation kind = Activation::relu;
  PiecewiseLinearActivation plw;  // used when kind == plw

  std::size_t neurons() const { return w1.rows(); }
  void apply_token_inplace(std::span<double> z) const;
  SeqMatrix apply(const SeqMatrix& z) const;
};

enum class Family { A, B, none };

struct TransformerNet {
  std::vector<FfnLayer> pre_ffn;
  AttentionHead attn;
  std::vector<FfnLayer> post_ffn;
  std::optional<SeqMatrix> pos_enc;
  Family family = Family::none;
  std::size_t d = 0;
  std::size_t l_total = 0;
};

/// Position matrix with every row equal to (0, 1, ..., l_total - 1).
SeqMatrix positional_encoding(std::size_t d, std::size_t l_total);

/// d * l_total / delta single-neuron layers; layer (i, k) subtracts the
/// sub-cell offset of row i inside [k delta, k delta + delta), so the
/// composite floors every entry of Z + E onto the shifted grid.
std::vector<FfnLayer> build_quant_stack(std::size_t d, std::size_t l_total,
                                        double delta);

/// Single wide ReLU layer computing the theta-smoothed staircase entrywise:
/// risers at every t delta in [0, l_total), each climbing over [t delta,
/// t delta + theta). Exact grid multiples sit at riser feet and pass through
/// unchanged. Two extra neurons per coordinate cancel the residual input.
FfnLayer build_step_ffn(std::size_t d, std::size_t l_total, double delta,
                        double theta);

struct IdTableEntry {
  SeqMatrix id;      // context-ID sequence (post-attention)
  SeqMatrix target;  // desired output sequence
};

/// One boxcar-gate layer per (entry, column): fires when the projection of
/// the current token onto gate_dir lands within gate_width of that ID
/// column's projection, adding (target - id). gate_width <= 0 selects a
/// quarter of the minimum pairwise projected ID gap. Throws on gate
/// collisions (IDs or rewritten targets inside a foreign window).
std::vector<FfnLayer> build_output_stack_a(const std::vector<IdTableEntry>& table,
                                           std::span<const double> gate_dir,
                                           double gate_width = 0.0);

/// Single wide ReLU layer summing a triangular bump per (entry, column):
/// coordinate hats ReLU(K x - 1) - 2 ReLU(K x) + ReLU(K x + 1) peak exactly
/// on the ID token and vanish one 1/K away, routing each ID to its target.
/// k_sharp <= 0 selects 2 / (minimum nonzero coordinate gap).
FfnLayer build_bump_ffn_b(const std::vector<IdTableEntry>& table,
                          double k_sharp = 0.0);

struct TauOptions {
  double scale_factor = 0.0;  // <= 0: auto, sized for gamma_target
  double gamma_target = 20.0;
  double delta_sep = 0.0;     // <= 0: 4 ln l_total
  double gate_width = 0.0;    // family A; <= 0: auto
  double theta = 0.0;         // family B; <= 0: delta / 2
  double bump_k = 0.0;        // family B; <= 0: auto
  std::size_t full_table_guard = 100000;  // max grid points materialized per prompt
};

struct TauBuildInfo {
  Family family = Family::none;
  double delta = 0.0;
  std::size_t d = 0, l = 0, l_p = 0, l_total = 0;
  std::size_t table_sequences = 0;
  std::size_t table_token_entries = 0;
  std::size_t quant_layers = 0;     // family A pre-stack depth
  std::size_t output_layers = 0;    // family A post-stack depth
  std::size_t step_neurons = 0;     // family B pre width
  std::size_t bump_neurons = 0;     // family B post width
  double gate_width = 0.0;
  double theta = 0.0;
  double bump_k = 0.0;
  double min_projected_id_gap = 0.0;
  double max_psi_norm = 0.0;
  double psi_bound = 0.0;
  HeadCertificate cert;
};

struct TauNet {
  TransformerNet net;
  TauBuildInfo info;
};

/// Deep-and-narrow realization: positional encoding, floor quantizer stack,
/// contextual attention, then one gate layer per table entry. Exact on the
/// materialized table. `extra_inputs` lists raw (possibly off-grid) input
/// blocks whose quantized images must also be routed, e.g. a dataset.
TauNet assemble_tau_a(const Surrogate& h, std::uint64_t seed,
                      const TauOptions& opts = {},
                      const std::vector<SeqMatrix>& extra_inputs = {});

/// Shallow-and-wide realization: one staircase layer, contextual attention,
/// one bump layer.
TauNet assemble_tau_b(const Surrogate& h, std::uint64_t seed,
                      const TauOptions& opts = {},
                      const std::vector<SeqMatrix>& extra_inputs = {});

/// Adds the positional encoding when present, applies pre layers tokenwise,
/// the residual attention layer, then post layers tokenwise.
SeqMatrix forward(const TransformerNet& net, const SeqMatrix& zp);

}  // namespace ptlab
