#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "ptlab/matrix.hpp"

namespace ptlab {

/// Entry-quantization convention. `floor_conv` snaps a cell [k d, (k+1) d)
/// down to k d; `step_conv` fixes exact grid points and snaps the open cell
/// (k d, (k+1) d] up to (k+1) d, matching the ramp-at-grid-start behaviour of
/// the ReLU staircase.
enum class Convention { floor_conv, step_conv };

struct Grid {
  double delta = 0.0;
  std::size_t d = 0;
  std::size_t l = 0;

  std::size_t levels() const;       // 1/delta, validated integral
  double point_count_log() const;   // ln(levels^(d l))
  bool operator==(const Grid&) const = default;
};

Grid make_grid(double delta, std::size_t d, std::size_t l);

/// Entrywise snap of a [0,1]-valued matrix onto the grid values. Idempotent;
/// under floor_conv the result stays in {0, ..., 1 - delta}; under step_conv
/// exact grid points are kept and interior points round up (so 1.0 can
/// appear for entries above 1 - delta).
SeqMatrix grid_quantize(const SeqMatrix& z, const Grid& grid, Convention conv);

/// Decode the mixed-radix index of an on-grid matrix (entries k * delta,
/// k < levels) and back. Column-major digit order; throws when the matrix is
/// off-grid.
std::uint64_t grid_encode(const SeqMatrix& z, const Grid& grid);
SeqMatrix grid_decode(std::uint64_t code, const Grid& grid);

/// Grid-to-grid sequence function. Dense tables hold every grid point
/// (feasible up to 1e6 points); table-backed instances hold explicit
/// (input, output) pairs with a default output elsewhere; lazy instances
/// evaluate and quantize a wrapped callable on demand.
class QuantizedSeqFn {
 public:
  QuantizedSeqFn() = default;

  static QuantizedSeqFn from_table(Grid grid,
                                   std::map<std::vector<double>, SeqMatrix> entries,
                                   SeqMatrix default_output);

  const Grid& grid() const { return grid_; }
  bool is_dense() const { return repr_ == Repr::dense; }
  SeqMatrix eval(const SeqMatrix& z) const;
  /// Explicit table inputs (table representation only).
  std::vector<SeqMatrix> table_inputs() const;

  friend QuantizedSeqFn quantize_fn(
      const std::function<SeqMatrix(const SeqMatrix&)>& f, const Grid& grid);

 private:
  enum class Repr { dense, lazy, table };
  Repr repr_ = Repr::table;
  Grid grid_;
  std::vector<double> dense_;  // code-major blocks of d*l entries
  std::map<std::vector<double>, SeqMatrix> table_;
  SeqMatrix default_output_;
  std::function<SeqMatrix(const SeqMatrix&)> fn_;
  mutable std::map<std::vector<double>, SeqMatrix> memo_;
};

/// Piecewise-constant (floor-quantized) image of f over the grid; dense when
/// the grid has at most 1e6 points, lazy otherwise. f must map [0,1]^(d x l)
/// into [0,1]^(d x l).
QuantizedSeqFn quantize_fn(const std::function<SeqMatrix(const SeqMatrix&)>& f,
                           const Grid& grid);

/// ceil(L * (2 C (d L)^(1/alpha) / eps)^(d L)); throws std::overflow_error
/// when the value exceeds 2^62.
std::uint64_t min_prompt_length(std::size_t d, std::size_t l, double eps, double c_lip,
                                double alpha);

struct PromptTable {
  std::vector<SeqMatrix> prompts;  // prompts[i] indexes target i
};

/// Prompt-indexed surrogate: eval([P, Z]) has a zero L_p-prefix and the
/// selected target's image on the last L columns. Prompts not matching any
/// table entry resolve to the zero output.
class Surrogate {
 public:
  Grid input_grid;  // over l columns
  std::size_t l_p = 0;
  PromptTable prompts;
  std::vector<QuantizedSeqFn> targets;

  std::size_t d() const { return input_grid.d; }
  std::size_t l() const { return input_grid.l; }
  std::size_t l_total() const { return l_p + input_grid.l; }

  SeqMatrix eval(const SeqMatrix& zp, Convention conv = Convention::step_conv) const;
  std::optional<std::size_t> prompt_index(const SeqMatrix& prompt) const;
};

/// Associates one on-grid prompt with every target. Prompts are enumerated
/// in mixed-radix order skipping those with an all-zero first column, so the
/// quantized-plus-position vocabulary never contains the zero token.
Surrogate build_surrogate(std::vector<QuantizedSeqFn> targets, const Grid& grid,
                          std::size_t l_p);

SeqMatrix select_prompt(const Surrogate& s, std::size_t target_id);

struct Dataset {
  std::size_t d = 0;
  std::size_t l = 0;
  std::vector<std::pair<SeqMatrix, SeqMatrix>> pairs;  // (X, Y) in [0,1]^(d x l)
};

/// Rejects pairs that repeat an input with a different label.
void validate_dataset(const Dataset& ds);

/// Entrywise l_alpha norm of a - b.
double alpha_norm_diff(const SeqMatrix& a, const SeqMatrix& b, double alpha);

}  // namespace ptlab
