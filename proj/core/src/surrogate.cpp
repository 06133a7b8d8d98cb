#include "ptlab/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"

namespace ptlab {

namespace {

constexpr std::size_t kDenseGuard = 1000000;

std::vector<double> key_of(const SeqMatrix& z) { return z.row_major(); }

double snap_entry(double z, double delta, std::size_t levels, Convention conv) {
  const double scaled = z / delta;
  const double r = std::round(scaled);
  const bool exact = std::abs(scaled - r) <= 1e-9;
  if (conv == Convention::floor_conv) {
    // grid values {0, ..., 1 - delta}; the top of the range clamps down
    double k = exact ? r : std::floor(scaled);
    k = std::min(k, static_cast<double>(levels - 1));
    return std::max(0.0, k) * delta;
  }
  // step convention fixes exact grid points (1.0 included) and rounds up
  if (exact) return r * delta;
  return std::min(std::ceil(scaled), static_cast<double>(levels)) * delta;
}

}  // namespace

std::size_t Grid::levels() const {
  const double inv = 1.0 / delta;
  const double r = std::round(inv);
  if (!(delta > 0.0 && delta < 1.0 + 1e-12) || std::abs(inv - r) > 1e-9)
    throw std::invalid_argument("grid requires integral 1/delta in (0,1]");
  return static_cast<std::size_t>(r);
}

double Grid::point_count_log() const {
  return static_cast<double>(d * l) * std::log(static_cast<double>(levels()));
}

Grid make_grid(double delta, std::size_t d, std::size_t l) {
  Grid g{delta, d, l};
  (void)g.levels();  // validates
  if (d == 0 || l == 0) throw std::invalid_argument("grid needs d, l >= 1");
  return g;
}

SeqMatrix grid_quantize(const SeqMatrix& z, const Grid& grid, Convention conv) {
  if (z.rows() != grid.d || z.cols() != grid.l)
    throw std::invalid_argument("grid_quantize shape mismatch");
  const std::size_t levels = grid.levels();
  SeqMatrix out(z.rows(), z.cols());
  for (std::size_t c = 0; c < z.cols(); ++c)
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const double v = z(r, c);
      if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
        throw std::invalid_argument("grid_quantize entry outside [0, 1]");
      out(r, c) = snap_entry(std::clamp(v, 0.0, 1.0), grid.delta, levels, conv);
    }
  return out;
}

std::uint64_t grid_encode(const SeqMatrix& z, const Grid& grid) {
  const std::size_t levels = grid.levels();
  if (grid.point_count_log() > 62.0 * std::log(2.0))
    throw std::overflow_error("grid too large to encode");
  if (z.rows() != grid.d || z.cols() != grid.l)
    throw std::invalid_argument("grid_encode shape mismatch");
  std::uint64_t code = 0;
  for (std::size_t c = grid.l; c-- > 0;)
    for (std::size_t r = grid.d; r-- > 0;) {
      const double scaled = z(r, c) / grid.delta;
      const double k = std::round(scaled);
      if (std::abs(scaled - k) > 1e-9 || k < 0 || k >= static_cast<double>(levels))
        throw std::invalid_argument("grid_encode: matrix not on grid");
      code = code * levels + static_cast<std::uint64_t>(k);
    }
  return code;
}

SeqMatrix grid_decode(std::uint64_t code, const Grid& grid) {
  const std::size_t levels = grid.levels();
  SeqMatrix z(grid.d, grid.l);
  for (std::size_t c = 0; c < grid.l; ++c)
    for (std::size_t r = 0; r < grid.d; ++r) {
      z(r, c) = static_cast<double>(code % levels) * grid.delta;
      code /= levels;
    }
  if (code != 0) throw std::invalid_argument("grid_decode: code out of range");
  return z;
}

QuantizedSeqFn QuantizedSeqFn::from_table(
    Grid grid, std::map<std::vector<double>, SeqMatrix> entries,
    SeqMatrix default_output) {
  QuantizedSeqFn q;
  q.repr_ = Repr::table;
  q.grid_ = grid;
  q.table_ = std::move(entries);
  q.default_output_ = std::move(default_output);
  if (q.default_output_.rows() != grid.d || q.default_output_.cols() != grid.l)
    throw std::invalid_argument("from_table: default output shape mismatch");
  return q;
}

SeqMatrix QuantizedSeqFn::eval(const SeqMatrix& z) const {
  if (z.rows() != grid_.d || z.cols() != grid_.l)
    throw std::invalid_argument("QuantizedSeqFn::eval shape mismatch");
  switch (repr_) {
    case Repr::dense: {
      const std::uint64_t code = grid_encode(z, grid_);
      const std::size_t block = grid_.d * grid_.l;
      SeqMatrix out(grid_.d, grid_.l);
      for (std::size_t c = 0; c < grid_.l; ++c)
        for (std::size_t r = 0; r < grid_.d; ++r)
          out(r, c) = dense_[code * block + c * grid_.d + r];
      return out;
    }
    case Repr::table: {
      const auto it = table_.find(key_of(z));
      return it == table_.end() ? default_output_ : it->second;
    }
    case Repr::lazy: {
      const auto key = key_of(z);
      const auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
      SeqMatrix out = grid_quantize(fn_(z), grid_, Convention::floor_conv);
      memo_.emplace(key, out);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<SeqMatrix> QuantizedSeqFn::table_inputs() const {
  std::vector<SeqMatrix> out;
  if (repr_ != Repr::table) return out;
  for (const auto& [key, value] : table_)
    out.push_back(Matrix::from_row_major(grid_.d, grid_.l, key));
  return out;
}

QuantizedSeqFn quantize_fn(const std::function<SeqMatrix(const SeqMatrix&)>& f,
                           const Grid& grid) {
  QuantizedSeqFn q;
  q.grid_ = grid;
  const double log_points = grid.point_count_log();
  if (log_points <= std::log(static_cast<double>(kDenseGuard))) {
    q.repr_ = QuantizedSeqFn::Repr::dense;
    const std::uint64_t n =
        static_cast<std::uint64_t>(std::llround(std::exp(log_points)));
    const std::size_t block = grid.d * grid.l;
    q.dense_.resize(n * block);
    for (std::uint64_t code = 0; code < n; ++code) {
      const SeqMatrix in = grid_decode(code, grid);
      const SeqMatrix raw = f(in);
      if (raw.rows() != grid.d || raw.cols() != grid.l)
        throw std::invalid_argument("quantize_fn: f output shape mismatch");
      const SeqMatrix out = grid_quantize(raw, grid, Convention::floor_conv);
      for (std::size_t c = 0; c < grid.l; ++c)
        for (std::size_t r = 0; r < grid.d; ++r)
          q.dense_[code * block + c * grid.d + r] = out(r, c);
    }
  } else {
    q.repr_ = QuantizedSeqFn::Repr::lazy;
    q.fn_ = f;
  }
  return q;
}

std::uint64_t min_prompt_length(std::size_t d, std::size_t l, double eps, double c_lip,
                                double alpha) {
  if (d == 0 || l == 0 || !(eps > 0.0) || !(c_lip > 0.0) || !(alpha >= 1.0))
    throw std::invalid_argument("min_prompt_length: nonpositive parameter");
  const double dl = static_cast<double>(d * l);
  const double base = 2.0 * c_lip * std::pow(dl, 1.0 / alpha) / eps;
  if (base > 1.0 && dl * std::log2(base) > 62.0)
    throw std::overflow_error("min_prompt_length exceeds 2^62");
  const double lambda = std::pow(base, dl);
  const double v = static_cast<double>(l) * lambda;
  const double r = std::round(v);
  const double out = (std::abs(v - r) < 1e-6 * std::max(1.0, r)) ? r : std::ceil(v);
  return static_cast<std::uint64_t>(out);
}

SeqMatrix Surrogate::eval(const SeqMatrix& zp, Convention conv) const {
  if (zp.rows() != d() || zp.cols() != l_total())
    throw std::invalid_argument("Surrogate::eval shape mismatch");
  SeqMatrix out(d(), l_total());  // zero prefix always
  // Split, snap the prompt part onto its cell representative, match the table.
  Grid pgrid{input_grid.delta, d(), l_p};
  SeqMatrix prompt(d(), l_p), z(d(), l());
  for (std::size_t c = 0; c < l_p; ++c) prompt.set_col(c, zp.col(c));
  for (std::size_t c = 0; c < l(); ++c) z.set_col(c, zp.col(l_p + c));

  std::optional<std::size_t> idx;
  if (l_p == 0) {
    idx = targets.size() == 1 ? std::optional<std::size_t>{0} : std::nullopt;
  } else {
    SeqMatrix snapped = grid_quantize(prompt, pgrid, conv);
    // The top half-open cell has no grid representative; clamp into the grid.
    for (std::size_t c = 0; c < l_p; ++c)
      for (std::size_t r = 0; r < d(); ++r)
        snapped(r, c) = std::min(snapped(r, c), 1.0 - input_grid.delta);
    idx = prompt_index(snapped);
  }
  if (!idx) return out;

  SeqMatrix zq = z;
  bool on_grid = true;
  for (std::size_t c = 0; c < l() && on_grid; ++c)
    for (std::size_t r = 0; r < d() && on_grid; ++r) {
      const double scaled = zq(r, c) / input_grid.delta;
      on_grid = std::abs(scaled - std::round(scaled)) <= 1e-9;
    }
  if (!on_grid) zq = grid_quantize(z, input_grid, conv);
  const SeqMatrix img = targets[*idx].eval(zq);
  for (std::size_t c = 0; c < l(); ++c) out.set_col(l_p + c, img.col(c));
  return out;
}

std::optional<std::size_t> Surrogate::prompt_index(const SeqMatrix& prompt) const {
  for (std::size_t i = 0; i < prompts.prompts.size(); ++i)
    if (prompts.prompts[i] == prompt) return i;
  return std::nullopt;
}

Surrogate build_surrogate(std::vector<QuantizedSeqFn> targets, const Grid& grid,
                          std::size_t l_p) {
  if (targets.empty()) throw std::invalid_argument("build_surrogate: no targets");
  for (const auto& t : targets)
    if (!(t.grid() == grid))
      throw std::invalid_argument("build_surrogate: target grid mismatch");

  Surrogate s;
  s.input_grid = grid;
  s.l_p = l_p;
  s.targets = std::move(targets);

  if (l_p == 0) {
    if (s.targets.size() != 1)
      throw precondition_error("prompt-free surrogate indexes exactly one target");
    s.prompts.prompts.emplace_back(grid.d, 0);
    return s;
  }

  const std::size_t levels = grid.levels();
  if (levels < 2)
    throw precondition_error("prompt indexing needs at least two grid levels");
  // Capacity after skipping all-zero first columns, in log space.
  const double col0 = std::pow(static_cast<double>(levels), static_cast<double>(grid.d));
  const double log_usable =
      std::log(col0 - 1.0) +
      static_cast<double>(grid.d * (l_p - 1)) * std::log(static_cast<double>(levels));
  if (log_usable < std::log(static_cast<double>(s.targets.size())))
    throw precondition_error("insufficient prompt length for target count");

  // Prompt i is the i-th mixed-radix numeral whose first-column digits are
  // not all zero; column 0 digits are least significant.
  const std::uint64_t col0_count = static_cast<std::uint64_t>(col0);
  for (std::size_t i = 0; i < s.targets.size(); ++i) {
    const std::uint64_t a = i / (col0_count - 1);
    const std::uint64_t b = i % (col0_count - 1);
    std::uint64_t numeral_low = b + 1;  // nonzero first column
    SeqMatrix p(grid.d, l_p);
    std::uint64_t rest = a;
    for (std::size_t c = 0; c < l_p; ++c)
      for (std::size_t r = 0; r < grid.d; ++r) {
        std::uint64_t digit;
        if (c == 0) {
          digit = numeral_low % levels;
          numeral_low /= levels;
        } else {
          digit = rest % levels;
          rest /= levels;
        }
        p(r, c) = static_cast<double>(digit) * grid.delta;
      }
    s.prompts.prompts.push_back(std::move(p));
  }
  return s;
}

SeqMatrix select_prompt(const Surrogate& s, std::size_t target_id) {
  if (target_id >= s.prompts.prompts.size())
    throw std::invalid_argument("select_prompt: unknown target id");
  return s.prompts.prompts[target_id];
}

void validate_dataset(const Dataset& ds) {
  if (ds.d == 0 || ds.l == 0) throw std::invalid_argument("dataset needs d, l >= 1");
  for (const auto& [x, y] : ds.pairs) {
    if (x.rows() != ds.d || x.cols() != ds.l || y.rows() != ds.d || y.cols() != ds.l)
      throw std::invalid_argument("dataset pair shape mismatch");
    for (const auto* m : {&x, &y})
      for (std::size_t c = 0; c < m->cols(); ++c)
        for (std::size_t r = 0; r < m->rows(); ++r)
          if (!((*m)(r, c) >= 0.0 && (*m)(r, c) <= 1.0))
            throw std::invalid_argument("dataset entry outside [0, 1]");
  }
  for (std::size_t i = 0; i + 1 < ds.pairs.size(); ++i)
    for (std::size_t j = i + 1; j < ds.pairs.size(); ++j)
      if (ds.pairs[i].first == ds.pairs[j].first &&
          !(ds.pairs[i].second == ds.pairs[j].second))
        throw precondition_error("dataset repeats an input with conflicting labels");
}

double alpha_norm_diff(const SeqMatrix& a, const SeqMatrix& b, double alpha) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("alpha_norm_diff shape mismatch");
  if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c)
    for (std::size_t r = 0; r < a.rows(); ++r)
      acc += std::pow(std::abs(a(r, c) - b(r, c)), alpha);
  return std::pow(acc, 1.0 / alpha);
}

}  // namespace ptlab
