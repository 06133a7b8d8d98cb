#include "ptlab/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"

namespace ptlab {

namespace {

std::size_t checked_levels(double delta) {
  const double inv = 1.0 / delta;
  const double r = std::round(inv);
  if (!(delta > 0.0) || std::abs(inv - r) > 1e-9)
    throw std::invalid_argument("1/delta must be integral");
  return static_cast<std::size_t>(r);
}

PiecewiseLinearActivation floor_phi(double delta) {
  // -t on [0, delta), constant 0 elsewhere
  return {{0.0, delta}, {0.0, -1.0, 0.0}, {0.0, 0.0, 0.0}};
}

PiecewiseLinearActivation boxcar_phi(double width) {
  // 1 on [0, width), constant 0 elsewhere
  return {{0.0, width}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
}

SeqMatrix apply_stack(std::span<const FfnLayer> layers, SeqMatrix z) {
  for (const auto& layer : layers) z = layer.apply(z);
  return z;
}

struct TokenEntry {
  std::vector<double> id;
  std::vector<double> target;
};

/// Flattens (id sequence, target sequence) pairs into per-column entries,
/// merging exact duplicates and rejecting one ID with two targets.
std::vector<TokenEntry> flatten_table(const std::vector<IdTableEntry>& table) {
  std::vector<TokenEntry> out;
  std::map<std::vector<double>, std::size_t> seen;
  for (const auto& e : table) {
    if (e.id.rows() != e.target.rows() || e.id.cols() != e.target.cols())
      throw std::invalid_argument("id/target shape mismatch");
    for (std::size_t k = 0; k < e.id.cols(); ++k) {
      std::vector<double> id(e.id.col(k).begin(), e.id.col(k).end());
      std::vector<double> tg(e.target.col(k).begin(), e.target.col(k).end());
      const auto it = seen.find(id);
      if (it != seen.end()) {
        if (out[it->second].target != tg)
          throw precondition_error("one context ID mapped to two targets");
        continue;
      }
      seen.emplace(id, out.size());
      out.push_back({std::move(id), std::move(tg)});
    }
  }
  return out;
}

}  // namespace

double PiecewiseLinearActivation::eval(double t) const {
  std::size_t p = 0;
  while (p < breaks.size() && t >= breaks[p]) ++p;
  return slopes[p] * t + intercepts[p];
}

bool PiecewiseLinearActivation::phi_class() const {
  if (slopes.empty() || slopes.size() != intercepts.size() ||
      slopes.size() != breaks.size() + 1 || slopes.size() > 3)
    return false;
  return std::any_of(slopes.begin(), slopes.end(),
                     [](double s) { return s == 0.0; });
}

void FfnLayer::apply_token_inplace(std::span<double> z) const {
  const std::size_t r = neurons();
  const std::size_t d = w1.cols();
  if (z.size() != d) throw std::invalid_argument("ffn token size mismatch");
  std::vector<double> act(r);
  for (std::size_t i = 0; i < r; ++i) {
    double pre = b1[i];
    for (std::size_t j = 0; j < d; ++j) pre += w1(i, j) * z[j];
    act[i] = kind == Activation::relu ? std::max(0.0, pre) : plw.eval(pre);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double add = b2[j];
    for (std::size_t i = 0; i < r; ++i) add += w2(j, i) * act[i];
    z[j] += add;
  }
}

SeqMatrix FfnLayer::apply(const SeqMatrix& z) const {
  SeqMatrix out = z;
  for (std::size_t c = 0; c < out.cols(); ++c) apply_token_inplace(out.col(c));
  return out;
}

SeqMatrix positional_encoding(std::size_t d, std::size_t l_total) {
  if (d == 0 || l_total == 0)
    throw std::invalid_argument("positional_encoding needs d, l_total >= 1");
  SeqMatrix e(d, l_total);
  for (std::size_t c = 0; c < l_total; ++c)
    for (std::size_t r = 0; r < d; ++r) e(r, c) = static_cast<double>(c);
  return e;
}

std::vector<FfnLayer> build_quant_stack(std::size_t d, std::size_t l_total,
                                        double delta) {
  const std::size_t levels = checked_levels(delta);
  std::vector<FfnLayer> layers;
  layers.reserve(d * l_total * levels);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t kk = 0; kk < l_total * levels; ++kk) {
      FfnLayer layer;
      layer.kind = Activation::plw;
      layer.plw = floor_phi(delta);
      layer.w1 = Matrix(1, d);
      layer.w1(0, i) = 1.0;
      layer.b1 = {-static_cast<double>(kk) * delta};
      layer.w2 = Matrix(d, 1);
      layer.w2(i, 0) = 1.0;
      layer.b2.assign(d, 0.0);
      layers.push_back(std::move(layer));
    }
  }
  return layers;
}

FfnLayer build_step_ffn(std::size_t d, std::size_t l_total, double delta,
                        double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("step ffn needs theta > 0");
  const std::size_t levels = checked_levels(delta);
  const std::size_t risers = l_total * levels;  // feet at 0, delta, ..., l_total - delta
  const std::size_t per_coord = 2 * risers + 2;
  FfnLayer layer;
  layer.kind = Activation::relu;
  layer.w1 = Matrix(d * per_coord, d);
  layer.b1.assign(d * per_coord, 0.0);
  layer.w2 = Matrix(d, d * per_coord);
  layer.b2.assign(d, 0.0);
  std::size_t row = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t t = 0; t < risers; ++t) {
      const double foot = static_cast<double>(t) * delta;
      layer.w1(row, i) = 1.0 / theta;
      layer.b1[row] = -foot / theta;
      layer.w2(i, row) = delta;
      ++row;
      layer.w1(row, i) = 1.0 / theta;
      layer.b1[row] = -1.0 - foot / theta;
      layer.w2(i, row) = -delta;
      ++row;
    }
    // ReLU(-z) - ReLU(z) = -z cancels the residual input of this coordinate.
    layer.w1(row, i) = -1.0;
    layer.w2(i, row) = 1.0;
    ++row;
    layer.w1(row, i) = 1.0;
    layer.w2(i, row) = -1.0;
    ++row;
  }
  return layer;
}

namespace {

struct GateStack {
  std::vector<FfnLayer> layers;
  double width = 0.0;
  double min_gap = 0.0;
};

GateStack output_stack_details(const std::vector<IdTableEntry>& table,
                               std::span<const double> gate_dir, double gate_width) {
  const auto entries = flatten_table(table);
  if (entries.empty()) return {};
  const std::size_t d = entries.front().id.size();
  if (gate_dir.size() != d)
    throw std::invalid_argument("gate direction dimension mismatch");

  std::vector<double> centers(entries.size());
  for (std::size_t t = 0; t < entries.size(); ++t)
    centers[t] = dot(gate_dir, entries[t].id);

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < entries.size(); ++a)
    for (std::size_t b = a + 1; b < entries.size(); ++b)
      min_gap = std::min(min_gap, std::abs(centers[a] - centers[b]));
  if (entries.size() == 1) min_gap = 1.0;
  if (min_gap <= 0.0)
    throw precondition_error("gate collision: two context IDs project equal");

  // A token rewritten by gate t must not re-enter any gate that runs later,
  // so the auto width also clears target-to-later-center distances. Earlier
  // gates have already passed and cannot re-fire.
  double clearance = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < entries.size(); ++t) {
    const double p = dot(gate_dir, entries[t].target);
    for (std::size_t s = t + 1; s < entries.size(); ++s)
      clearance = std::min(clearance, std::abs(p - centers[s]));
  }
  if (clearance <= 0.0)
    throw precondition_error("gate collision: target lands on a later gate center");

  const double w =
      gate_width > 0.0 ? gate_width : std::min(min_gap, clearance) / 4.0;
  if (2.0 * w > min_gap)
    throw precondition_error("gate collision: IDs within 2 gate widths");
  for (std::size_t t = 0; t < entries.size(); ++t) {
    const double p = dot(gate_dir, entries[t].target);
    for (std::size_t s = t + 1; s < entries.size(); ++s)
      if (std::abs(p - centers[s]) < 2.0 * w)
        throw precondition_error("gate collision: target inside a later gate");
  }

  GateStack out;
  out.width = w;
  out.min_gap = min_gap;
  for (std::size_t t = 0; t < entries.size(); ++t) {
    FfnLayer layer;
    layer.kind = Activation::plw;
    layer.plw = boxcar_phi(2.0 * w);
    layer.w1 = Matrix(1, d);
    for (std::size_t j = 0; j < d; ++j) layer.w1(0, j) = gate_dir[j];
    layer.b1 = {-(centers[t] - w)};
    layer.w2 = Matrix(d, 1);
    for (std::size_t j = 0; j < d; ++j)
      layer.w2(j, 0) = entries[t].target[j] - entries[t].id[j];
    layer.b2.assign(d, 0.0);
    out.layers.push_back(std::move(layer));
  }
  return out;
}

struct BumpBuild {
  FfnLayer layer;
  double k = 0.0;
  double min_gap = 0.0;
};

BumpBuild bump_details(const std::vector<IdTableEntry>& table, double k_sharp) {
  const auto entries = flatten_table(table);
  if (entries.empty()) throw std::invalid_argument("bump ffn needs a nonempty table");
  const std::size_t d = entries.front().id.size();

  // Every coordinate of every pair of distinct IDs must clear 1/K, else a
  // foreign bump term fires; exact coordinate ties cannot be separated.
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < entries.size(); ++a)
    for (std::size_t b = a + 1; b < entries.size(); ++b)
      for (std::size_t i = 0; i < d; ++i) {
        const double g = std::abs(entries[a].id[i] - entries[b].id[i]);
        if (g == 0.0)
          throw precondition_error(
              "bump overlap: distinct context IDs share a coordinate");
        min_gap = std::min(min_gap, g);
      }
  if (entries.size() == 1) min_gap = 1.0;
  const double k = k_sharp > 0.0 ? k_sharp : 2.0 / min_gap;
  if (!(k * min_gap > 1.0))
    throw precondition_error("bump overlap: K too small for the ID gaps");

  const std::size_t width = 3 * d * entries.size();
  BumpBuild out;
  out.k = k;
  out.min_gap = min_gap;
  FfnLayer& layer = out.layer;
  layer.kind = Activation::relu;
  layer.w1 = Matrix(width, d);
  layer.b1.assign(width, 0.0);
  layer.w2 = Matrix(d, width);
  layer.b2.assign(d, 0.0);
  std::size_t row = 0;
  const double offs[3] = {1.0, 0.0, -1.0};
  const double coef[3] = {1.0, -2.0, 1.0};
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < d; ++i) {
      for (int m = 0; m < 3; ++m) {
        layer.w1(row, i) = k;
        layer.b1[row] = offs[m] - k * e.id[i];
        for (std::size_t j = 0; j < d; ++j)
          layer.w2(j, row) = coef[m] * (e.target[j] - e.id[j]) / static_cast<double>(d);
        ++row;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<FfnLayer> build_output_stack_a(const std::vector<IdTableEntry>& table,
                                           std::span<const double> gate_dir,
                                           double gate_width) {
  return output_stack_details(table, gate_dir, gate_width).layers;
}

FfnLayer build_bump_ffn_b(const std::vector<IdTableEntry>& table, double k_sharp) {
  return bump_details(table, k_sharp).layer;
}

namespace {

struct TableData {
  std::vector<SeqMatrix> inputs;   // [P, Z] probes
  std::vector<SeqMatrix> targets;  // h.eval per probe
};

TableData enumerate_table(const Surrogate& h, Convention conv,
                          const TauOptions& opts,
                          const std::vector<SeqMatrix>& extra_inputs) {
  TableData td;
  std::set<std::vector<double>> seen;
  auto push = [&](const SeqMatrix& input) {
    if (!seen.insert(input.row_major()).second) return;
    td.targets.push_back(h.eval(input, conv));
    td.inputs.push_back(input);
  };
  const Grid& g = h.input_grid;
  const bool dense_ok =
      g.point_count_log() <= std::log(static_cast<double>(opts.full_table_guard));
  for (std::size_t pi = 0; pi < h.prompts.prompts.size(); ++pi) {
    const SeqMatrix& prompt = h.prompts.prompts[pi];
    if (dense_ok) {
      const std::uint64_t n =
          static_cast<std::uint64_t>(std::llround(std::exp(g.point_count_log())));
      for (std::uint64_t code = 0; code < n; ++code)
        push(hconcat(prompt, grid_decode(code, g)));
    }
    for (const auto& key : h.targets[pi].table_inputs())
      push(hconcat(prompt, key));
  }
  for (const auto& raw : extra_inputs) {
    if (raw.rows() != g.d || raw.cols() != g.l)
      throw std::invalid_argument("extra input shape mismatch");
    for (std::size_t pi = 0; pi < h.prompts.prompts.size(); ++pi)
      push(hconcat(h.prompts.prompts[pi], raw));
  }
  if (td.inputs.empty())
    throw precondition_error("surrogate table too large to materialize");
  return td;
}

struct AssembledCore {
  std::vector<SeqMatrix> ms;
  std::vector<IdTableEntry> entries;
  BuiltHead head;
  ContextualParams params;
  double max_psi = 0.0;
};

AssembledCore build_core(const std::vector<SeqMatrix>& quantized,
                         const std::vector<SeqMatrix>& targets,
                         std::size_t l_total, std::uint64_t seed,
                         const TauOptions& opts) {
  const auto vocab = extract_vocab(quantized);
  // The prompt-free pipeline can place the zero token at column 0 (input 0,
  // position offset 0); it is excluded from the head-construction vocabulary
  // (its logits vanish on both sides) while the gate/bump validation still
  // covers its measured ID.
  Vocab head_vocab;
  double min_norm = std::numeric_limits<double>::infinity();
  double max_norm = 0.0;
  bool has_zero = false;
  for (const auto& t : vocab.tokens) {
    const double n = norm2(t);
    max_norm = std::max(max_norm, n);
    if (n == 0.0) {
      has_zero = true;
      continue;
    }
    min_norm = std::min(min_norm, n);
    head_vocab.tokens.push_back(t);
  }
  if (head_vocab.tokens.empty())
    throw precondition_error("quantized vocabulary has no nonzero token");
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < vocab.tokens.size(); ++a)
    for (std::size_t b = a + 1; b < vocab.tokens.size(); ++b) {
      double s2 = 0.0;
      for (std::size_t i = 0; i < vocab.tokens[a].size(); ++i) {
        const double diff = vocab.tokens[a][i] - vocab.tokens[b][i];
        s2 += diff * diff;
      }
      min_gap = std::min(min_gap, std::sqrt(s2));
    }
  if (vocab.tokens.size() < 2) min_gap = 1.0;

  AssembledCore core;
  core.params.eps = 0.999 * min_gap;
  core.params.gamma_min = 0.999 * min_norm;
  core.params.gamma_max = 1.001 * max_norm;
  core.params.vocab_size = head_vocab.tokens.size();
  core.params.seq_len = l_total;
  core.params.delta_sep = opts.delta_sep;
  core.params.profile = ScaleProfile::desk;
  const std::size_t d = quantized.front().rows();
  core.params.scale_factor =
      opts.scale_factor > 0.0
          ? opts.scale_factor
          : desk_scale_for_gamma(core.params, d, opts.gamma_target);

  core.head = build_contextual_head(head_vocab, core.params, /*s=*/1, /*rho=*/1, seed);
  if (!has_zero) {
    const auto cids = context_ids(quantized, core.head.head, core.params);
    core.max_psi = cids.max_psi_norm;
    core.entries.reserve(quantized.size());
    for (std::size_t i = 0; i < quantized.size(); ++i)
      core.entries.push_back({cids.ids[i], targets[i]});
  } else {
    // validate the relaxed hypotheses directly, then compute the ids
    const auto tw = check_tokenwise(
        quantized, {0.0, core.params.gamma_max, core.params.eps,
                    SeparationKind::gamma_delta});
    if (!tw.ok)
      throw precondition_error("tokenwise separation: " + tw.first_violation);
    for (const auto& s : quantized)
      for (std::size_t k = 0; k + 1 < s.cols(); ++k)
        for (std::size_t l = k + 1; l < s.cols(); ++l)
          if (std::equal(s.col(k).begin(), s.col(k).end(), s.col(l).begin()))
            throw precondition_error("duplicated token within a sequence");
    for (std::size_t i = 0; i < quantized.size(); ++i) {
      SeqMatrix id(quantized[i].rows(), quantized[i].cols());
      for (std::size_t k = 0; k < quantized[i].cols(); ++k) {
        const auto att = attn_token(quantized[i].col(k), quantized[i], core.head.head);
        const auto psi = mat_vec(core.head.head.w_o, att);
        core.max_psi = std::max(core.max_psi, norm2(psi));
        for (std::size_t r = 0; r < id.rows(); ++r)
          id(r, k) = quantized[i](r, k) + psi[r];
      }
      core.entries.push_back({std::move(id), targets[i]});
    }
  }
  core.ms = quantized;
  return core;
}

void fill_common_info(TauBuildInfo& info, const Surrogate& h,
                      const AssembledCore& core) {
  info.delta = h.input_grid.delta;
  info.d = h.d();
  info.l = h.l();
  info.l_p = h.l_p;
  info.l_total = h.l_total();
  info.table_sequences = core.entries.size();
  info.table_token_entries = core.entries.size() * h.l_total();
  info.max_psi_norm = core.max_psi;
  info.psi_bound = core.params.eps / 4.0;
  info.cert = core.head.cert;
}

}  // namespace

TauNet assemble_tau_a(const Surrogate& h, std::uint64_t seed,
                      const TauOptions& opts,
                      const std::vector<SeqMatrix>& extra_inputs) {
  const std::size_t d = h.d(), l_total = h.l_total();
  const SeqMatrix e = positional_encoding(d, l_total);
  const auto td = enumerate_table(h, Convention::floor_conv, opts, extra_inputs);

  auto pre = build_quant_stack(d, l_total, h.input_grid.delta);
  std::vector<SeqMatrix> ms;
  ms.reserve(td.inputs.size());
  for (const auto& input : td.inputs) {
    SeqMatrix shifted = input;
    for (std::size_t c = 0; c < shifted.cols(); ++c)
      for (std::size_t r = 0; r < d; ++r) shifted(r, c) += e(r, c);
    ms.push_back(apply_stack(pre, std::move(shifted)));
  }
  auto core = build_core(ms, td.targets, l_total, seed, opts);
  auto gates = output_stack_details(core.entries, core.head.cert.sep_vector,
                                    opts.gate_width);

  TauNet out;
  out.net.pre_ffn = std::move(pre);
  out.net.attn = core.head.head;
  out.net.post_ffn = std::move(gates.layers);
  out.net.pos_enc = e;
  out.net.family = Family::A;
  out.net.d = d;
  out.net.l_total = l_total;

  out.info.family = Family::A;
  fill_common_info(out.info, h, core);
  out.info.quant_layers = out.net.pre_ffn.size();
  out.info.output_layers = out.net.post_ffn.size();
  out.info.gate_width = gates.width;
  out.info.min_projected_id_gap = gates.min_gap;
  return out;
}

TauNet assemble_tau_b(const Surrogate& h, std::uint64_t seed,
                      const TauOptions& opts,
                      const std::vector<SeqMatrix>& extra_inputs) {
  const std::size_t d = h.d(), l_total = h.l_total();
  const SeqMatrix e = positional_encoding(d, l_total);
  const auto td = enumerate_table(h, Convention::step_conv, opts, extra_inputs);

  const double theta = opts.theta > 0.0 ? opts.theta : h.input_grid.delta / 2.0;
  FfnLayer step = build_step_ffn(d, l_total, h.input_grid.delta, theta);
  std::vector<SeqMatrix> ms;
  ms.reserve(td.inputs.size());
  for (const auto& input : td.inputs) {
    SeqMatrix shifted = input;
    for (std::size_t c = 0; c < shifted.cols(); ++c)
      for (std::size_t r = 0; r < d; ++r) shifted(r, c) += e(r, c);
    ms.push_back(step.apply(shifted));
  }
  auto core = build_core(ms, td.targets, l_total, seed, opts);
  auto bump = bump_details(core.entries, opts.bump_k);

  TauNet out;
  out.net.pre_ffn.push_back(std::move(step));
  out.net.attn = core.head.head;
  out.net.post_ffn.push_back(std::move(bump.layer));
  out.net.pos_enc = e;
  out.net.family = Family::B;
  out.net.d = d;
  out.net.l_total = l_total;

  out.info.family = Family::B;
  fill_common_info(out.info, h, core);
  out.info.step_neurons = out.net.pre_ffn.front().neurons();
  out.info.bump_neurons = out.net.post_ffn.front().neurons();
  out.info.theta = theta;
  out.info.bump_k = bump.k;
  out.info.min_projected_id_gap = bump.min_gap;
  return out;
}

SeqMatrix forward(const TransformerNet& net, const SeqMatrix& zp) {
  if (zp.rows() != net.d || zp.cols() != net.l_total)
    throw std::invalid_argument("forward: input shape mismatch");
  SeqMatrix z = zp;
  if (net.pos_enc) {
    for (std::size_t c = 0; c < z.cols(); ++c)
      for (std::size_t r = 0; r < z.rows(); ++r) z(r, c) += (*net.pos_enc)(r, c);
  }
  z = apply_stack(net.pre_ffn, std::move(z));
  z = self_attn_layer(z, net.attn);
  z = apply_stack(net.post_ffn, std::move(z));
  return z;
}

}  // namespace ptlab
