#include "ptlab/memorize.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"

namespace ptlab {

PromptSearchResult grid_search_prompt(const TransformerNet& net, const Dataset& ds,
                                      const Grid& grid, std::size_t l_p,
                                      LossKind loss, double alpha) {
  validate_dataset(ds);
  if (ds.pairs.empty()) throw std::invalid_argument("grid_search_prompt: empty dataset");
  const Grid pgrid = make_grid(grid.delta, grid.d, l_p == 0 ? 1 : l_p);
  const double log_count =
      l_p == 0 ? 0.0
               : static_cast<double>(grid.d * l_p) *
                     std::log(static_cast<double>(grid.levels()));
  if (log_count > std::log(1e7))
    throw precondition_error("prompt search space exceeds 1e7 candidates");
  const std::uint64_t total =
      l_p == 0 ? 1 : static_cast<std::uint64_t>(std::llround(std::exp(log_count)));

  PromptSearchResult best;
  bool have_best = false;
  for (std::uint64_t code = 0; code < total; ++code) {
    const SeqMatrix prompt =
        l_p == 0 ? SeqMatrix(grid.d, 0) : grid_decode(code, pgrid);
    double acc = 0.0;
    for (const auto& [x, y] : ds.pairs) {
      const SeqMatrix out = forward(net, hconcat(prompt, x));
      SeqMatrix tail(grid.d, grid.l);
      for (std::size_t c = 0; c < grid.l; ++c) tail.set_col(c, out.col(l_p + c));
      const double err = alpha_norm_diff(tail, y, alpha);
      acc = loss == LossKind::sup_alpha ? std::max(acc, err)
                                        : acc + err / static_cast<double>(ds.pairs.size());
    }
    if (!have_best || acc < best.loss) {
      best = {prompt, acc, code};
      have_best = true;
    }
  }
  return best;
}

MemorizeResult memorize(const Dataset& ds, double eps, double c_lip, double alpha,
                        Family family, std::uint64_t seed) {
  if (!(eps > 0.0) || !(c_lip > 0.0) || !(alpha >= 1.0))
    throw std::invalid_argument("memorize: bad (eps, C, alpha)");
  if (family == Family::none) throw std::invalid_argument("memorize: pick a family");
  validate_dataset(ds);
  if (ds.pairs.empty()) throw std::invalid_argument("memorize: empty dataset");

  // Grid from C delta (d l)^(1/alpha) <= eps / 2; at least two levels so the
  // prompt vocabulary can avoid the zero token.
  const double dl = static_cast<double>(ds.d * ds.l);
  const double delta_star = eps / (2.0 * c_lip * std::pow(dl, 1.0 / alpha));
  const std::size_t levels =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(1.0 / delta_star - 1e-12)));
  const Grid grid = make_grid(1.0 / static_cast<double>(levels), ds.d, ds.l);

  const Convention conv =
      family == Family::A ? Convention::floor_conv : Convention::step_conv;

  // Extend the dataset to a grid function keyed by quantized-input cells;
  // unconstrained cells default to the zero matrix. Two inputs landing in
  // one cell must agree after label quantization.
  std::map<std::vector<double>, SeqMatrix> cells;
  for (const auto& [x, y] : ds.pairs) {
    const SeqMatrix key = grid_quantize(x, grid, conv);
    const SeqMatrix target = grid_quantize(y, grid, Convention::floor_conv);
    const auto it = cells.find(key.row_major());
    if (it == cells.end()) {
      cells.emplace(key.row_major(), target);
    } else if (!(it->second == target)) {
      throw precondition_error(
          "dataset not realizable on the chosen grid: one cell, two labels");
    }
  }
  auto target_fn =
      QuantizedSeqFn::from_table(grid, std::move(cells), SeqMatrix(ds.d, ds.l));

  const std::uint64_t l_p_bound = min_prompt_length(ds.d, ds.l, eps, c_lip, alpha);
  if (l_p_bound > 100000)
    throw precondition_error("prompt length bound too large to construct");
  const std::size_t l_p = static_cast<std::size_t>(l_p_bound);

  Surrogate h = build_surrogate({target_fn}, grid, l_p);

  std::vector<SeqMatrix> raw_inputs;
  raw_inputs.reserve(ds.pairs.size());
  for (const auto& [x, y] : ds.pairs) raw_inputs.push_back(x);

  TauNet tau = family == Family::A ? assemble_tau_a(h, seed, {}, raw_inputs)
                                   : assemble_tau_b(h, seed, {}, raw_inputs);
  const SeqMatrix prompt = select_prompt(h, 0);

  double max_err = 0.0;
  for (const auto& [x, y] : ds.pairs) {
    const SeqMatrix out = forward(tau.net, hconcat(prompt, x));
    SeqMatrix tail(ds.d, ds.l);
    for (std::size_t c = 0; c < ds.l; ++c) tail.set_col(c, out.col(l_p + c));
    max_err = std::max(max_err, alpha_norm_diff(tail, y, alpha));
  }
  if (!(max_err <= eps))
    throw std::runtime_error("memorize verification failed: max error " +
                             std::to_string(max_err) + " above eps");

  MemorizeResult res;
  res.net = std::move(tau.net);
  res.prompt = prompt;
  res.build = tau.info;
  res.report.family = family;
  res.report.eps = eps;
  res.report.c_lip = c_lip;
  res.report.alpha = alpha;
  res.report.delta = grid.delta;
  res.report.l_p = l_p;
  res.report.l_p_bound = l_p_bound;
  res.report.table_sequences = tau.info.table_sequences;
  res.report.max_err = max_err;
  res.report.seed = seed;
  if (family == Family::A) {
    res.report.ffn_layers = tau.info.quant_layers + tau.info.output_layers;
    res.report.mlp_neurons = 0;
    for (const auto& layer : res.net.pre_ffn) res.report.mlp_neurons += layer.neurons();
    for (const auto& layer : res.net.post_ffn) res.report.mlp_neurons += layer.neurons();
  } else {
    res.report.ffn_layers = 2;
    res.report.mlp_neurons = tau.info.step_neurons + tau.info.bump_neurons;
  }
  return res;
}

}  // namespace ptlab
