#pragma once

#include <cstdint>

#include "ptlab/surrogate.hpp"
#include "ptlab/transformer.hpp"

namespace ptlab {

enum class LossKind { sup_alpha, mean_alpha };

struct PromptSearchResult {
  SeqMatrix prompt;
  double loss = 0.0;
  std::uint64_t index = 0;  // position in the enumeration order
};

/// Exhaustive search over every on-grid prompt; deterministic argmin with
/// ties broken by enumeration (lexicographic digit) order. Guarded to at
/// most 1e7 candidate prompts.
PromptSearchResult grid_search_prompt(const TransformerNet& net, const Dataset& ds,
                                      const Grid& grid, std::size_t l_p,
                                      LossKind loss, double alpha);

struct MemorizeReport {
  Family family = Family::B;
  double eps = 0.0, c_lip = 0.0, alpha = 1.0;
  double delta = 0.0;
  std::size_t l_p = 0;
  std::uint64_t l_p_bound = 0;  // the prompt-length lower bound actually used
  std::size_t ffn_layers = 0;
  std::size_t mlp_neurons = 0;
  std::size_t table_sequences = 0;
  double max_err = 0.0;
  std::uint64_t seed = 0;
};

struct MemorizeResult {
  TransformerNet net;
  SeqMatrix prompt;
  MemorizeReport report;
  TauBuildInfo build;
};

/// Builds a constructed net plus prompt that reproduces a consistent dataset
/// within eps: picks the grid from C delta (d l)^(1/alpha) <= eps / 2, extends
/// the dataset to a grid function (unconstrained cells output zero), builds
/// the surrogate and net, selects the prompt and verifies the fit.
MemorizeResult memorize(const Dataset& ds, double eps, double c_lip, double alpha,
                        Family family, std::uint64_t seed);

}  // namespace ptlab
