#include "ptlab/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ptlab {

void require_finite_nonempty(std::span<const double> z, const char* who) {
  if (z.empty()) throw std::invalid_argument(std::string(who) + ": empty vector");
  for (double v : z)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(who) + ": non-finite entry");
}

std::vector<double> softmax(std::span<const double> z) {
  require_finite_nonempty(z, "softmax");
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double boltz(std::span<const double> z) {
  const auto p = softmax(z);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * p[i];
  return s;
}

PartitionEntropy partition_entropy(std::span<const double> z) {
  require_finite_nonempty(z, "partition_entropy");
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  const double log_z = m + std::log(sum);
  double ent = 0.0;
  for (double v : z) {
    const double log_p = v - log_z;  // ln p_i, stable for tiny p_i
    ent -= std::exp(log_p) * log_p;
  }
  return {log_z, std::max(0.0, ent)};
}

std::vector<double> boltz_grad(std::span<const double> z) {
  require_finite_nonempty(z, "boltz_grad");
  const auto pe = partition_entropy(z);
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double log_p = z[i] - pe.log_partition;
    g[i] = std::exp(log_p) * (1.0 + log_p + pe.entropy);
  }
  return g;
}

double boltz_second_deriv(std::span<const double> z, std::size_t i) {
  require_finite_nonempty(z, "boltz_second_deriv");
  if (i >= z.size()) throw std::invalid_argument("boltz_second_deriv: index out of range");
  const auto pe = partition_entropy(z);
  const double log_p = z[i] - pe.log_partition;
  const double p = std::exp(log_p);
  return p * ((1.0 - 2.0 * p) * (log_p + pe.entropy + 1.0) + 1.0);
}

namespace {

bool has_duplicate(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

}  // namespace

SeparationReport check_boltz_separation(const std::vector<std::vector<double>>& vectors,
                                        double gamma, double delta) {
  if (vectors.empty()) throw std::invalid_argument("check_boltz_separation: no vectors");
  const std::size_t n = vectors.front().size();
  if (n < 2) throw precondition_error("vector length must be at least 2");
  for (const auto& v : vectors) {
    require_finite_nonempty(v, "check_boltz_separation");
    if (v.size() != n) throw precondition_error("vectors must share length n");
    if (has_duplicate(v)) throw precondition_error("duplicate entry within a vector");
  }
  if (delta < 4.0 * std::log(static_cast<double>(n)))
    throw precondition_error("delta below 4 ln n");
  // (gamma, delta)-separateness over the whole collection: bounded entries,
  // unequal entries more than delta apart. Equal entries are exempt.
  for (const auto& v : vectors)
    for (double x : v)
      if (std::abs(x) >= gamma) throw precondition_error("entry magnitude reaches gamma");
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    for (std::size_t b = a; b < vectors.size(); ++b) {
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = (a == b ? s + 1 : std::size_t{0}); t < n; ++t) {
          const double x = vectors[a][s], y = vectors[b][t];
          if (x != y && std::abs(x - y) <= delta)
            throw precondition_error("unequal entries within delta");
        }
      }
    }
  }
  for (std::size_t a = 0; a + 1 < vectors.size(); ++a) {
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      auto sa = vectors[a], sb = vectors[b];
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      if (sa == sb) throw precondition_error("two vectors share all entries (no differing entry)");
    }
  }

  SeparationReport rep;
  rep.log_bound = 2.0 * std::log(std::log(static_cast<double>(n))) - 2.0 * gamma;
  rep.bound = std::exp(rep.log_bound);
  rep.vacuous_subprecision = rep.bound < 1e-300;
  rep.min_gap = std::numeric_limits<double>::infinity();

  std::vector<double> values(vectors.size());
  bool in_range = true;
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    values[a] = boltz(vectors[a]);
    rep.max_abs_value = std::max(rep.max_abs_value, std::abs(values[a]));
    if (std::abs(values[a]) > gamma) in_range = false;
  }
  bool gaps_ok = true;
  for (std::size_t a = 0; a + 1 < vectors.size(); ++a) {
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      const double gap = std::abs(values[a] - values[b]);
      ++rep.pairs_checked;
      if (gap < rep.min_gap) {
        rep.min_gap = gap;
        rep.worst_pair = {a, b, gap};
      }
      // Sub-precision bounds are reported as vacuously satisfied rather
      // than compared against float noise.
      if (!rep.vacuous_subprecision && !(gap > rep.bound)) gaps_ok = false;
    }
  }
  if (rep.pairs_checked == 0) rep.min_gap = 0.0;
  rep.pass = in_range && gaps_ok;
  return rep;
}

}  // namespace ptlab
