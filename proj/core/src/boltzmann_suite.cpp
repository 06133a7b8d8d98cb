#include "ptlab/boltzmann_suite.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ptlab/rng.hpp"

namespace ptlab {

namespace {

std::vector<double> random_vector(SplitRng& rng, double range, std::size_t n_min = 2,
                                  std::size_t n_max = 32) {
  const std::size_t n = n_min + rng.next_below(n_max - n_min + 1);
  std::vector<double> z(n);
  for (double& v : z) v = rng.uniform(-range, range);
  return z;
}

double fd_gradient(std::span<const double> z, std::size_t i, double h) {
  std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
  zp[i] += h;
  zm[i] -= h;
  return (boltz(zp) - boltz(zm)) / (2.0 * h);
}

double fd_second(std::span<const double> z, std::size_t i, double h) {
  std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
  zp[i] += h;
  zm[i] -= h;
  return (boltz(zp) - 2.0 * boltz(z) + boltz(zm)) / (h * h);
}

/// Strictly decreasing ladder: start at `top`, gaps in (gap_lo, gap_hi].
std::vector<double> ladder(SplitRng& rng, std::size_t n, double top, double gap_lo,
                           double gap_hi) {
  std::vector<double> z(n);
  z[0] = top;
  for (std::size_t i = 1; i < n; ++i)
    z[i] = z[i - 1] - rng.uniform(gap_lo, gap_hi) - 1e-9;
  return z;
}

struct Failure {
  bool failed = false;
  std::string what;
};

void record(SuiteResult& r, bool ok, const std::string& what) {
  ++r.cases;
  if (!ok && r.failures++ == 0) r.note = what;
}

std::string describe(std::span<const double> z) {
  std::ostringstream os;
  os << "n=" << z.size() << " z=(";
  for (std::size_t i = 0; i < std::min<std::size_t>(z.size(), 6); ++i)
    os << (i ? "," : "") << z[i];
  if (z.size() > 6) os << ",...";
  os << ")";
  return os.str();
}

}  // namespace

SeparationSuiteParams separation_suite_params(std::size_t n) {
  const double delta = 4.0 * std::log(static_cast<double>(n));
  if (n <= 4) return {n, 15.0, delta, n + 2, false};
  if (n <= 8) return {n, 55.0, delta, 0, true};
  return {n, 120.0, delta, 0, true};
}

std::vector<std::vector<double>> make_separation_suite(const SeparationSuiteParams& p,
                                                       std::uint64_t seed,
                                                       std::uint64_t index,
                                                       std::size_t max_vectors) {
  SplitRng rng = SplitRng(seed).split("separation-suite").split(index);
  const std::size_t n_vec = 2 + rng.next_below(max_vectors - 1);
  // Shared ladder of delta-separated levels; vectors are distinct subsets so
  // equal entries stay exempt from the pairwise-gap condition.
  std::size_t levels = p.distinct_tops ? n_vec + (p.n - 1) : p.ladder_size;
  std::vector<double> pool(levels);
  pool[0] = p.gamma - 0.3;
  for (std::size_t i = 1; i < levels; ++i)
    pool[i] = pool[i - 1] - p.delta * rng.uniform(1.0001, 1.02);

  std::vector<std::vector<double>> suite;
  std::set<std::vector<double>> seen;
  for (std::size_t v = 0; v < n_vec; ++v) {
    std::vector<double> vec;
    if (p.distinct_tops) {
      // Unique top entry per vector keeps every pairwise Boltz gap large
      // enough to resolve in double precision; the tail is shared.
      vec.push_back(pool[v]);
      std::vector<std::size_t> tail(levels - n_vec);
      for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = n_vec + i;
      for (std::size_t i = tail.size(); i > 1; --i)
        std::swap(tail[i - 1], tail[rng.next_below(i)]);
      for (std::size_t i = 0; i + 1 < p.n; ++i) vec.push_back(pool[tail[i]]);
      std::sort(vec.rbegin(), vec.rend());
    } else {
      // Arbitrary distinct subset; feasible only while the full ladder span
      // stays within the double-resolvable window.
      for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<std::size_t> idx(levels);
        for (std::size_t i = 0; i < levels; ++i) idx[i] = i;
        for (std::size_t i = levels; i > 1; --i)
          std::swap(idx[i - 1], idx[rng.next_below(i)]);
        idx.resize(p.n);
        std::sort(idx.begin(), idx.end());
        vec.clear();
        for (std::size_t i : idx) vec.push_back(pool[i]);
        if (!seen.count(vec)) break;
      }
    }
    if (seen.count(vec)) continue;
    seen.insert(vec);
    suite.push_back(std::move(vec));
  }
  return suite;
}

std::vector<SuiteResult> run_boltz_suites(const BoltzSuiteConfig& cfg) {
  std::vector<SuiteResult> results;
  SplitRng root(cfg.seed);

  {
    SuiteResult r{"softmax_normalization"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.normalization_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range);
      auto p = softmax(z);
      double sum = 0.0;
      bool positive = true;
      for (double v : p) {
        sum += v;
        positive = positive && v > 0.0 && v <= 1.0;
      }
      const double shift = rng.uniform(-30.0, 30.0);
      auto zs = z;
      for (double& v : zs) v += shift;
      const auto ps = softmax(zs);
      double shift_err = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i)
        shift_err = std::max(shift_err, std::abs(p[i] - ps[i]));
      record(r, positive && std::abs(sum - 1.0) <= 1e-12 && shift_err <= 1e-12,
             describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"boltz_identity"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.identity_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range);
      const auto pe = partition_entropy(z);
      const double lhs = boltz(z);
      const double rhs = -pe.entropy + pe.log_partition;
      record(r, std::abs(lhs - rhs) <= cfg.identity_tol, describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"boltz_bounds_permutation"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.bounds_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range);
      const double b = boltz(z);
      const double lo = *std::min_element(z.begin(), z.end());
      const double hi = *std::max_element(z.begin(), z.end());
      auto zp = z;
      for (std::size_t i = zp.size(); i > 1; --i)
        std::swap(zp[i - 1], zp[rng.next_below(i)]);
      const double bp = boltz(zp);
      record(r, b >= lo - 1e-12 && b <= hi + 1e-12 && std::abs(b - bp) <= 1e-10,
             describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"gradient_fd"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.gradient_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range);
      const auto g = boltz_grad(z);
      bool ok = true;
      for (std::size_t i = 0; i < z.size() && ok; ++i) {
        const double fd = fd_gradient(z, i, 1e-6);
        ok = std::abs(g[i] - fd) <= cfg.gradient_rel_tol * std::max(1.0, std::abs(fd));
      }
      record(r, ok, describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"gradient_decrease"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.decrease_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range, 2, 16);
      const double n = static_cast<double>(z.size());
      // Plant one entry beyond the decrease threshold, measured against the
      // maximum of the remaining entries.
      const std::size_t i = rng.next_below(z.size());
      double top = -1e300;
      for (std::size_t j = 0; j < z.size(); ++j)
        if (j != i) top = std::max(top, z[j]);
      z[i] = top - (std::log(n) + 1.0 + rng.uniform(0.1, 5.0));
      const auto g = boltz_grad(z);
      record(r, g[i] < 0.0, describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"second_deriv_fd"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.second_deriv_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range, 2, 16);
      const std::size_t i = rng.next_below(z.size());
      const double an = boltz_second_deriv(z, i);
      const double fd = fd_second(z, i, 1e-4);
      record(r,
             std::abs(an - fd) <=
                 cfg.second_deriv_rel_tol * std::max(1.0, std::abs(fd)),
             describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"second_deriv_concavity"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.concavity_cases; ++c) {
      auto z = random_vector(rng, cfg.entry_range, 2, 16);
      const double n = static_cast<double>(z.size());
      const std::size_t i = rng.next_below(z.size());
      double top = -1e300;
      for (std::size_t j = 0; j < z.size(); ++j)
        if (j != i) top = std::max(top, z[j]);
      z[i] = top - (std::log(n) + 3.0 + rng.uniform(0.1, 5.0));
      record(r, boltz_second_deriv(z, i) < 0.0, describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"ladder_lower_bound"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.ladder_cases; ++c) {
      const std::size_t n = 2 + rng.next_below(7);
      const double delta = std::log(static_cast<double>(n)) + 1.0 + rng.uniform(0.1, 2.0);
      auto z = ladder(rng, n, rng.uniform(-3.0, 3.0), delta, delta + 1.5);
      std::vector<double> flat(n, z[0] - delta);
      flat[0] = z[0];
      record(r, boltz(z) > boltz(flat), describe(z));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"extension_decrease"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.extension_cases; ++c) {
      const std::size_t n = 2 + rng.next_below(4);
      const std::size_t m = n + 1 + rng.next_below(4);
      const double delta = std::log(static_cast<double>(n)) + 1.0 + rng.uniform(0.1, 1.5);
      auto full = ladder(rng, m, rng.uniform(-2.0, 2.0), delta, delta + 1.0);
      std::vector<double> head(full.begin(), full.begin() + static_cast<long>(n));
      record(r, boltz(head) > boltz(full), describe(full));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"single_entry_gap"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.single_entry_cases; ++c) {
      const std::size_t n = 2 + rng.next_below(3);
      const double nn = static_cast<double>(n);
      const double delta = 4.0 * std::log(nn);
      const double diff = rng.uniform(0.5, 2.0);
      std::vector<double> b;
      if (n >= 2) {
        b = ladder(rng, n - 1, rng.uniform(-2.0, 2.0), delta, delta * 1.1);
        // Last entry deep enough for the concavity step and the delta-based
        // bound: top minus a_n exceeds both ln n + 3 and delta + diff.
        const double last_gap =
            std::max(delta, std::log(nn) + 3.0) + diff + rng.uniform(0.2, 1.0);
        b.push_back(b.back() - last_gap);
      }
      auto a = b;
      a[n - 1] = b[n - 1] + diff;
      double denom = 0.0;
      for (double v : b) denom += std::exp(v - b[0]);
      const double weight = std::exp(b[n - 1] - b[0]) / denom;
      const double rhs =
          diff * (delta + diff - std::log(nn) - 1.0) * weight;
      record(r, boltz(b) - boltz(a) > rhs, describe(b));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"matching_prefix_gap"};
    SplitRng rng = root.split(r.name);
    for (int c = 0; c < cfg.prefix_gap_cases; ++c) {
      const std::size_t n = 2 + rng.next_below(7);
      const double nn = static_cast<double>(n);
      const double delta = 4.0 * std::log(nn);
      const std::size_t k_max = n <= 4 ? std::min<std::size_t>(2, n - 1) : 1;
      const std::size_t k = rng.next_below(k_max + 1);
      auto master =
          ladder(rng, k + 2 * (n - k), rng.uniform(-2.0, 2.0), delta, delta * 1.05);
      std::vector<double> a(master.begin(), master.begin() + static_cast<long>(k));
      auto b = a;
      for (std::size_t i = k; i < master.size(); ++i)
        ((i - k) % 2 == 0 ? a : b).push_back(master[i]);
      const double bound =
          std::pow(std::log(nn), 2.0) * std::exp(-(a[0] - b[k]));
      record(r, std::abs(boltz(a) - boltz(b)) > bound, describe(master));
    }
    results.push_back(r);
  }

  {
    SuiteResult r{"output_separation"};
    const std::size_t sizes[] = {4, 8, 16};
    for (int c = 0; c < cfg.separation_suites; ++c) {
      auto params = separation_suite_params(sizes[c % 3]);
      if (cfg.separation_gamma_override > 0) params.gamma = cfg.separation_gamma_override;
      auto suite = make_separation_suite(params, cfg.seed, static_cast<std::uint64_t>(c));
      if (suite.size() < 2) continue;
      try {
        const auto rep = check_boltz_separation(suite, params.gamma, params.delta);
        record(r, rep.pass, "min_gap=" + std::to_string(rep.min_gap));
      } catch (const precondition_error& e) {
        ++r.cases;
        if (r.precondition_violations++ == 0) r.note = e.what();
      }
    }
    results.push_back(r);
  }

  return results;
}

}  // namespace ptlab
