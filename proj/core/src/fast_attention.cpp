#include "ptlab/fast_attention.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/rng.hpp"

namespace ptlab {

namespace {

double median_time(const std::vector<double>& samples) {
  auto s = samples;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

template <typename F>
double time_median(F&& fn, int reps) {
  fn();  // warm cache
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return median_time(samples);
}

double lowrank_bytes(std::size_t d, std::size_t dv, double m) {
  // feature-map tables + accumulator + scratch feature vectors
  (void)d;
  return m * (14.0 + 8.0 * (static_cast<double>(dv) + 3.0));
}

}  // namespace

AptiInstance make_random_instance(std::size_t n, std::size_t d, double b,
                                  double delta_f, std::uint64_t seed,
                                  std::size_t dv) {
  if (dv == 0) dv = d;
  SplitRng rng = SplitRng(seed).split("apti-instance");
  AptiInstance inst;
  inst.qp = Matrix(d, n);
  inst.kp = Matrix(d, n);
  inst.vp = Matrix(dv, n);
  for (auto* m : {&inst.qp, &inst.kp, &inst.vp})
    for (std::size_t c = 0; c < m->cols(); ++c)
      for (std::size_t r = 0; r < m->rows(); ++r) (*m)(r, c) = rng.uniform(-b, b);
  inst.b = b;
  inst.delta_f = delta_f;
  return inst;
}

void validate_instance(const AptiInstance& inst) {
  if (inst.qp.rows() != inst.kp.rows() || inst.qp.cols() != inst.kp.cols() ||
      inst.vp.cols() != inst.qp.cols() || inst.qp.cols() == 0)
    throw std::invalid_argument("apti instance shape mismatch");
  if (!(inst.b > 0.0) || !(inst.delta_f > 0.0))
    throw std::invalid_argument("apti instance needs positive b, delta_f");
  for (const auto* m : {&inst.qp, &inst.kp, &inst.vp})
    for (std::size_t c = 0; c < m->cols(); ++c)
      for (std::size_t r = 0; r < m->rows(); ++r)
        if (!(std::abs((*m)(r, c)) <= inst.b))
          throw std::invalid_argument("apti instance entry above the bound b");
}

Matrix exact_attention(const Matrix& qp, const Matrix& kp, const Matrix& vp) {
  if (qp.rows() != kp.rows() || qp.cols() != kp.cols() || vp.cols() != qp.cols())
    throw std::invalid_argument("exact_attention shape mismatch");
  const std::size_t n = qp.cols(), dv = vp.rows();
  Matrix out(dv, n);
  std::vector<double> scores(n), weights(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto q = qp.col(j);
    double mx = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = dot(kp.col(i), q);
      mx = std::max(mx, scores[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = std::exp(scores[i] - mx);
      sum += weights[i];
    }
    auto o = out.col(j);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights[i] / sum;
      const auto v = vp.col(i);
      for (std::size_t r = 0; r < dv; ++r) o[r] += w * v[r];
    }
  }
  return out;
}

double feature_dim(std::size_t d, int degree) {
  if (degree < 0) throw std::invalid_argument("feature_dim: negative degree");
  // C(d + g, d) computed stably in log space.
  const double dd = static_cast<double>(d), gg = static_cast<double>(degree);
  const double lg =
      std::lgamma(dd + gg + 1.0) - std::lgamma(dd + 1.0) - std::lgamma(gg + 1.0);
  return std::round(std::exp(lg)) < 1e15 ? std::round(std::exp(lg)) : std::exp(lg);
}

TaylorFeatureMap::TaylorFeatureMap(std::size_t d, int degree)
    : d_(d), degree_(degree) {
  if (d == 0 || degree < 0) throw std::invalid_argument("bad feature map arguments");
  const double m = feature_dim(d, degree);
  if (m > 5e7) throw std::invalid_argument("feature dimension too large to build");
  const std::size_t mm = static_cast<std::size_t>(m);
  parent_.reserve(mm);
  var_.reserve(mm);
  scale_.reserve(mm);
  parent_.push_back(0);
  var_.push_back(0);
  scale_.push_back(1.0);  // constant monomial

  // exps[i] tracks beta_{var_i} of feature i; min_var the smallest variable
  // used, so each monomial is produced once from monomial / x_{min var}.
  std::vector<std::uint16_t> min_var{static_cast<std::uint16_t>(d)};
  std::vector<std::uint16_t> top_exp{0};
  std::size_t level_begin = 0, level_end = 1;
  for (int deg = 1; deg <= degree; ++deg) {
    const std::size_t next_begin = scale_.size();
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (std::uint16_t j = 0; j <= std::min<std::uint16_t>(
                                         min_var[p], static_cast<std::uint16_t>(d - 1));
           ++j) {
        // exponent of x_j after the increment
        const std::uint16_t bj =
            (min_var[p] == j) ? static_cast<std::uint16_t>(top_exp[p] + 1) : 1;
        parent_.push_back(static_cast<std::uint32_t>(p));
        var_.push_back(j);
        scale_.push_back(1.0 / std::sqrt(static_cast<double>(bj)));
        min_var.push_back(j);
        top_exp.push_back(bj);
      }
    }
    level_begin = next_begin;
    level_end = scale_.size();
  }
}

void TaylorFeatureMap::eval(std::span<const double> x, std::span<double> out) const {
  if (x.size() != d_ || out.size() != dim())
    throw std::invalid_argument("feature map eval size mismatch");
  out[0] = 1.0;
  for (std::size_t i = 1; i < dim(); ++i)
    out[i] = out[parent_[i]] * x[var_[i]] * scale_[i];
}

std::vector<double> TaylorFeatureMap::eval(std::span<const double> x) const {
  std::vector<double> out(dim());
  eval(x, out);
  return out;
}

std::vector<double> taylor_feature_map(std::span<const double> x, int degree) {
  return TaylorFeatureMap(x.size(), degree).eval(x);
}

int required_degree(double r, double rel_tol) {
  if (!(r >= 0.0) || !(rel_tol > 0.0 && rel_tol < 1.0))
    throw std::invalid_argument("required_degree: bad arguments");
  if (r == 0.0) return 0;
  const double target = std::log(rel_tol) - r;
  const double log_r = std::log(r);
  for (int g = 0; g <= 200000; ++g) {
    const double term = static_cast<double>(g + 1) * log_r - std::lgamma(g + 2.0);
    if (term <= target) return g;
  }
  throw std::runtime_error("required_degree did not converge");
}

Matrix lowrank_attention(const Matrix& qp, const Matrix& kp, const Matrix& vp,
                         int degree) {
  if (qp.rows() != kp.rows() || qp.cols() != kp.cols() || vp.cols() != qp.cols())
    throw std::invalid_argument("lowrank_attention shape mismatch");
  const std::size_t n = qp.cols(), d = qp.rows(), dv = vp.rows();
  const TaylorFeatureMap fmap(d, degree);
  const std::size_t m = fmap.dim();

  // Stream key features: w = vp phi(K)^T (dv x m), u = phi(K) 1_n.
  std::vector<double> w(dv * m, 0.0), u(m, 0.0), phi(m);
  for (std::size_t i = 0; i < n; ++i) {
    fmap.eval(kp.col(i), phi);
    const auto v = vp.col(i);
    for (std::size_t f = 0; f < m; ++f) {
      const double pf = phi[f];
      u[f] += pf;
      double* wf = &w[f * dv];
      for (std::size_t r = 0; r < dv; ++r) wf[r] += pf * v[r];
    }
  }
  Matrix out(dv, n);
  for (std::size_t j = 0; j < n; ++j) {
    fmap.eval(qp.col(j), phi);
    double denom = 0.0;
    for (std::size_t f = 0; f < m; ++f) denom += u[f] * phi[f];
    if (!(denom > 0.0)) throw degree_too_small(j);
    auto o = out.col(j);
    for (std::size_t f = 0; f < m; ++f) {
      const double pf = phi[f];
      if (pf == 0.0) continue;
      const double* wf = &w[f * dv];
      for (std::size_t r = 0; r < dv; ++r) o[r] += pf * wf[r];
    }
    for (std::size_t r = 0; r < dv; ++r) o[r] /= denom;
  }
  return out;
}

AptiResult solve_apti(const AptiInstance& inst, std::size_t oracle_cutoff,
                      double max_feature_bytes) {
  validate_instance(inst);
  const std::size_t n = inst.qp.cols(), d = inst.qp.rows();
  const double r = static_cast<double>(d) * inst.b * inst.b;

  AptiResult res;
  res.cert.degree_rule = required_degree(r, inst.delta_f / 4.0);
  res.cert.n = n;
  res.cert.d = d;
  res.cert.b = inst.b;
  res.cert.delta_f = inst.delta_f;

  std::optional<Matrix> oracle;
  if (n <= oracle_cutoff) oracle = exact_attention(inst.qp, inst.kp, inst.vp);

  int g = res.cert.degree_rule;
  for (int attempt = 0;; ++attempt) {
    const double m = feature_dim(d, g);
    if (lowrank_bytes(d, inst.vp.rows(), m) > max_feature_bytes)
      throw std::runtime_error("solve_apti: feature dimension over memory budget");
    res.output = lowrank_attention(inst.qp, inst.kp, inst.vp, g);
    res.cert.degree_final = g;
    res.cert.m = m;
    res.cert.escalations = attempt;
    if (!oracle) return res;  // above the cutoff: not certified, says so
    res.cert.oracle_run = true;
    res.cert.measured_err = max_abs_diff(res.output, *oracle);
    res.cert.certified = res.cert.measured_err <= inst.delta_f;
    if (res.cert.certified) return res;
    if (attempt == 3)
      throw std::runtime_error(
          "solve_apti: certification failed after degree escalation (err " +
          std::to_string(res.cert.measured_err) + ")");
    g = std::max(2 * g, g + 1);
  }
}

std::vector<BenchRecord> phase_bench(const PhaseBenchConfig& cfg) {
  if (cfg.n_list.empty() || cfg.b_list.empty())
    throw std::invalid_argument("phase_bench: empty sweep lists");
  auto n_list = cfg.n_list;
  auto b_list = cfg.b_list;
  std::sort(n_list.begin(), n_list.end());
  std::sort(b_list.begin(), b_list.end());

  std::vector<BenchRecord> records;
  for (const std::size_t n : n_list) {
    for (const double b : b_list) {
      std::size_t d = cfg.d_rule == DRule::fixed
                          ? static_cast<std::size_t>(cfg.d_value)
                          : std::max<std::size_t>(
                                1, static_cast<std::size_t>(std::llround(
                                       cfg.d_value * std::log(static_cast<double>(n)))));
      for (const std::uint64_t seed : cfg.seeds) {
        const std::uint64_t cell_seed =
            SplitRng(seed).split("phase-bench").split(n).split(
                static_cast<std::uint64_t>(b * 4096)).next_u64();
        const AptiInstance inst =
            make_random_instance(n, d, b, cfg.delta_f, cell_seed);

        Matrix exact_out;
        BenchRecord ex{n, d, b, "exact"};
        ex.seed = seed;
        ex.wall_time_s = time_median(
            [&] { exact_out = exact_attention(inst.qp, inst.kp, inst.vp); },
            cfg.reps);
        records.push_back(ex);
        if (cfg.exact_only) continue;

        BenchRecord lr{n, d, b, "lowrank"};
        lr.seed = seed;
        lr.degree =
            required_degree(static_cast<double>(d) * b * b, cfg.delta_f / 4.0);
        lr.m = feature_dim(d, lr.degree);
        if (lowrank_bytes(d, d, lr.m) > cfg.max_feature_bytes) {
          lr.note = "skipped: feature dimension over memory budget";
          records.push_back(lr);
          continue;
        }
        Matrix lr_out;
        try {
          lr.wall_time_s = time_median(
              [&] { lr_out = lowrank_attention(inst.qp, inst.kp, inst.vp, lr.degree); },
              cfg.reps);
        } catch (const degree_too_small& e) {
          lr.note = e.what();
          records.push_back(lr);
          continue;
        }
        if (n <= cfg.oracle_cutoff) {
          lr.max_err = max_abs_diff(lr_out, exact_out);
          lr.certified = lr.max_err <= cfg.delta_f ? 1 : 0;
        }
        records.push_back(lr);
      }
    }
  }
  return records;
}

double loglog_slope(std::span<const double> n, std::span<const double> t) {
  if (n.size() != t.size() || n.size() < 2)
    throw std::invalid_argument("loglog_slope needs matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double count = static_cast<double>(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = std::log(n[i]), y = std::log(t[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace ptlab
