#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptlab/matrix.hpp"

namespace ptlab {

/// Bounded-norm attention approximation instance: approximate
/// Vp softmax(Kp^T Qp) within delta_f in max norm, given all entry
/// magnitudes at most b.
struct AptiInstance {
  Matrix qp;  // d x n
  Matrix kp;  // d x n
  Matrix vp;  // dv x n
  double b = 0.0;
  double delta_f = 0.0;
};

AptiInstance make_random_instance(std::size_t n, std::size_t d, double b,
                                  double delta_f, std::uint64_t seed,
                                  std::size_t dv = 0);
void validate_instance(const AptiInstance& inst);

/// Column-wise softmax attention with max-subtraction; O(n^2 d) time and
/// O(n) transient memory per query column.
Matrix exact_attention(const Matrix& qp, const Matrix& kp, const Matrix& vp);

/// Number of monomials of degree <= g in d variables, C(d + g, g), as a
/// double (can exceed integer range).
double feature_dim(std::size_t d, int degree);

/// phi(x) indexed by multi-indices beta, |beta| <= g, in graded
/// lexicographic order; entry x^beta / sqrt(beta!) so that
/// phi(q) . phi(k) = sum_{i<=g} (q.k)^i / i!.
class TaylorFeatureMap {
 public:
  TaylorFeatureMap(std::size_t d, int degree);

  std::size_t dim() const { return scale_.size(); }
  int degree() const { return degree_; }
  void eval(std::span<const double> x, std::span<double> out) const;
  std::vector<double> eval(std::span<const double> x) const;

 private:
  std::size_t d_ = 0;
  int degree_ = 0;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint16_t> var_;
  std::vector<double> scale_;
};

std::vector<double> taylor_feature_map(std::span<const double> x, int degree);

/// Smallest g with R^(g+1) / (g+1)! <= rel_tol * exp(-R): the Taylor
/// remainder on [-R, R] measured against the smallest attainable
/// exponential value. Evaluated in log space.
int required_degree(double r, double rel_tol);

/// Thrown when a Taylor partial sum fails to stay positive on an instance.
struct degree_too_small : std::runtime_error {
  explicit degree_too_small(std::size_t column)
      : std::runtime_error("nonpositive attention normalizer at column " +
                           std::to_string(column) + ": degree too small"),
        column(column) {}
  std::size_t column;
};

/// Low-rank attention through the degree-g Taylor feature map: streams
/// feature vectors of key columns into a (dv x m) accumulator, never
/// materializing an n x n matrix. O(n m (d + dv)) time.
Matrix lowrank_attention(const Matrix& qp, const Matrix& kp, const Matrix& vp,
                         int degree);

struct AptiCertificate {
  int degree_rule = 0;    // degree picked by required_degree
  int degree_final = 0;   // after any escalation
  int escalations = 0;
  double m = 0.0;         // feature dimension at the final degree
  std::size_t n = 0, d = 0;
  double b = 0.0, delta_f = 0.0;
  bool oracle_run = false;
  double measured_err = -1.0;  // valid iff oracle_run
  bool certified = false;      // measured_err <= delta_f
};

struct AptiResult {
  Matrix output;
  AptiCertificate cert;
};

/// Degree from required_degree(d b^2, delta_f / 4); certifies against the
/// exact oracle when n <= oracle_cutoff and escalates the degree (doubling,
/// three attempts) on certification failure before erroring.
AptiResult solve_apti(const AptiInstance& inst, std::size_t oracle_cutoff = 8192,
                      double max_feature_bytes = 512.0 * 1024.0 * 1024.0);

enum class DRule { fixed, c_log_n };

struct PhaseBenchConfig {
  std::vector<std::size_t> n_list;
  std::vector<double> b_list;
  DRule d_rule = DRule::fixed;
  double d_value = 8.0;  // fixed dimension, or the c of c * ln n
  double delta_f = 1e-3;
  std::vector<std::uint64_t> seeds = {1};
  std::size_t oracle_cutoff = 8192;
  double max_feature_bytes = 512.0 * 1024.0 * 1024.0;
  int reps = 5;  // timing repetitions, median reported
  bool exact_only = false;
};

struct BenchRecord {
  std::size_t n = 0, d = 0;
  double b = 0.0;
  std::string method;           // "exact" | "lowrank"
  int degree = -1;              // -1: not applicable
  double m = -1.0;              // feature dimension; -1: not applicable
  double wall_time_s = -1.0;    // -1: not run
  double max_err = -1.0;        // -1: oracle not run
  int certified = -1;           // -1: unknown
  std::uint64_t seed = 0;
  std::string note;
};

/// Per-cell exact and low-rank timings over the (n, B) sweep. Failures of
/// individual cells (e.g. feature dimension over the memory budget) are
/// recorded in-row rather than aborting the sweep. Single-threaded.
std::vector<BenchRecord> phase_bench(const PhaseBenchConfig& cfg);

/// Least-squares slope of ln(t) against ln(n).
double loglog_slope(std::span<const double> n, std::span<const double> t);

}  // namespace ptlab
