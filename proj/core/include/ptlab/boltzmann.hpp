#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ptlab {

/// Thrown when a semantic precondition fails (as opposed to a malformed
/// argument). Carries the first failing condition by name.
class precondition_error : public std::exception {
 public:
  explicit precondition_error(std::string what) : what_(std::move(what)) {}
  const char* what() const noexcept override { return what_.c_str(); }

 private:
  std::string what_;
};

/// Softmax with mandatory max-subtraction: exp(z_i - max z) / sum_j exp(z_j - max z).
/// Entries are strictly positive and sum to 1 within 1e-12.
std::vector<double> softmax(std::span<const double> z);

/// boltz(z) = z . softmax(z); always inside [min z, max z].
double boltz(std::span<const double> z);

struct PartitionEntropy {
  double log_partition;  // ln Z(z), log-sum-exp with max-subtraction
  double entropy;        // -sum p_i ln p_i, in [0, ln n]
};
PartitionEntropy partition_entropy(std::span<const double> z);

/// Analytic gradient: entry i is p_i (1 + ln p_i + entropy(p)).
std::vector<double> boltz_grad(std::span<const double> z);

/// Analytic second derivative along coordinate i:
/// p_i [(1 - 2 p_i)(z_i - ln Z + entropy + 1) + 1].
double boltz_second_deriv(std::span<const double> z, std::size_t i);

struct PairGap {
  std::size_t i = 0, j = 0;
  double gap = 0.0;  // |boltz(z_i) - boltz(z_j)|
};

struct SeparationReport {
  bool pass = false;
  bool vacuous_subprecision = false;  // bound fell below 1e-300
  double bound = 0.0;                 // ln^2(n) e^{-2 gamma}
  double log_bound = 0.0;             // evaluated in log space
  double min_gap = 0.0;
  double max_abs_value = 0.0;
  std::size_t pairs_checked = 0;
  PairGap worst_pair;
};

/// Validates that the vectors are pairwise (gamma, delta)-separated scalar
/// collections with no within-vector duplicates and delta >= 4 ln n, then
/// checks that Boltz outputs stay within gamma and every pair of distinct
/// vectors keeps a gap above ln^2(n) e^{-2 gamma}. Throws precondition_error
/// naming the first failing condition.
SeparationReport check_boltz_separation(const std::vector<std::vector<double>>& vectors,
                                        double gamma, double delta);

void require_finite_nonempty(std::span<const double> z, const char* who);

}  // namespace ptlab
