#include "ptlab/separation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/rng.hpp"

namespace ptlab {

namespace {

void require_same_shape(std::span<const SeqMatrix> seqs, const char* who) {
  if (seqs.empty()) throw std::invalid_argument(std::string(who) + ": no sequences");
  const auto d = seqs.front().rows();
  const auto l = seqs.front().cols();
  for (const auto& s : seqs) {
    if (s.rows() != d || s.cols() != l)
      throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    if (!s.all_finite())
      throw std::invalid_argument(std::string(who) + ": non-finite entry");
  }
}

double col_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool col_equal(std::span<const double> a, std::span<const double> b) {
  return std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

TokenwiseCheck check_tokenwise(std::span<const SeqMatrix> seqs,
                               const SeparationCert& cert) {
  require_same_shape(seqs, "check_tokenwise");
  TokenwiseCheck out;
  auto fail = [&](const std::string& what) {
    if (out.ok) {
      out.ok = false;
      out.first_violation = what;
    }
  };
  const bool want_min = cert.kind == SeparationKind::full;
  const bool want_max = cert.kind != SeparationKind::delta_only;
  for (std::size_t i = 0; i < seqs.size() && out.ok; ++i) {
    for (std::size_t k = 0; k < seqs[i].cols() && out.ok; ++k) {
      const double n = norm2(seqs[i].col(k));
      std::ostringstream os;
      if (want_min && !(n > cert.gamma_min)) {
        os << "token (" << i << "," << k << ") norm " << n << " not above gamma_min";
        fail(os.str());
      } else if (want_max && !(n < cert.gamma_max)) {
        os << "token (" << i << "," << k << ") norm " << n << " not below gamma_max";
        fail(os.str());
      }
    }
  }
  for (std::size_t i = 0; i < seqs.size() && out.ok; ++i) {
    for (std::size_t j = i; j < seqs.size() && out.ok; ++j) {
      for (std::size_t k = 0; k < seqs[i].cols() && out.ok; ++k) {
        const std::size_t l0 = (i == j) ? k + 1 : 0;
        for (std::size_t l = l0; l < seqs[j].cols() && out.ok; ++l) {
          const auto a = seqs[i].col(k), b = seqs[j].col(l);
          if (col_equal(a, b)) continue;  // equality exemption
          if (!(col_dist(a, b) > cert.delta)) {
            std::ostringstream os;
            os << "tokens (" << i << "," << k << ") and (" << j << "," << l
               << ") within delta";
            fail(os.str());
          }
        }
      }
    }
  }
  return out;
}

Vocab extract_vocab(std::span<const SeqMatrix> seqs) {
  require_same_shape(seqs, "extract_vocab");
  Vocab v;
  v.seq_tokens.resize(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t k = 0; k < seqs[i].cols(); ++k) {
      const auto col = seqs[i].col(k);
      std::size_t id = v.tokens.size();
      for (std::size_t t = 0; t < v.tokens.size(); ++t) {
        if (col_equal(v.tokens[t], col)) {
          id = t;
          break;
        }
      }
      if (id == v.tokens.size()) v.tokens.emplace_back(col.begin(), col.end());
      auto& mine = v.seq_tokens[i];
      if (std::find(mine.begin(), mine.end(), id) == mine.end()) mine.push_back(id);
    }
    std::sort(v.seq_tokens[i].begin(), v.seq_tokens[i].end());
  }
  return v;
}

double separating_lower_factor(std::size_t n_points, std::size_t d) {
  const double n2 = static_cast<double>(n_points) * static_cast<double>(n_points);
  return std::sqrt(8.0 / (3.14159265358979323846 * static_cast<double>(d))) / n2;
}

std::vector<double> find_separating_unit_vector(
    const std::vector<std::vector<double>>& points, std::uint64_t seed,
    int max_tries) {
  if (points.empty())
    throw std::invalid_argument("find_separating_unit_vector: empty point set");
  const std::size_t d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d)
      throw std::invalid_argument("find_separating_unit_vector: mixed dimensions");
  const double factor = separating_lower_factor(points.size(), d);
  if (max_tries <= 0)
    max_tries = static_cast<int>(10 * points.size() * points.size());

  SplitRng rng = SplitRng(seed).split("separating-unit-vector");
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    std::vector<double> u(d);
    double nrm = 0.0;
    for (double& x : u) {
      x = rng.gaussian();
      nrm += x * x;
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    for (double& x : u) x /= nrm;

    bool ok = true;
    for (std::size_t a = 0; a + 1 < points.size() && ok; ++a) {
      for (std::size_t b = a + 1; b < points.size() && ok; ++b) {
        double proj = 0.0, dist2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double diff = points[a][i] - points[b][i];
          proj += u[i] * diff;
          dist2 += diff * diff;
        }
        if (dist2 == 0.0) continue;  // identical points are vacuous
        ok = std::abs(proj) >= factor * std::sqrt(dist2);
      }
    }
    if (ok) return u;
  }
  throw precondition_error("separating unit vector search exhausted " +
                           std::to_string(max_tries) + " attempts");
}

ContextualReport verify_contextual(std::span<const SeqMatrix> ids,
                                   std::span<const SeqMatrix> seqs, double gamma,
                                   double delta) {
  require_same_shape(seqs, "verify_contextual");
  if (ids.size() != seqs.size())
    throw std::invalid_argument("verify_contextual: ids/seqs count mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i].rows() != seqs[i].rows() || ids[i].cols() != seqs[i].cols())
      throw std::invalid_argument("verify_contextual: shape mismatch");

  const auto vocab = extract_vocab(seqs);

  ContextualReport rep;
  rep.norm_ok = true;
  rep.gap_ok = true;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (const auto& id : ids)
    for (std::size_t k = 0; k < id.cols(); ++k) {
      const double n = norm2(id.col(k));
      rep.max_norm = std::max(rep.max_norm, n);
      if (!(n < gamma)) rep.norm_ok = false;
    }

  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t j = i; j < seqs.size(); ++j) {
      const bool vocab_differ = vocab.seq_tokens[i] != vocab.seq_tokens[j];
      for (std::size_t k = 0; k < seqs[i].cols(); ++k) {
        const std::size_t l0 = (i == j) ? k + 1 : 0;
        for (std::size_t l = l0; l < seqs[j].cols(); ++l) {
          const bool tokens_differ = !col_equal(seqs[i].col(k), seqs[j].col(l));
          if (!vocab_differ && !tokens_differ) continue;
          const double gap = col_dist(ids[i].col(k), ids[j].col(l));
          ++rep.pairs_checked;
          rep.min_gap = std::min(rep.min_gap, gap);
          if (!(gap > delta)) rep.gap_ok = false;
        }
      }
    }
  }
  if (rep.pairs_checked == 0) rep.min_gap = 0.0;
  rep.pass = rep.norm_ok && rep.gap_ok;
  return rep;
}

}  // namespace ptlab
