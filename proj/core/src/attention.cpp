#include "ptlab/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ptlab/boltzmann.hpp"
#include "ptlab/rng.hpp"

namespace ptlab {

namespace {

constexpr double kLogTiny = -690.0;  // ln(1e-300), sub-precision threshold

void require_head_shapes(const AttentionHead& h) {
  const auto s = h.w_v.rows(), d = h.w_v.cols();
  if (h.w_k.rows() != s || h.w_k.cols() != d || h.w_q.rows() != s ||
      h.w_q.cols() != d || h.w_o.rows() != d || h.w_o.cols() != s)
    throw std::invalid_argument("attention head weight shapes inconsistent");
}

}  // namespace

double ContextualParams::effective_delta_sep() const {
  if (delta_sep > 0.0) return delta_sep;
  return 4.0 * std::log(static_cast<double>(std::max<std::size_t>(seq_len, 2)));
}

double desk_scale_for_gamma(const ContextualParams& p, std::size_t d,
                            double gamma_target) {
  const double v1 = static_cast<double>(p.vocab_size + 1);
  const double big = std::pow(v1, 4.0) * static_cast<double>(d) *
                     p.effective_delta_sep() * p.gamma_max * p.gamma_max /
                     (p.eps * p.gamma_min);
  return std::min(1.0, gamma_target / big);
}

double HeadCertificate::gap_bound_proof() const {
  return subprecision ? 0.0 : std::exp(log_gap_bound_proof);
}

double HeadCertificate::gap_bound_simplified() const {
  return log_gap_bound_simplified < kLogTiny ? 0.0
                                             : std::exp(log_gap_bound_simplified);
}

std::vector<double> attn_token(std::span<const double> x, const SeqMatrix& z,
                               const AttentionHead& head) {
  require_head_shapes(head);
  if (x.size() != head.dim() || z.rows() != head.dim())
    throw std::invalid_argument("attn_token shape mismatch");
  const auto wq_x = mat_vec(head.w_q, x);  // s
  std::vector<double> logits(z.cols());
  for (std::size_t k = 0; k < z.cols(); ++k)
    logits[k] = dot(mat_vec(head.w_k, z.col(k)), wq_x);
  const auto weights = softmax(logits);
  std::vector<double> out(head.hidden(), 0.0);
  for (std::size_t k = 0; k < z.cols(); ++k) {
    const auto wv_col = mat_vec(head.w_v, z.col(k));
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += weights[k] * wv_col[r];
  }
  return out;
}

SeqMatrix self_attn_layer(const SeqMatrix& z, const AttentionHead& head) {
  SeqMatrix out(z.rows(), z.cols());
  for (std::size_t k = 0; k < z.cols(); ++k) {
    const auto att = attn_token(z.col(k), z, head);
    const auto shift = mat_vec(head.w_o, att);
    for (std::size_t r = 0; r < z.rows(); ++r) out(r, k) = z(r, k) + shift[r];
  }
  return out;
}

BuiltHead build_contextual_head(const Vocab& vocab, const ContextualParams& params,
                                int s, int rho, std::uint64_t seed) {
  const std::size_t d = vocab.tokens.empty() ? 0 : vocab.tokens.front().size();
  if (vocab.tokens.empty() || d == 0)
    throw std::invalid_argument("build_contextual_head: empty vocabulary");
  if (s < 1 || rho < 1 || rho > std::min<int>(static_cast<int>(d), s))
    throw std::invalid_argument("build_contextual_head: bad (s, rho)");
  if (!(params.gamma_max > params.gamma_min && params.gamma_min > 0.0) ||
      !(params.eps > 0.0))
    throw std::invalid_argument("build_contextual_head: bad separation params");

  // Vocabulary must be (gamma_min, gamma_max, eps)-separated.
  for (const auto& t : vocab.tokens) {
    const double n = norm2(t);
    if (!(n > params.gamma_min && n < params.gamma_max))
      throw precondition_error("vocabulary token norm outside (gamma_min, gamma_max)");
  }
  for (std::size_t a = 0; a + 1 < vocab.tokens.size(); ++a)
    for (std::size_t b = a + 1; b < vocab.tokens.size(); ++b) {
      double s2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = vocab.tokens[a][i] - vocab.tokens[b][i];
        s2 += diff * diff;
      }
      if (!(std::sqrt(s2) > params.eps))
        throw precondition_error("vocabulary tokens within eps");
    }

  auto points = vocab.tokens;
  points.emplace_back(d, 0.0);  // the proof separates V together with 0
  SplitRng rng = SplitRng(seed).split("contextual-head");
  const auto u = find_separating_unit_vector(points, rng.next_u64());

  const double c = params.scale();
  const double v1 = static_cast<double>(vocab.tokens.size() + 1);
  const double delta_sep = params.effective_delta_sep();
  const double product = c * std::pow(v1, 4.0) * static_cast<double>(d) * delta_sep /
                         (params.eps * params.gamma_min);
  const double p_len = std::sqrt(product);

  const std::size_t su = static_cast<std::size_t>(s);
  Matrix w_k(su, d), w_q(su, d), w_v(su, d);
  std::vector<std::vector<double>> p_v(static_cast<std::size_t>(rho));

  // Dominant components: p1 = p1' = sqrt(product) e_1, q1 = q1' = u;
  // value side uses a unit p1'' so the output scale lives in w_o alone.
  // Secondary components are drawn small relative to the dominant factor
  // magnitudes, large enough that the rank-rho singular values clear the
  // 1e-9 sigma_max detection threshold.
  const double eta = 1e-3;
  auto draw = [&](double scale) { return rng.uniform(-eta * scale, eta * scale); };
  for (int comp = 0; comp < rho; ++comp) {
    std::vector<double> pk(su), pq(su), pv(su), qk(d), qq(d), qv(d);
    if (comp == 0) {
      pk[0] = p_len;
      pq[0] = p_len;
      pv[0] = 1.0;
      qk.assign(u.begin(), u.end());
      qq = qk;
      qv = qk;
    } else {
      for (auto& x : pk) x = draw(p_len);
      for (auto& x : pq) x = draw(p_len);
      for (auto& x : pv) x = draw(1.0);
      for (auto& x : qk) x = draw(1.0);
      for (auto& x : qq) x = draw(1.0);
      for (auto& x : qv) x = draw(1.0);
    }
    for (std::size_t r = 0; r < su; ++r)
      for (std::size_t col = 0; col < d; ++col) {
        w_k(r, col) += pk[r] * qk[col];
        w_q(r, col) += pq[r] * qq[col];
        w_v(r, col) += pv[r] * qv[col];
      }
    p_v[static_cast<std::size_t>(comp)] = pv;
  }

  // w_o = u * (sum_j alpha_j phat_j^T): all output directions collinear with
  // the separating vector, with alpha solved so ||w_o p''_i|| hits
  // eps / (4 rho gamma_max) exactly for every component.
  const double target = params.eps / (4.0 * rho * params.gamma_max);
  std::vector<std::vector<double>> phat;
  std::vector<std::vector<double>> coords(p_v.size());  // r_{j,i} = phat_j . p''_i
  for (std::size_t i = 0; i < p_v.size(); ++i) {
    auto v = p_v[i];
    coords[i].resize(p_v.size(), 0.0);
    for (std::size_t j = 0; j < phat.size(); ++j) {
      const double r = dot(phat[j], v);
      coords[i][j] = r;
      for (std::size_t t = 0; t < su; ++t) v[t] -= r * phat[j][t];
    }
    const double rem = norm2(v);
    if (rem <= 1e-12)
      throw precondition_error("value components not linearly independent");
    coords[i][phat.size()] = rem;
    for (double& x : v) x /= rem;
    phat.push_back(std::move(v));
  }
  std::vector<double> alpha(p_v.size(), 0.0);
  for (std::size_t i = 0; i < p_v.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) acc += alpha[j] * coords[i][j];
    alpha[i] = (target - acc) / coords[i][i];
  }
  Matrix w_o(d, su);
  for (std::size_t j = 0; j < phat.size(); ++j)
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t t = 0; t < su; ++t) w_o(r, t) += u[r] * alpha[j] * phat[j][t];

  BuiltHead out;
  out.head = {std::move(w_o), std::move(w_v), std::move(w_k), std::move(w_q), rho};

  HeadCertificate& cert = out.cert;
  cert.scale_c = c;
  cert.key_query_product = product;
  cert.delta_sep = delta_sep;
  cert.eps = params.eps;
  cert.gamma_min = params.gamma_min;
  cert.gamma_max = params.gamma_max;
  cert.vocab_size = vocab.tokens.size();
  cert.seq_len = params.seq_len ? params.seq_len : vocab.tokens.size();
  cert.rho = rho;
  cert.hidden = s;
  cert.seed = seed;
  cert.sep_vector = u;
  const double n = static_cast<double>(cert.seq_len);
  cert.gamma_logit = product * params.gamma_max * params.gamma_max;
  cert.log_boltz_gap = 2.0 * std::log(std::log(std::max(n, 2.0))) - 2.0 * cert.gamma_logit;
  // Proof-exact chain: gap > eps * delta' / (4 gamma_max^2 * product).
  cert.log_gap_bound_proof = std::log(params.eps) + cert.log_boltz_gap -
                             std::log(4.0) - 2.0 * std::log(params.gamma_max) -
                             std::log(product);
  const double kappa = params.gamma_max / params.gamma_min;
  cert.log_gap_bound_simplified = -5.0 / params.eps *
                                  std::pow(static_cast<double>(cert.vocab_size), 4.0) *
                                  static_cast<double>(d) * kappa * params.gamma_max *
                                  std::log(std::max(n, 2.0));
  cert.subprecision = cert.log_gap_bound_proof < kLogTiny;
  return out;
}

ContextIds context_ids(std::span<const SeqMatrix> seqs, const AttentionHead& head,
                       const ContextualParams& params) {
  if (seqs.empty()) throw std::invalid_argument("context_ids: no sequences");
  // Hypotheses: tokenwise separation and no within-sequence duplicates.
  for (const auto& s : seqs)
    for (std::size_t k = 0; k + 1 < s.cols(); ++k)
      for (std::size_t l = k + 1; l < s.cols(); ++l)
        if (std::equal(s.col(k).begin(), s.col(k).end(), s.col(l).begin()))
          throw precondition_error("duplicated token within a sequence");
  const auto tw = check_tokenwise(
      seqs, {params.gamma_min, params.gamma_max, params.eps, SeparationKind::full});
  if (!tw.ok) throw precondition_error("tokenwise separation: " + tw.first_violation);

  ContextIds out;
  out.psi_bound = params.eps / 4.0;
  for (const auto& s : seqs) {
    SeqMatrix id(s.rows(), s.cols());
    for (std::size_t k = 0; k < s.cols(); ++k) {
      const auto att = attn_token(s.col(k), s, head);
      const auto psi = mat_vec(head.w_o, att);
      out.max_psi_norm = std::max(out.max_psi_norm, norm2(psi));
      for (std::size_t r = 0; r < s.rows(); ++r) id(r, k) = s(r, k) + psi[r];
    }
    out.ids.push_back(std::move(id));
  }
  out.psi_within_bound = out.max_psi_norm < out.psi_bound;
  return out;
}

PromptDecomposition prompt_decomposition(std::span<const double> x,
                                         const SeqMatrix& prompt,
                                         const SeqMatrix& input,
                                         const AttentionHead& head) {
  require_head_shapes(head);
  if (prompt.cols() == 0 || input.cols() == 0)
    throw std::invalid_argument("prompt_decomposition: empty block");
  if (prompt.rows() != head.dim() || input.rows() != head.dim() ||
      x.size() != head.dim())
    throw std::invalid_argument("prompt_decomposition: shape mismatch");

  const auto wq_x = mat_vec(head.w_q, x);
  auto block_logits = [&](const SeqMatrix& z) {
    std::vector<double> logits(z.cols());
    for (std::size_t k = 0; k < z.cols(); ++k)
      logits[k] = dot(mat_vec(head.w_k, z.col(k)), wq_x);
    return logits;
  };
  const auto lp = block_logits(prompt);
  const auto lx = block_logits(input);
  double m = lp.front();
  for (double v : lp) m = std::max(m, v);
  for (double v : lx) m = std::max(m, v);
  double sp = 0.0, sx = 0.0;
  for (double v : lp) sp += std::exp(v - m);
  for (double v : lx) sx += std::exp(v - m);

  PromptDecomposition out;
  out.lambda = sp / (sp + sx);
  out.att_prompt = mat_vec(head.w_o, attn_token(x, prompt, head));
  out.att_input = mat_vec(head.w_o, attn_token(x, input, head));
  return out;
}

}  // namespace ptlab
