#include "ptlab/serialize.hpp"

#include <charconv>
#include <stdexcept>

#include <json.hpp>

namespace ptlab {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.row_major()}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  return Matrix::from_row_major(rows, cols, data);
}

json cert_to_json(const HeadCertificate& c) {
  return json{{"scale_c", c.scale_c},
              {"key_query_product", c.key_query_product},
              {"delta_sep", c.delta_sep},
              {"eps", c.eps},
              {"gamma_min", c.gamma_min},
              {"gamma_max", c.gamma_max},
              {"vocab_size", c.vocab_size},
              {"seq_len", c.seq_len},
              {"rho", c.rho},
              {"hidden", c.hidden},
              {"gamma_logit", c.gamma_logit},
              {"log_boltz_gap", c.log_boltz_gap},
              {"log_gap_bound_proof", c.log_gap_bound_proof},
              {"log_gap_bound_simplified", c.log_gap_bound_simplified},
              {"subprecision", c.subprecision},
              {"sep_vector", c.sep_vector},
              {"seed", c.seed}};
}

HeadCertificate cert_from_json(const json& j) {
  HeadCertificate c;
  c.scale_c = j.at("scale_c").get<double>();
  c.key_query_product = j.at("key_query_product").get<double>();
  c.delta_sep = j.at("delta_sep").get<double>();
  c.eps = j.at("eps").get<double>();
  c.gamma_min = j.at("gamma_min").get<double>();
  c.gamma_max = j.at("gamma_max").get<double>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.seq_len = j.at("seq_len").get<std::size_t>();
  c.rho = j.at("rho").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.gamma_logit = j.at("gamma_logit").get<double>();
  c.log_boltz_gap = j.at("log_boltz_gap").get<double>();
  c.log_gap_bound_proof = j.at("log_gap_bound_proof").get<double>();
  c.log_gap_bound_simplified = j.at("log_gap_bound_simplified").get<double>();
  c.subprecision = j.at("subprecision").get<bool>();
  c.sep_vector = j.at("sep_vector").get<std::vector<double>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json head_to_json(const AttentionHead& h) {
  return json{{"w_o", matrix_to_json(h.w_o)},
              {"w_v", matrix_to_json(h.w_v)},
              {"w_k", matrix_to_json(h.w_k)},
              {"w_q", matrix_to_json(h.w_q)},
              {"rank_rho", h.rank_rho}};
}

AttentionHead head_from_json(const json& j) {
  AttentionHead h;
  h.w_o = matrix_from_json(j.at("w_o"));
  h.w_v = matrix_from_json(j.at("w_v"));
  h.w_k = matrix_from_json(j.at("w_k"));
  h.w_q = matrix_from_json(j.at("w_q"));
  h.rank_rho = j.at("rank_rho").get<int>();
  return h;
}

json layer_to_json(const FfnLayer& l) {
  json act;
  if (l.kind == Activation::relu) {
    act = json{{"kind", "relu"}};
  } else {
    act = json{{"kind", "plw"},
               {"breaks", l.plw.breaks},
               {"slopes", l.plw.slopes},
               {"intercepts", l.plw.intercepts}};
  }
  return json{{"w1", matrix_to_json(l.w1)},
              {"b1", l.b1},
              {"w2", matrix_to_json(l.w2)},
              {"b2", l.b2},
              {"activation", act}};
}

FfnLayer layer_from_json(const json& j) {
  FfnLayer l;
  l.w1 = matrix_from_json(j.at("w1"));
  l.b1 = j.at("b1").get<std::vector<double>>();
  l.w2 = matrix_from_json(j.at("w2"));
  l.b2 = j.at("b2").get<std::vector<double>>();
  const auto& act = j.at("activation");
  if (act.at("kind") == "relu") {
    l.kind = Activation::relu;
  } else {
    l.kind = Activation::plw;
    l.plw.breaks = act.at("breaks").get<std::vector<double>>();
    l.plw.slopes = act.at("slopes").get<std::vector<double>>();
    l.plw.intercepts = act.at("intercepts").get<std::vector<double>>();
  }
  return l;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::A: return "A";
    case Family::B: return "B";
    default: return "none";
  }
}

Family family_from_name(const std::string& s) {
  if (s == "A") return Family::A;
  if (s == "B") return Family::B;
  return Family::none;
}

}  // namespace

std::string serialize_head(const BuiltHead& built) {
  json j = head_to_json(built.head);
  j["schema_version"] = 1;
  j["certificate"] = cert_to_json(built.cert);
  return j.dump(2);
}

BuiltHead parse_head(const std::string& text) {
  const json j = json::parse(text);
  BuiltHead b;
  b.head = head_from_json(j);
  b.cert = cert_from_json(j.at("certificate"));
  return b;
}

std::string serialize_net(const TransformerNet& net) {
  json j;
  j["schema_version"] = 1;
  j["family"] = family_name(net.family);
  j["d"] = net.d;
  j["l_total"] = net.l_total;
  j["attn"] = head_to_json(net.attn);
  j["pre_ffn"] = json::array();
  for (const auto& l : net.pre_ffn) j["pre_ffn"].push_back(layer_to_json(l));
  j["post_ffn"] = json::array();
  for (const auto& l : net.post_ffn) j["post_ffn"].push_back(layer_to_json(l));
  if (net.pos_enc) j["pos_enc"] = matrix_to_json(*net.pos_enc);
  return j.dump(2);
}

TransformerNet parse_net(const std::string& text) {
  const json j = json::parse(text);
  TransformerNet net;
  net.family = family_from_name(j.at("family").get<std::string>());
  net.d = j.at("d").get<std::size_t>();
  net.l_total = j.at("l_total").get<std::size_t>();
  net.attn = head_from_json(j.at("attn"));
  for (const auto& l : j.at("pre_ffn")) net.pre_ffn.push_back(layer_from_json(l));
  for (const auto& l : j.at("post_ffn")) net.post_ffn.push_back(layer_from_json(l));
  if (j.contains("pos_enc")) net.pos_enc = matrix_from_json(j.at("pos_enc"));
  return net;
}

std::string serialize_dataset(const Dataset& ds) {
  json arr = json::array();
  for (const auto& [x, y] : ds.pairs)
    arr.push_back(json{{"X", x.row_major()},
                       {"Y", y.row_major()},
                       {"d", ds.d},
                       {"L", ds.l}});
  return arr.dump(2);
}

Dataset parse_dataset(const std::string& text) {
  const json arr = json::parse(text);
  if (!arr.is_array()) throw std::invalid_argument("dataset file must be an array");
  Dataset ds;
  for (const auto& item : arr) {
    const auto d = item.at("d").get<std::size_t>();
    const auto l = item.at("L").get<std::size_t>();
    if (ds.pairs.empty()) {
      ds.d = d;
      ds.l = l;
    } else if (d != ds.d || l != ds.l) {
      throw std::invalid_argument("dataset mixes shapes");
    }
    ds.pairs.emplace_back(
        Matrix::from_row_major(d, l, item.at("X").get<std::vector<double>>()),
        Matrix::from_row_major(d, l, item.at("Y").get<std::vector<double>>()));
  }
  validate_dataset(ds);
  return ds;
}

std::string memorize_report_json(const MemorizeReport& r, const TauBuildInfo& b) {
  json j{{"schema_version", 1},
         {"family", family_name(r.family)},
         {"eps", r.eps},
         {"c_lip", r.c_lip},
         {"alpha", r.alpha},
         {"delta", r.delta},
         {"l_p", r.l_p},
         {"l_p_bound", r.l_p_bound},
         {"ffn_layers", r.ffn_layers},
         {"mlp_neurons", r.mlp_neurons},
         {"table_sequences", r.table_sequences},
         {"max_err", r.max_err},
         {"seed", r.seed}};
  j["build"] = json{{"quant_layers", b.quant_layers},
                    {"output_layers", b.output_layers},
                    {"step_neurons", b.step_neurons},
                    {"bump_neurons", b.bump_neurons},
                    {"table_token_entries", b.table_token_entries},
                    {"gate_width", b.gate_width},
                    {"theta", b.theta},
                    {"bump_k", b.bump_k},
                    {"max_psi_norm", b.max_psi_norm},
                    {"psi_bound", b.psi_bound},
                    {"scale_c", b.cert.scale_c},
                    {"gamma_logit", b.cert.gamma_logit}};
  return j.dump(2);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string bench_records_csv(std::span<const BenchRecord> records) {
  std::string out = "n,d,B,method,g,m,wall_time_s,max_err,certified\n";
  for (const auto& r : records) {
    out += std::to_string(r.n) + "," + std::to_string(r.d) + "," +
           format_double(r.b) + "," + r.method + ",";
    if (r.degree >= 0) out += std::to_string(r.degree);
    out += ",";
    if (r.m >= 0) out += format_double(r.m);
    out += ",";
    if (r.wall_time_s >= 0) out += format_double(r.wall_time_s);
    out += ",";
    if (r.max_err >= 0) out += format_double(r.max_err);
    out += ",";
    if (r.certified >= 0) out += r.certified ? "true" : "false";
    out += "\n";
  }
  return out;
}

std::string bench_records_jsonl(std::span<const BenchRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json j{{"n", r.n},          {"d", r.d},
           {"B", r.b},          {"method", r.method},
           {"seed", r.seed},    {"note", r.note}};
    j["g"] = r.degree >= 0 ? json(r.degree) : json(nullptr);
    j["m"] = r.m >= 0 ? json(r.m) : json(nullptr);
    j["wall_time_s"] = r.wall_time_s >= 0 ? json(r.wall_time_s) : json(nullptr);
    j["max_err"] = r.max_err >= 0 ? json(r.max_err) : json(nullptr);
    j["certified"] = r.certified >= 0 ? json(r.certified == 1) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace ptlab
