// ptlab: front door for the property suites, constructed transformers,
// memorization runs and attention benchmarks.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 input/precondition error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptlab/boltzmann.hpp"
#include "ptlab/boltzmann_suite.hpp"
#include "ptlab/contextual_suite.hpp"
#include "ptlab/fast_attention.hpp"
#include "ptlab/memorize.hpp"
#include "ptlab/serialize.hpp"

using nlohmann::json;
using namespace ptlab;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitInputError = 2;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  return json::parse(read_file(path));
}

template <typename T>
void config_default(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

int cmd_boltz_check(const json& cfg, std::uint64_t seed, const std::string& out) {
  BoltzSuiteConfig sc;
  sc.seed = seed;
  config_default(cfg, "identity_cases", sc.identity_cases);
  config_default(cfg, "gradient_cases", sc.gradient_cases);
  config_default(cfg, "separation_suites", sc.separation_suites);
  config_default(cfg, "separation_gamma_override", sc.separation_gamma_override);

  Timer timer;
  const auto results = run_boltz_suites(sc);

  json report{{"schema_version", 1}, {"command", "boltz-check"}, {"seed", seed}};
  bool fail = false, violated = false;
  report["suites"] = json::array();
  for (const auto& r : results) {
    report["suites"].push_back(json{{"name", r.name},
                                    {"cases", r.cases},
                                    {"failures", r.failures},
                                    {"precondition_violations", r.precondition_violations},
                                    {"note", r.note}});
    fail = fail || r.failures > 0;
    violated = violated || r.precondition_violations > 0;
  }
  report["pass"] = !fail && !violated;
  report["timing"] = json{{"wall_s", timer.seconds()}};
  write_output(out, report.dump(2));
  if (violated) return kExitInputError;
  return fail ? kExitCheckFailure : kExitPass;
}

std::vector<SeqMatrix> parse_sequences(const std::string& text) {
  const json j = json::parse(text);
  const auto d = j.at("d").get<std::size_t>();
  const auto l = j.at("l").get<std::size_t>();
  std::vector<SeqMatrix> seqs;
  for (const auto& row_major : j.at("sequences"))
    seqs.push_back(Matrix::from_row_major(d, l, row_major.get<std::vector<double>>()));
  return seqs;
}

int cmd_contextual(const json& cfg, std::uint64_t seed, const std::string& out,
                   const std::string& profile, double scale, int n_suites,
                   const std::string& input_path, const std::string& head_out) {
  (void)cfg;
  const ScaleProfile prof =
      profile == "paper" ? ScaleProfile::paper_faithful : ScaleProfile::desk;

  Timer timer;
  json report{{"schema_version", 1},
              {"command", "contextual"},
              {"seed", seed},
              {"profile", profile},
              {"scale", scale > 0 ? json(scale) : json("auto")}};
  report["results"] = json::array();
  bool all_pass = true;
  std::string head_json;

  auto run_one = [&](const ContextualSuite& suite, std::uint64_t idx) {
    const auto res = run_contextual_suite(suite, prof, scale, seed ^ (idx + 1));
    all_pass = all_pass && res.pass;
    report["results"].push_back(json{{"index", idx},
                                     {"pass", res.pass},
                                     {"subprecision", res.subprecision},
                                     {"gamma", res.gamma_check},
                                     {"gap_bound", res.gap_bound},
                                     {"min_gap", res.measured_min_gap},
                                     {"max_norm", res.measured_max_norm},
                                     {"max_psi", res.max_psi},
                                     {"psi_bound", res.psi_bound},
                                     {"note", res.note}});
    if (head_json.empty()) {
      ContextualParams params = suite.params;
      params.profile = prof;
      const auto vocab = extract_vocab(suite.seqs);
      params.vocab_size = vocab.tokens.size();
      if (prof == ScaleProfile::desk)
        params.scale_factor =
            scale > 0 ? scale : desk_scale_for_gamma(params, suite.d, 12.0);
      head_json = serialize_head(
          build_contextual_head(vocab, params, 1, 1, seed ^ (idx + 1)));
    }
  };

  if (!input_path.empty()) {
    const auto seqs = parse_sequences(read_file(input_path));
    ContextualSuite suite;
    suite.seqs = seqs;
    suite.d = seqs.empty() ? 0 : seqs.front().rows();
    suite.l = seqs.empty() ? 0 : seqs.front().cols();
    // measured separation constants
    const auto vocab = extract_vocab(suite.seqs);
    double lo = 1e300, hi = 0.0, gap = 1e300;
    for (const auto& t : vocab.tokens) {
      lo = std::min(lo, norm2(t));
      hi = std::max(hi, norm2(t));
    }
    for (std::size_t a = 0; a + 1 < vocab.tokens.size(); ++a)
      for (std::size_t b = a + 1; b < vocab.tokens.size(); ++b) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < vocab.tokens[a].size(); ++i) {
          const double diff = vocab.tokens[a][i] - vocab.tokens[b][i];
          s2 += diff * diff;
        }
        gap = std::min(gap, std::sqrt(s2));
      }
    suite.params.eps = 0.999 * gap;
    suite.params.gamma_min = 0.999 * lo;
    suite.params.gamma_max = 1.001 * hi;
    suite.params.vocab_size = vocab.tokens.size();
    suite.params.seq_len = suite.l;
    run_one(suite, 0);
  } else {
    for (int i = 0; i < n_suites; ++i) {
      const auto suite = make_contextual_suite(seed, static_cast<std::uint64_t>(i));
      if (suite.seqs.size() < 2) continue;
      run_one(suite, static_cast<std::uint64_t>(i));
    }
  }

  report["pass"] = all_pass;
  report["timing"] = json{{"wall_s", timer.seconds()}};
  write_output(out, report.dump(2));
  if (!head_out.empty() && !head_json.empty()) write_output(head_out, head_json);
  return all_pass ? kExitPass : kExitCheckFailure;
}

int cmd_memorize(std::uint64_t seed, const std::string& out,
                 const std::string& dataset_path, double eps, double c_lip,
                 double alpha, const std::string& family_name,
                 const std::string& net_out) {
  const Dataset ds = parse_dataset(read_file(dataset_path));
  const Family family = family_name == "A" ? Family::A : Family::B;

  Timer timer;
  const auto res = memorize(ds, eps, c_lip, alpha, family, seed);
  json report = json::parse(memorize_report_json(res.report, res.build));
  report["command"] = "memorize";
  report["pass"] = res.report.max_err <= eps;
  report["timing"] = json{{"wall_s", timer.seconds()}};
  write_output(out, report.dump(2));
  if (!net_out.empty()) write_output(net_out, serialize_net(res.net));
  return res.report.max_err <= eps ? kExitPass : kExitCheckFailure;
}

int cmd_apti_bench(std::uint64_t seed, const std::string& out,
                   const PhaseBenchConfig& base, bool write_csv, bool write_jsonl) {
  PhaseBenchConfig cfg = base;
  cfg.seeds = {seed};
  const auto records = phase_bench(cfg);

  if (write_jsonl && !write_csv) {
    write_output(out, bench_records_jsonl(records));
  } else if (write_jsonl && write_csv) {
    write_output(out, bench_records_csv(records));
    write_output(out.empty() || out == "-" ? out : out + ".jsonl",
                 bench_records_jsonl(records));
  } else {
    write_output(out, bench_records_csv(records));
  }

  // crossover summary on stderr-free channel: only when a full sweep ran
  bool any_failure = false;
  for (const auto& r : records)
    any_failure = any_failure || (r.method == "lowrank" && r.certified == 0);
  return any_failure ? kExitCheckFailure : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constructed-transformer and attention-approximation workbench"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string config_path, out_path;
  app.add_option("--seed", seed, "root seed for all randomized pieces");
  app.add_option("--config", config_path, "JSON config file (flags win)");
  app.add_option("--out", out_path, "output path ('-' or empty: stdout)");

  auto* boltz = app.add_subcommand("boltz-check", "run the softmax/Boltzmann property suites");

  auto* ctx = app.add_subcommand("contextual", "build a contextual-mapping head and verify it");
  std::string profile = "desk", input_path, head_out;
  double scale = 0.0;
  int n_suites = 50;
  ctx->add_option("--profile", profile, "desk|paper")->check(CLI::IsMember({"desk", "paper"}));
  ctx->add_option("--scale", scale, "desk scale factor (default: auto)");
  ctx->add_option("--suites", n_suites, "number of generated suites");
  ctx->add_option("--input", input_path, "sequence suite JSON instead of generated suites");
  ctx->add_option("--head-out", head_out, "write the first built head + certificate");

  auto* mem = app.add_subcommand("memorize", "fit a constructed net + prompt to a dataset");
  std::string dataset_path, family = "B", net_out;
  double eps = 0.0, c_lip = 0.0, alpha = 1.0;
  mem->add_option("--dataset", dataset_path, "dataset JSON file");
  mem->add_option("--eps", eps, "target error");
  mem->add_option("--lipschitz", c_lip, "Lipschitz constant C");
  mem->add_option("--alpha", alpha, "entrywise norm order");
  mem->add_option("--family", family, "A|B")->check(CLI::IsMember({"A", "B"}));
  mem->add_option("--net-out", net_out, "write the constructed net");

  PhaseBenchConfig bench;
  bench.n_list = {256, 512, 1024, 2048};
  bench.b_list = {0.5};
  auto* apti = app.add_subcommand("apti-bench", "exact vs low-rank attention sweep");
  bool csv = false, jsonl = false, exact_only = false;
  std::string d_rule = "fixed";
  apti->add_option("--n", bench.n_list, "sequence lengths");
  apti->add_option("--b", bench.b_list, "entry bounds");
  apti->add_option("--d", bench.d_value, "dimension (or c for c-log-n)");
  apti->add_option("--d-rule", d_rule, "fixed|clogn")->check(CLI::IsMember({"fixed", "clogn"}));
  apti->add_option("--delta-f", bench.delta_f, "target max-norm error");
  apti->add_option("--reps", bench.reps, "timing repetitions (median)");
  apti->add_option("--oracle-cutoff", bench.oracle_cutoff, "largest n certified against the exact oracle");
  apti->add_flag("--csv", csv, "emit CSV (default)");
  apti->add_flag("--jsonl", jsonl, "emit JSON lines");
  apti->add_flag("--exact-only", exact_only, "skip the low-rank runs");

  auto* phase = app.add_subcommand("phase-diagram", "apti-bench with the B-sweep preset");
  bool phase_csv = false, phase_jsonl = false;
  phase->add_flag("--csv", phase_csv, "emit CSV (default)");
  phase->add_flag("--jsonl", phase_jsonl, "emit JSON lines");

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = load_config(config_path);
    if (cfg.contains("seed") && !app.count("--seed"))
      seed = cfg.at("seed").get<std::uint64_t>();
    if (cfg.contains("out") && out_path.empty())
      out_path = cfg.at("out").get<std::string>();

    if (boltz->parsed()) return cmd_boltz_check(cfg, seed, out_path);
    if (ctx->parsed())
      return cmd_contextual(cfg, seed, out_path, profile, scale, n_suites,
                            input_path, head_out);
    if (mem->parsed())
      return cmd_memorize(seed, out_path, dataset_path, eps, c_lip, alpha, family,
                          net_out);
    if (apti->parsed()) {
      bench.d_rule = d_rule == "clogn" ? DRule::c_log_n : DRule::fixed;
      bench.exact_only = exact_only;
      return cmd_apti_bench(seed, out_path, bench, csv, jsonl);
    }
    if (phase->parsed()) {
      PhaseBenchConfig sweep;
      sweep.n_list = {2048};
      sweep.b_list = {0.25, 0.5, 1.0, 1.5, 2.0, 3.0};
      sweep.d_value = 8;
      sweep.delta_f = 1e-3;
      return cmd_apti_bench(seed, out_path, sweep, phase_csv, phase_jsonl);
    }
  } catch (const precondition_error& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::overflow_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "check failure: " << e.what() << "\n";
    return kExitCheckFailure;
  }
  return kExitInputError;
}
