// wm: command-line front end for the watermark testbed.
//
// Subcommands mirror the library operations one-to-one; every command is
// deterministic in its seed inputs and writes bytes through a single
// serialization path, so reruns produce identical files.

#include <wm/attacks.hpp>
#include <wm/corpus.hpp>
#include <wm/harness.hpp>
#include <wm/keygen.hpp>
#include <wm/lm.hpp>
#include <wm/quality.hpp>
#include <wm/watermarks.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace wm;

WatermarkKey load_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open key file " + path);
  return key_from_json(nlohmann::json::parse(in));
}

std::vector<SchemeId> parse_scheme_list(const std::string& csv) {
  std::vector<SchemeId> out;
  std::string cur;
  std::istringstream in(csv);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (cur == "all") {
      out.assign(kAllSchemes.begin(), kAllSchemes.end());
    } else if (!cur.empty()) {
      out.push_back(parse_scheme(cur));
    }
  }
  if (out.empty()) throw std::invalid_argument("scheme list is empty");
  return out;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path == "-") {
    std::cout << content;
  } else {
    harness::write_text_file(out_path, content);
  }
}

std::filesystem::path out_file(const harness::ExperimentConfig& cfg,
                               const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

// ---------------------------------------------------------------------------

int cmd_keygen(const std::string& scheme, std::uint64_t seed,
               const std::string& out) {
  auto key = keygen(parse_scheme(scheme), seed);
  emit(out, key_to_json(key).dump(2) + "\n");
  return 0;
}

int cmd_generate(const std::string& scheme, const std::string& key_file,
                 const std::string& prompt_file, std::size_t max_tokens,
                 std::uint64_t seed, std::uint64_t message,
                 std::uint64_t space, const std::string& out) {
  auto key = load_key(key_file);
  if (parse_scheme(scheme) != key.scheme) {
    throw std::invalid_argument("--scheme disagrees with the key file");
  }
  auto prompts = harness::load_prompts_jsonl(prompt_file);
  const auto& model = corpus::bundled_model();
  std::ostringstream lines;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    TokenSeq text = marks::generate_watermarked(
        model, key, Message{message, space}, prompts[i], max_tokens,
        rng::derive_seed(seed, i));
    nlohmann::json j{{"tokens", text.tokens},
                     {"provenance", provenance_name(text.provenance)}};
    lines << j.dump() << "\n";
  }
  emit(out, lines.str());
  return 0;
}

int cmd_detect(const std::string& scheme, const std::string& key_file,
               const std::string& in_file, double rho, std::uint64_t message,
               std::uint64_t space, const std::string& out) {
  auto key = load_key(key_file);
  if (parse_scheme(scheme) != key.scheme) {
    throw std::invalid_argument("--scheme disagrees with the key file");
  }
  auto texts = harness::load_prompts_jsonl(in_file);
  const auto& model = corpus::bundled_model();
  marks::VerifyOptions vo;
  vo.message = Message{message, space};
  std::ostringstream lines;
  for (const auto& text : texts) {
    auto res = marks::verify(key.scheme, key, text, model.vocab().size(), vo);
    nlohmann::json j{{"p_value", res.p_value},
                     {"statistic", res.statistic},
                     {"scored_tokens", res.scored_tokens},
                     {"detected", res.p_value < rho}};
    lines << j.dump() << "\n";
  }
  emit(out, lines.str());
  return 0;
}

int cmd_prompts(const std::string& set, std::size_t count, std::uint64_t seed,
                const std::string& out) {
  auto prompts = harness::prompt_set(set, count, seed);
  std::ostringstream lines;
  for (const auto& p : prompts) {
    nlohmann::json j{{"tokens", p.tokens},
                     {"provenance", provenance_name(p.provenance)}};
    lines << j.dump() << "\n";
  }
  emit(out, lines.str());
  return 0;
}

int cmd_tune(const std::string& train_schemes, std::uint32_t iters,
             std::uint32_t lambda, std::size_t pool,
             const std::string& queries, std::size_t query_count,
             std::size_t max_tokens, double rho, std::uint64_t seed,
             const std::string& out) {
  attacks::TunerConfig cfg;
  cfg.schemes = parse_scheme_list(train_schemes);
  cfg.iterations = iters;
  cfg.lambda = lambda;
  cfg.seed_pool = pool;
  cfg.max_tokens = max_tokens;
  cfg.rho = rho;
  cfg.queries = harness::prompt_set(
      queries, query_count, rng::derive_seed(seed, "cli/tune-queries"));
  auto res = attacks::tune_adaptive(attacks::ParaphraserParams{}, cfg,
                                    corpus::bundled_model(),
                                    attacks::default_quality_fn(), seed);
  nlohmann::json j = attacks::paraphraser_to_json(res.params);
  j["tuning_seed"] = seed;
  j["train_schemes"] = train_schemes;
  j["objective"] = res.best_estimate.objective;
  j["evasion_term"] = res.best_estimate.evasion_term;
  j["quality_term"] = res.best_estimate.quality_term;
  j["init_objective"] = res.init_estimate.objective;
  emit(out, j.dump(2) + "\n");
  return 0;
}

int cmd_curate(const std::string& schemes, const std::string& queries,
               const std::string& params_file, std::uint32_t n, double rho,
               double delta, std::size_t max_tokens, std::uint64_t seed,
               const std::string& out) {
  attacks::ParaphraserParams params;
  if (!params_file.empty()) {
    std::ifstream in(params_file);
    if (!in) throw std::runtime_error("cannot open params file " + params_file);
    params = attacks::paraphraser_from_json(nlohmann::json::parse(in));
  }
  auto prompts = harness::load_prompts_jsonl(queries);
  auto trips = attacks::curate_preferences(
      corpus::bundled_model(), params, prompts, parse_scheme_list(schemes), n,
      rho, delta, attacks::default_quality_fn(), seed, max_tokens);
  std::ostringstream lines;
  for (const auto& t : trips) lines << attacks::triplet_to_json(t).dump() << "\n";
  emit(out, lines.str());
  return 0;
}

int cmd_evaluate(const std::string& config) {
  auto cfg = harness::load_config(config);
  auto report =
      harness::run_evasion_experiment(cfg, corpus::bundled_model());
  harness::write_text_file(out_file(cfg, "report.json").string(),
                           harness::report_to_json(report).dump(2) + "\n");
  harness::write_text_file(out_file(cfg, "report.csv").string(),
                           harness::report_to_csv(report));
  return 0;
}

int cmd_curves(const std::string& config) {
  auto cfg = harness::load_config(config);
  auto curves = harness::pvalue_curves(cfg, corpus::bundled_model());
  harness::write_text_file(out_file(cfg, "curves.json").string(),
                           harness::curves_to_json(curves).dump(2) + "\n");
  harness::write_text_file(out_file(cfg, "curves_median.csv").string(),
                           harness::curves_median_csv(curves));
  harness::write_text_file(out_file(cfg, "curves_cdf.csv").string(),
                           harness::curves_cdf_csv(curves));
  return 0;
}

int cmd_transfer(const std::string& config,
                 const std::vector<std::string>& param_specs) {
  auto cfg = harness::load_config(config);
  std::vector<std::pair<std::string, attacks::ParaphraserParams>> rows;
  for (const auto& spec : param_specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--params expects label=path, got " + spec);
    }
    std::string label = spec.substr(0, eq);
    std::string path = spec.substr(eq + 1);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open params file " + path);
    rows.emplace_back(label,
                      attacks::paraphraser_from_json(nlohmann::json::parse(in)));
  }
  auto m = harness::transfer_matrix(cfg, corpus::bundled_model(), rows);
  harness::write_text_file(out_file(cfg, "transfer.json").string(),
                           harness::transfer_to_json(m).dump(2) + "\n");
  harness::write_text_file(out_file(cfg, "transfer.csv").string(),
                           harness::transfer_to_csv(m));
  return 0;
}

int cmd_ablate_fpr(const std::string& config) {
  auto cfg = harness::load_config(config);
  auto table = harness::ablation_fpr(cfg, corpus::bundled_model());
  harness::write_text_file(out_file(cfg, "ablate_fpr.json").string(),
                           harness::fpr_to_json(table).dump(2) + "\n");
  harness::write_text_file(out_file(cfg, "ablate_fpr.csv").string(),
                           harness::fpr_to_csv(table));
  return 0;
}

int cmd_ablate_bias(const std::string& config) {
  auto cfg = harness::load_config(config);
  auto rows = harness::ablation_bias(cfg, corpus::bundled_model());
  harness::write_text_file(out_file(cfg, "ablate_bias.json").string(),
                           harness::bias_to_json(rows).dump(2) + "\n");
  harness::write_text_file(out_file(cfg, "ablate_bias.csv").string(),
                           harness::bias_to_csv(rows));
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  harness::EvasionReport merged;
  for (const auto& path : files) {
    nlohmann::json j = nlohmann::json::parse(harness::read_text_file(path));
    if (!j.is_object() || !j.contains("cells")) continue;
    auto r = harness::report_from_json(j);
    for (auto& cell : r.cells) merged.cells.push_back(std::move(cell));
  }
  if (merged.cells.empty()) {
    throw std::runtime_error("no evasion reports found in " + in_dir);
  }
  emit(out, harness::report_to_csv(merged));
  return 0;
}

int cmd_token_freq(const std::vector<std::string>& in_files, std::size_t k,
                   const std::string& out) {
  std::vector<std::pair<std::string, std::vector<std::pair<Token, double>>>>
      corpora;
  for (const auto& path : in_files) {
    auto texts = harness::load_prompts_jsonl(path);
    corpora.emplace_back(std::filesystem::path(path).filename().string(),
                         harness::token_frequency_report(texts, k));
  }
  emit(out, harness::token_frequency_csv(corpora));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"watermark robustness testbed"};
  app.require_subcommand(1);

  std::string scheme = "dist_shift", key_file, prompt_file, in_file;
  std::string out = "-", config, set = "eval", queries, params_file;
  std::string train_schemes = "all";
  std::vector<std::string> param_specs, in_files;
  std::uint64_t seed = 1, message = 0, space = 1;
  std::size_t max_tokens = 256, count = 100, pool = 16, query_count = 16;
  std::size_t k = 50;
  std::uint32_t iters = 50, lambda = 8, n = 16;
  double rho = 0.01, delta = 0.6;

  auto* c_keygen = app.add_subcommand("keygen", "derive a watermark key");
  c_keygen->add_option("--scheme", scheme)->required();
  c_keygen->add_option("--seed", seed)->required();
  c_keygen->add_option("--out", out);

  auto* c_gen = app.add_subcommand("generate", "watermarked text per prompt");
  c_gen->add_option("--scheme", scheme)->required();
  c_gen->add_option("--key-file", key_file)->required();
  c_gen->add_option("--prompt-file", prompt_file)->required();
  c_gen->add_option("--max-tokens", max_tokens);
  c_gen->add_option("--seed", seed)->required();
  c_gen->add_option("--message", message);
  c_gen->add_option("--message-space", space);
  c_gen->add_option("--out", out);

  auto* c_det = app.add_subcommand("detect", "verify texts against a key");
  c_det->add_option("--scheme", scheme)->required();
  c_det->add_option("--key-file", key_file)->required();
  c_det->add_option("--in", in_file)->required();
  c_det->add_option("--rho", rho);
  c_det->add_option("--message", message);
  c_det->add_option("--message-space", space);
  c_det->add_option("--out", out);

  auto* c_prompts = app.add_subcommand("prompts", "emit a prompt set");
  c_prompts->add_option("--set", set);
  c_prompts->add_option("--count", count);
  c_prompts->add_option("--seed", seed);
  c_prompts->add_option("--out", out);

  auto* c_tune = app.add_subcommand("tune", "evolutionary paraphraser tuning");
  c_tune->add_option("--train-schemes", train_schemes);
  c_tune->add_option("--iters", iters);
  c_tune->add_option("--lambda", lambda);
  c_tune->add_option("--pool", pool);
  c_tune->add_option("--queries", queries)->default_val("train");
  c_tune->add_option("--query-count", query_count);
  c_tune->add_option("--max-tokens", max_tokens);
  c_tune->add_option("--rho", rho);
  c_tune->add_option("--seed", seed);
  c_tune->add_option("--out", out);

  auto* c_curate = app.add_subcommand("curate", "preference triplet curation");
  c_curate->add_option("--scheme", scheme)->required();
  c_curate->add_option("--queries", queries)->required();
  c_curate->add_option("--params", params_file);
  c_curate->add_option("--n", n);
  c_curate->add_option("--rho", rho);
  c_curate->add_option("--delta", delta);
  c_curate->add_option("--max-tokens", max_tokens);
  c_curate->add_option("--seed", seed);
  c_curate->add_option("--out", out);

  auto* c_eval = app.add_subcommand("evaluate", "scheme x attack evasion grid");
  c_eval->add_option("--config", config)->required();

  auto* c_curves = app.add_subcommand("curves", "p-value curves and CDFs");
  c_curves->add_option("--config", config)->required();

  auto* c_transfer = app.add_subcommand("transfer", "tuned-params transfer matrix");
  c_transfer->add_option("--config", config)->required();
  c_transfer->add_option("--params", param_specs, "label=path, repeatable")
      ->required();

  auto* c_fpr = app.add_subcommand("ablate-fpr", "rho threshold ablation");
  c_fpr->add_option("--config", config)->required();

  auto* c_bias = app.add_subcommand("ablate-bias", "DistShift beta ablation");
  c_bias->add_option("--config", config)->required();

  auto* c_report = app.add_subcommand("report", "merge report JSONs to CSV");
  c_report->add_option("--in", in_file)->required();
  c_report->add_option("--out", out);

  auto* c_freq = app.add_subcommand("token-freq", "top-k token frequencies");
  c_freq->add_option("--in", in_files, "texts JSONL, repeatable")->required();
  c_freq->add_option("--k", k);
  c_freq->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_keygen->parsed()) return cmd_keygen(scheme, seed, out);
    if (c_gen->parsed()) {
      return cmd_generate(scheme, key_file, prompt_file, max_tokens, seed,
                          message, space, out);
    }
    if (c_det->parsed()) {
      return cmd_detect(scheme, key_file, in_file, rho, message, space, out);
    }
    if (c_prompts->parsed()) return cmd_prompts(set, count, seed, out);
    if (c_tune->parsed()) {
      return cmd_tune(train_schemes, iters, lambda, pool, queries, query_count,
                      max_tokens, rho, seed, out);
    }
    if (c_curate->parsed()) {
      return cmd_curate(scheme, queries, params_file, n, rho, delta,
                        max_tokens, seed, out);
    }
    if (c_eval->parsed()) return cmd_evaluate(config);
    if (c_curves->parsed()) return cmd_curves(config);
    if (c_transfer->parsed()) return cmd_transfer(config, param_specs);
    if (c_fpr->parsed()) return cmd_ablate_fpr(config);
    if (c_bias->parsed()) return cmd_ablate_bias(config);
    if (c_report->parsed()) return cmd_report(in_file, out);
    if (c_freq->parsed()) return cmd_token_freq(in_files, k, out);
  } catch (const std::exception& e) {
    std::cerr << "wm: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
