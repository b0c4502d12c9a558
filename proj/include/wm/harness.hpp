#pragma once

/**
 * Experiment orchestration and reporting: evasion grids over scheme x
 * attack, p-value curves, transfer matrices, FPR and bias ablations,
 * Pareto fronts, token-frequency reports, and prompt-set handling.
 *
 * Per-sample p-values are the unit of record; thresholded rates are
 * always derived from them, so re-thresholding at a new rho needs no
 * regeneration. Every operation is deterministic in the config's master
 * seed, including under parallel execution: work is assigned to fixed
 * slots and each slot derives its own seed.
 */

#include <wm/attacks.hpp>
#include <wm/corpus.hpp>
#include <wm/keygen.hpp>
#include <wm/lm.hpp>
#include <wm/quality.hpp>
#include <wm/rng.hpp>
#include <wm/types.hpp>
#include <wm/watermarks.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace wm::harness {

// ============================================================================
// Attack specs
// ============================================================================

enum class AttackType : std::uint8_t { Identity, Baseline, Paraphrase };

struct AttackSpec {
  std::string label;  // the spec string; also the report row label
  AttackType type = AttackType::Identity;
  attacks::BaselineKind baseline_kind = attacks::BaselineKind::Swap;
  double baseline_strength = 0.0;
  attacks::ParaphraserParams params;
  std::optional<std::uint64_t> tuning_seed;  // recorded by `wm tune`
};

inline AttackSpec identity_attack() {
  AttackSpec s;
  s.label = "identity";
  return s;
}

// Spec syntax, frozen:
//   identity
//   baseline:<kind>:<strength>        e.g. baseline:synonym:0.3
//   paraphrase:<params.json path>
inline AttackSpec parse_attack_spec(const std::string& spec) {
  AttackSpec out;
  out.label = spec;
  if (spec == "identity") return out;
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon);
  if (head == "baseline") {
    if (colon == std::string::npos) {
      throw std::invalid_argument("attack spec: baseline needs kind:strength");
    }
    auto rest = spec.substr(colon + 1);
    auto colon2 = rest.find(':');
    if (colon2 == std::string::npos) {
      throw std::invalid_argument("attack spec: baseline needs kind:strength");
    }
    out.type = AttackType::Baseline;
    out.baseline_kind = attacks::parse_baseline(rest.substr(0, colon2));
    out.baseline_strength = std::stod(rest.substr(colon2 + 1));
    if (!(out.baseline_strength >= 0.0 && out.baseline_strength <= 1.0)) {
      throw std::invalid_argument("attack spec: strength must lie in [0, 1]");
    }
    return out;
  }
  if (head == "paraphrase") {
    if (colon == std::string::npos) {
      throw std::invalid_argument("attack spec: paraphrase needs a file path");
    }
    std::string path = spec.substr(colon + 1);
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("attack spec: cannot open params file " + path);
    }
    nlohmann::json j = nlohmann::json::parse(in);
    out.type = AttackType::Paraphrase;
    out.params = attacks::paraphraser_from_json(j);
    if (j.contains("tuning_seed")) {
      out.tuning_seed = j.at("tuning_seed").get<std::uint64_t>();
    }
    return out;
  }
  throw std::invalid_argument("attack spec: unknown form \"" + spec + "\"");
}

inline TokenSeq apply_attack(const corpus::Bundle& bundle,
                             const lm::NGramModel& model,
                             const AttackSpec& spec, const TokenSeq& text,
                             std::uint64_t seed) {
  switch (spec.type) {
    case AttackType::Identity: {
      TokenSeq out = text;
      out.provenance = Provenance::Attacked;
      return out;
    }
    case AttackType::Baseline:
      return attacks::perturb_baseline(bundle, spec.baseline_kind,
                                       spec.baseline_strength, text, seed);
    case AttackType::Paraphrase:
      return attacks::paraphrase(bundle, spec.params, model, text, seed);
  }
  throw std::invalid_argument("attack spec: unknown enum value");
}

// ============================================================================
// Experiment config (key = value file format)
// ============================================================================

struct ExperimentConfig {
  std::vector<SchemeId> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  std::vector<AttackSpec> attacks{identity_attack()};
  std::string prompts = "eval";  // train | eval | path to JSONL
  std::vector<double> rho_list = {0.01, 0.025, 0.05, 0.075, 0.1};
  std::size_t samples = 200;
  std::size_t token_length = 256;
  std::size_t curve_step = 32;
  std::uint64_t master_seed = 1;
  std::string out_dir = "results";
  // Optional external judge endpoint; unused by the deterministic ops.
  std::string judge_host;
  int judge_port = 0;
  std::string judge_path = "/grade";
  int judge_timeout_ms = 5000;
};

inline void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.schemes.empty()) {
    throw std::invalid_argument("config: schemes must be non-empty");
  }
  if (cfg.attacks.empty()) {
    throw std::invalid_argument("config: attacks must be non-empty");
  }
  if (cfg.rho_list.empty()) {
    throw std::invalid_argument("config: rho_list must be non-empty");
  }
  for (double rho : cfg.rho_list) {
    if (!(rho > 0.0 && rho < 1.0)) {
      throw std::invalid_argument("config: rho values must lie in (0, 1)");
    }
  }
  if (cfg.samples < 1) {
    throw std::invalid_argument("config: samples must be >= 1");
  }
  if (cfg.token_length < 1) {
    throw std::invalid_argument("config: token_length must be >= 1");
  }
  if (cfg.curve_step < 1 || cfg.token_length < cfg.curve_step) {
    throw std::invalid_argument(
        "config: need curve_step >= 1 and token_length >= curve_step");
  }
  // Adaptive-vs-non-adaptive integrity: params tuned under this master
  // seed would share generation seeds with the provider's evaluation.
  for (const auto& a : cfg.attacks) {
    if (a.tuning_seed && *a.tuning_seed == cfg.master_seed) {
      throw std::invalid_argument(
          "config: attack \"" + a.label +
          "\" was tuned with the evaluation master seed; use disjoint seeds");
    }
  }
}

inline double primary_rho(const ExperimentConfig& cfg) {
  return cfg.rho_list.front();
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  bool saw_scheme = false, saw_attack = false, saw_rho = false;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key == "schemes") {
      if (!saw_scheme) cfg.schemes.clear();
      saw_scheme = true;
      for (const auto& name : detail::split(value, ',')) {
        cfg.schemes.push_back(parse_scheme(name));
      }
    } else if (key == "attack") {
      if (!saw_attack) cfg.attacks.clear();
      saw_attack = true;
      cfg.attacks.push_back(parse_attack_spec(value));
    } else if (key == "prompts") {
      cfg.prompts = value;
    } else if (key == "rho_list") {
      if (!saw_rho) cfg.rho_list.clear();
      saw_rho = true;
      for (const auto& r : detail::split(value, ',')) {
        cfg.rho_list.push_back(std::stod(r));
      }
    } else if (key == "samples") {
      cfg.samples = std::stoull(value);
    } else if (key == "token_length") {
      cfg.token_length = std::stoull(value);
    } else if (key == "curve_step") {
      cfg.curve_step = std::stoull(value);
    } else if (key == "master_seed") {
      cfg.master_seed = std::stoull(value);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "judge_host") {
      cfg.judge_host = value;
    } else if (key == "judge_port") {
      cfg.judge_port = std::stoi(value);
    } else if (key == "judge_path") {
      cfg.judge_path = value;
    } else if (key == "judge_timeout_ms") {
      cfg.judge_timeout_ms = std::stoi(value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key \"" + key + "\"");
    }
  }
  validate_experiment(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Canonical serialization: fixed key order, one key per line. Hashing this
// text identifies the config in reports.
inline std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "schemes = ";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
    out << (i ? "," : "") << scheme_name(cfg.schemes[i]);
  }
  out << "\n";
  for (const auto& a : cfg.attacks) out << "attack = " << a.label << "\n";
  out << "prompts = " << cfg.prompts << "\n";
  out << "rho_list = ";
  for (std::size_t i = 0; i < cfg.rho_list.size(); ++i) {
    out << (i ? "," : "") << detail::fmt_double(cfg.rho_list[i]);
  }
  out << "\n";
  out << "samples = " << cfg.samples << "\n";
  out << "token_length = " << cfg.token_length << "\n";
  out << "curve_step = " << cfg.curve_step << "\n";
  out << "master_seed = " << cfg.master_seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  if (!cfg.judge_host.empty()) {
    out << "judge_host = " << cfg.judge_host << "\n";
    out << "judge_port = " << cfg.judge_port << "\n";
    out << "judge_path = " << cfg.judge_path << "\n";
    out << "judge_timeout_ms = " << cfg.judge_timeout_ms << "\n";
  }
  return out.str();
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  std::string text = config_to_text(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

// ============================================================================
// Prompt sets
// ============================================================================

inline std::vector<TokenSeq> load_prompts_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("prompts: cannot open " + path);
  std::vector<TokenSeq> out;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    TokenSeq seq;
    seq.tokens = j.at("tokens").get<std::vector<Token>>();
    seq.provenance = j.contains("provenance")
                         ? parse_provenance(j.at("provenance").get<std::string>())
                         : Provenance::Prompt;
    out.push_back(std::move(seq));
  }
  return out;
}

inline void save_texts_jsonl(const std::string& path,
                             const std::vector<TokenSeq>& texts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("texts: cannot open " + path + " for write");
  for (const auto& t : texts) {
    nlohmann::json j{{"tokens", t.tokens},
                     {"provenance", provenance_name(t.provenance)}};
    out << j.dump() << "\n";
  }
}

// Full bundled or file-backed prompt list, untrimmed.
inline std::vector<TokenSeq> resolve_prompts(const std::string& source) {
  if (source == "train") return corpus::bundled().train_prompts;
  if (source == "eval") return corpus::bundled().eval_prompts;
  return load_prompts_jsonl(source);
}

// Deterministic shuffled selection of `count` prompts.
inline std::vector<TokenSeq> prompt_set(const std::string& source,
                                        std::size_t count,
                                        std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("prompt_set: count must be >= 1");
  std::vector<TokenSeq> all = resolve_prompts(source);
  if (count > all.size()) {
    throw std::invalid_argument("prompt_set: count " + std::to_string(count) +
                                " exceeds available " +
                                std::to_string(all.size()));
  }
  rng::SplitMix64 g(rng::derive_seed(seed, "harness/prompt-shuffle"));
  for (std::size_t i = all.size() - 1; i > 0; --i) {
    std::swap(all[i], all[g.below(i + 1)]);
  }
  all.resize(count);
  return all;
}

inline void ensure_disjoint_prompts(const std::vector<TokenSeq>& a,
                                    const std::vector<TokenSeq>& b) {
  std::set<std::vector<Token>> seen;
  for (const auto& p : a) seen.insert(p.tokens);
  for (const auto& p : b) {
    if (seen.count(p.tokens)) {
      throw std::invalid_argument(
          "prompt sets overlap; train and eval must be disjoint");
    }
  }
}

// ============================================================================
// Deterministic parallelism
// ============================================================================

inline std::size_t thread_budget() {
  if (const char* env = std::getenv("WM_THREADS")) {
    long v = std::atol(env);
    if (v >= 1) return std::size_t(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1;
}

// Runs fn(0..n-1); each index writes only its own output slot, so results
// are identical for any thread count.
template <class Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
  std::size_t workers = std::min(thread_budget(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// ============================================================================
// Evasion experiment
// ============================================================================

struct CellResult {
  SchemeId scheme = SchemeId::DistShift;
  std::string attack;
  std::vector<double> p_values;       // per sample, the unit of record
  std::vector<std::size_t> lengths;   // attacked text lengths
  double evasion_rate = 0.0;          // at the primary rho
  double mean_p = 0.0;
  double median_p = 0.0;
  double mean_quality = 0.0;
  std::array<double, 4> mean_overlap{};  // ngram_overlap n = 1..4
  double mean_edit_ratio = 0.0;
  double mean_ppl = 0.0;       // over non-empty attacked texts
  std::size_t ppl_count = 0;   // how many texts entered mean_ppl
  std::size_t samples = 0;
};

struct EvasionReport {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  double rho = 0.01;
  std::vector<CellResult> cells;  // scheme-major, attack-minor
};

namespace detail {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double evasion_at(const std::vector<double>& p_values, double rho) {
  if (p_values.empty()) return 0.0;
  std::size_t evaded = 0;
  for (double p : p_values) evaded += p >= rho;
  return double(evaded) / double(p_values.size());
}

inline WatermarkKey provider_key(const ExperimentConfig& cfg,
                                 std::size_t scheme_index) {
  return keygen(cfg.schemes[scheme_index],
                rng::derive_seed(cfg.master_seed, "harness/provider-key") +
                    scheme_index);
}

// Watermarked evaluation texts for one scheme; sample i is deterministic
// in (master_seed, tag, scheme_index, i).
inline std::vector<TokenSeq> scheme_texts(const ExperimentConfig& cfg,
                                          const lm::NGramModel& model,
                                          const WatermarkKey& key,
                                          std::size_t scheme_index,
                                          const std::vector<TokenSeq>& prompts,
                                          std::string_view tag) {
  std::uint64_t base = rng::derive_seed(cfg.master_seed, tag) + scheme_index;
  std::vector<TokenSeq> texts(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    rng::SplitMix64 g(rng::derive_seed(base, i));
    const TokenSeq& prompt = prompts[g.below(prompts.size())];
    texts[i] = marks::generate_watermarked(model, key, Message{}, prompt,
                                           cfg.token_length, g.next_u64());
  }
  return texts;
}

}  // namespace detail

inline EvasionReport run_evasion_experiment(const ExperimentConfig& cfg,
                                            const lm::NGramModel& model) {
  validate_experiment(cfg);
  const auto& bundle = corpus::bundled();
  auto prompts = resolve_prompts(cfg.prompts);
  if (prompts.empty()) throw std::invalid_argument("config: empty prompt set");
  auto canon_cfg = attacks::default_quality_config();

  EvasionReport report;
  report.config_hash = config_hash(cfg);
  report.master_seed = cfg.master_seed;
  report.rho = primary_rho(cfg);
  report.cells.resize(cfg.schemes.size() * cfg.attacks.size());

  parallel_for(cfg.schemes.size(), [&](std::size_t si) {
    WatermarkKey key = detail::provider_key(cfg, si);
    auto texts = detail::scheme_texts(cfg, model, key, si, prompts,
                                      "harness/evasion-gen");
    std::uint64_t attack_base =
        rng::derive_seed(cfg.master_seed, "harness/evasion-attack") + si;
    for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
      const AttackSpec& spec = cfg.attacks[ai];
      CellResult cell;
      cell.scheme = cfg.schemes[si];
      cell.attack = spec.label;
      cell.samples = cfg.samples;
      std::vector<double> qs, overlaps[4], edits;
      for (std::size_t i = 0; i < cfg.samples; ++i) {
        TokenSeq attacked =
            apply_attack(bundle, model, spec, texts[i],
                         rng::derive_seed(attack_base, ai) + i);
        auto res = marks::verify(key.scheme, key, attacked,
                                 model.vocab().size());
        cell.p_values.push_back(res.p_value);
        cell.lengths.push_back(attacked.tokens.size());
        qs.push_back(quality::quality_q(attacked, texts[i], canon_cfg));
        for (int n = 1; n <= 4; ++n) {
          overlaps[n - 1].push_back(
              quality::ngram_overlap(attacked, texts[i], std::size_t(n)));
        }
        edits.push_back(quality::edit_distance_ratio(attacked, texts[i]));
        if (!attacked.tokens.empty()) {
          cell.mean_ppl += lm::perplexity(model, attacked);
          ++cell.ppl_count;
        }
      }
      cell.evasion_rate = detail::evasion_at(cell.p_values, report.rho);
      cell.mean_p = detail::mean(cell.p_values);
      cell.median_p = detail::median(cell.p_values);
      cell.mean_quality = detail::mean(qs);
      for (int n = 0; n < 4; ++n) cell.mean_overlap[n] = detail::mean(overlaps[n]);
      cell.mean_edit_ratio = detail::mean(edits);
      if (cell.ppl_count) cell.mean_ppl /= double(cell.ppl_count);
      report.cells[si * cfg.attacks.size() + ai] = std::move(cell);
    }
  });
  return report;
}

inline nlohmann::json report_to_json(const EvasionReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"scheme", scheme_name(c.scheme)},
                     {"attack", c.attack},
                     {"samples", c.samples},
                     {"evasion_rate", c.evasion_rate},
                     {"mean_p", c.mean_p},
                     {"median_p", c.median_p},
                     {"mean_quality", c.mean_quality},
                     {"overlap1", c.mean_overlap[0]},
                     {"overlap2", c.mean_overlap[1]},
                     {"overlap3", c.mean_overlap[2]},
                     {"overlap4", c.mean_overlap[3]},
                     {"edit_ratio", c.mean_edit_ratio},
                     {"mean_ppl", c.mean_ppl},
                     {"ppl_count", c.ppl_count},
                     {"p_values", c.p_values},
                     {"lengths", c.lengths}});
  }
  return nlohmann::json{{"config_hash", r.config_hash},
                        {"master_seed", r.master_seed},
                        {"rho", r.rho},
                        {"cells", cells}};
}

inline EvasionReport report_from_json(const nlohmann::json& j) {
  EvasionReport r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
  r.rho = j.at("rho").get<double>();
  for (const auto& cj : j.at("cells")) {
    CellResult c;
    c.scheme = parse_scheme(cj.at("scheme").get<std::string>());
    c.attack = cj.at("attack").get<std::string>();
    c.samples = cj.at("samples").get<std::size_t>();
    c.evasion_rate = cj.at("evasion_rate").get<double>();
    c.mean_p = cj.at("mean_p").get<double>();
    c.median_p = cj.at("median_p").get<double>();
    c.mean_quality = cj.at("mean_quality").get<double>();
    for (int n = 0; n < 4; ++n) {
      c.mean_overlap[n] =
          cj.at("overlap" + std::to_string(n + 1)).get<double>();
    }
    c.mean_edit_ratio = cj.at("edit_ratio").get<double>();
    c.mean_ppl = cj.at("mean_ppl").get<double>();
    c.ppl_count = cj.at("ppl_count").get<std::size_t>();
    c.p_values = cj.at("p_values").get<std::vector<double>>();
    c.lengths = cj.at("lengths").get<std::vector<std::size_t>>();
    r.cells.push_back(std::move(c));
  }
  return r;
}

// Column order frozen; documented in the README.
inline constexpr const char* kReportCsvHeader =
    "scheme,attack,samples,evasion_rate,mean_p,median_p,mean_quality,"
    "overlap1,overlap2,overlap3,overlap4,edit_ratio,mean_ppl,mean_length";

inline std::string report_to_csv(const EvasionReport& r) {
  std::ostringstream out;
  out << kReportCsvHeader << "\n";
  for (const auto& c : r.cells) {
    double mean_len = 0.0;
    for (std::size_t l : c.lengths) mean_len += double(l);
    if (!c.lengths.empty()) mean_len /= double(c.lengths.size());
    out << scheme_name(c.scheme) << "," << c.attack << "," << c.samples << ","
        << detail::fmt_short(c.evasion_rate) << ","
        << detail::fmt_short(c.mean_p) << "," << detail::fmt_short(c.median_p)
        << "," << detail::fmt_short(c.mean_quality);
    for (int n = 0; n < 4; ++n) {
      out << "," << detail::fmt_short(c.mean_overlap[n]);
    }
    out << "," << detail::fmt_short(c.mean_edit_ratio) << ","
        << detail::fmt_short(c.mean_ppl) << "," << detail::fmt_short(mean_len)
        << "\n";
  }
  return out.str();
}

// ============================================================================
// P-value curves
// ============================================================================

struct CurvePoint {
  std::size_t length = 0;
  double median_p = 1.0;
};

struct SchemeCurves {
  SchemeId scheme = SchemeId::DistShift;
  std::vector<CurvePoint> median_curve;  // watermarked, prefix lengths
  std::vector<double> wm_full_p;         // full-length p per sample
  std::vector<double> null_full_p;       // plain texts, fresh key per text
};

inline std::vector<SchemeCurves> pvalue_curves(const ExperimentConfig& cfg,
                                               const lm::NGramModel& model) {
  validate_experiment(cfg);
  auto prompts = resolve_prompts(cfg.prompts);
  if (prompts.empty()) throw std::invalid_argument("config: empty prompt set");
  std::vector<SchemeCurves> out(cfg.schemes.size());

  parallel_for(cfg.schemes.size(), [&](std::size_t si) {
    SchemeCurves curves;
    curves.scheme = cfg.schemes[si];
    WatermarkKey key = detail::provider_key(cfg, si);
    auto texts = detail::scheme_texts(cfg, model, key, si, prompts,
                                      "harness/curve-gen");
    std::vector<std::vector<double>> per_length;
    for (std::size_t len = cfg.curve_step; len <= cfg.token_length;
         len += cfg.curve_step) {
      per_length.emplace_back();
      per_length.back().reserve(cfg.samples);
    }
    for (const auto& text : texts) {
      for (std::size_t li = 0; li < per_length.size(); ++li) {
        std::size_t len =
            std::min((li + 1) * cfg.curve_step, text.tokens.size());
        TokenSeq prefix;
        prefix.tokens.assign(text.tokens.begin(), text.tokens.begin() + len);
        auto res =
            marks::verify(key.scheme, key, prefix, model.vocab().size());
        per_length[li].push_back(res.p_value);
      }
      curves.wm_full_p.push_back(per_length.back().back());
    }
    for (std::size_t li = 0; li < per_length.size(); ++li) {
      curves.median_curve.push_back(
          {(li + 1) * cfg.curve_step, detail::median(per_length[li])});
    }
    // Null calibration texts: fresh key per text, matching deployment
    // where unrelated text meets many candidate keys.
    std::uint64_t base =
        rng::derive_seed(cfg.master_seed, "harness/curve-null") + si;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      rng::SplitMix64 g(rng::derive_seed(base, i));
      lm::GenerateOptions opts;
      opts.max_tokens = cfg.token_length;
      opts.seed = g.next_u64();
      TokenSeq text =
          lm::generate(model, prompts[g.below(prompts.size())], opts);
      WatermarkKey fresh = keygen(curves.scheme, g.next_u64());
      auto res =
          marks::verify(curves.scheme, fresh, text, model.vocab().size());
      curves.null_full_p.push_back(res.p_value);
    }
    out[si] = std::move(curves);
  });
  return out;
}

inline nlohmann::json curves_to_json(const std::vector<SchemeCurves>& all) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : all) {
    nlohmann::json median = nlohmann::json::array();
    for (const auto& pt : c.median_curve) {
      median.push_back({{"length", pt.length}, {"median_p", pt.median_p}});
    }
    out.push_back({{"scheme", scheme_name(c.scheme)},
                   {"median_curve", median},
                   {"wm_full_p", c.wm_full_p},
                   {"null_full_p", c.null_full_p}});
  }
  return out;
}

inline constexpr const char* kMedianCsvHeader = "scheme,length,median_p";

inline std::string curves_median_csv(const std::vector<SchemeCurves>& all) {
  std::ostringstream out;
  out << kMedianCsvHeader << "\n";
  for (const auto& c : all) {
    for (const auto& pt : c.median_curve) {
      out << scheme_name(c.scheme) << "," << pt.length << ","
          << detail::fmt_short(pt.median_p) << "\n";
    }
  }
  return out.str();
}

inline constexpr const char* kCdfCsvHeader = "scheme,kind,rank_fraction,p";

inline std::string curves_cdf_csv(const std::vector<SchemeCurves>& all) {
  std::ostringstream out;
  out << kCdfCsvHeader << "\n";
  auto emit = [&](SchemeId scheme, const char* kind, std::vector<double> p) {
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
      out << scheme_name(scheme) << "," << kind << ","
          << detail::fmt_short(double(i + 1) / double(p.size())) << ","
          << detail::fmt_short(p[i]) << "\n";
    }
  };
  for (const auto& c : all) {
    emit(c.scheme, "watermarked", c.wm_full_p);
    emit(c.scheme, "null", c.null_full_p);
  }
  return out.str();
}

// ============================================================================
// Transfer matrix
// ============================================================================

struct TransferCell {
  double evasion = 0.0;
  double quality = 0.0;
};

struct TransferMatrix {
  std::vector<std::string> rows;  // training labels, e.g. schemes or "all"
  std::vector<SchemeId> cols;     // test schemes
  std::vector<std::vector<TransferCell>> cells;  // [row][col]
};

inline TransferMatrix transfer_matrix(
    const ExperimentConfig& cfg, const lm::NGramModel& model,
    const std::vector<std::pair<std::string, attacks::ParaphraserParams>>&
        rows) {
  validate_experiment(cfg);
  if (rows.empty()) {
    throw std::invalid_argument("transfer: need at least one tuned row");
  }
  auto prompts = resolve_prompts(cfg.prompts);
  if (prompts.empty()) throw std::invalid_argument("config: empty prompt set");
  const auto& bundle = corpus::bundled();
  auto canon_cfg = attacks::default_quality_config();
  double rho = primary_rho(cfg);

  TransferMatrix m;
  m.cols = cfg.schemes;
  for (const auto& [label, params] : rows) {
    (void)params;
    m.rows.push_back(label);
  }
  m.cells.assign(rows.size(), std::vector<TransferCell>(cfg.schemes.size()));

  parallel_for(cfg.schemes.size(), [&](std::size_t si) {
    WatermarkKey key = detail::provider_key(cfg, si);
    auto texts = detail::scheme_texts(cfg, model, key, si, prompts,
                                      "harness/transfer-gen");
    std::uint64_t attack_base =
        rng::derive_seed(cfg.master_seed, "harness/transfer-attack") + si;
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
      std::vector<double> ps, qs;
      for (std::size_t i = 0; i < cfg.samples; ++i) {
        // Shared per-sample seeds across rows: every row's params face
        // identical randomness (common random numbers).
        TokenSeq attacked =
            attacks::paraphrase(bundle, rows[ri].second, model, texts[i],
                                rng::derive_seed(attack_base, i));
        auto res = marks::verify(key.scheme, key, attacked,
                                 model.vocab().size());
        ps.push_back(res.p_value);
        qs.push_back(quality::quality_q(attacked, texts[i], canon_cfg));
      }
      m.cells[ri][si] = {detail::evasion_at(ps, rho), detail::mean(qs)};
    }
  });
  return m;
}

inline nlohmann::json transfer_to_json(const TransferMatrix& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (SchemeId s : m.cols) cols.push_back(scheme_name(s));
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t ri = 0; ri < m.rows.size(); ++ri) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : m.cells[ri]) {
      cells.push_back({{"evasion", c.evasion}, {"quality", c.quality}});
    }
    rows.push_back({{"train", m.rows[ri]}, {"cells", cells}});
  }
  return nlohmann::json{{"cols", cols}, {"rows", rows}};
}

inline std::string transfer_to_csv(const TransferMatrix& m) {
  std::ostringstream out;
  out << "train";
  for (SchemeId s : m.cols) {
    out << "," << scheme_name(s) << "_evasion," << scheme_name(s)
        << "_quality";
  }
  out << "\n";
  for (std::size_t ri = 0; ri < m.rows.size(); ++ri) {
    out << m.rows[ri];
    for (const auto& c : m.cells[ri]) {
      out << "," << detail::fmt_short(c.evasion) << ","
          << detail::fmt_short(c.quality);
    }
    out << "\n";
  }
  return out.str();
}

// ============================================================================
// FPR ablation
// ============================================================================

inline constexpr std::array<double, 5> kFprRhos = {0.01, 0.025, 0.05, 0.075,
                                                   0.1};

struct FprRow {
  SchemeId scheme = SchemeId::DistShift;
  std::string attack;
  std::vector<double> evasion;  // one per rho
};

struct FprTable {
  std::vector<double> rhos;
  std::vector<FprRow> rows;
};

// Pure re-thresholding of stored p-values.
inline FprTable ablation_fpr(const EvasionReport& report,
                             const std::vector<double>& rhos) {
  FprTable t;
  t.rhos = rhos;
  for (const auto& c : report.cells) {
    FprRow row;
    row.scheme = c.scheme;
    row.attack = c.attack;
    for (double rho : rhos) {
      row.evasion.push_back(detail::evasion_at(c.p_values, rho));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline FprTable ablation_fpr(const ExperimentConfig& cfg,
                             const lm::NGramModel& model) {
  return ablation_fpr(run_evasion_experiment(cfg, model),
                      {kFprRhos.begin(), kFprRhos.end()});
}

inline nlohmann::json fpr_to_json(const FprTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"scheme", scheme_name(r.scheme)},
                    {"attack", r.attack},
                    {"evasion", r.evasion}});
  }
  return nlohmann::json{{"rhos", t.rhos}, {"rows", rows}};
}

inline std::string fpr_to_csv(const FprTable& t) {
  std::ostringstream out;
  out << "scheme,attack";
  for (double rho : t.rhos) out << ",rho=" << detail::fmt_short(rho);
  out << "\n";
  for (const auto& r : t.rows) {
    out << scheme_name(r.scheme) << "," << r.attack;
    for (double e : r.evasion) out << "," << detail::fmt_short(e);
    out << "\n";
  }
  return out.str();
}

// ============================================================================
// Bias ablation (DistShift beta sweep)
// ============================================================================

inline constexpr std::array<double, 4> kBiasBetas = {1.0, 2.0, 4.0, 8.0};

struct BiasCell {
  std::string attack;
  double evasion = 0.0;
  double quality = 0.0;
};

struct BiasRow {
  double beta = 0.0;
  double wm_quality = 0.0;  // watermarked vs plain twin generation
  std::vector<BiasCell> cells;
};

inline std::vector<BiasRow> ablation_bias(const ExperimentConfig& cfg,
                                          const lm::NGramModel& model) {
  validate_experiment(cfg);
  auto prompts = resolve_prompts(cfg.prompts);
  if (prompts.empty()) throw std::invalid_argument("config: empty prompt set");
  const auto& bundle = corpus::bundled();
  auto canon_cfg = attacks::default_quality_config();
  double rho = primary_rho(cfg);
  std::vector<BiasRow> out(kBiasBetas.size());

  parallel_for(kBiasBetas.size(), [&](std::size_t bi) {
    BiasRow row;
    row.beta = kBiasBetas[bi];
    KeyOverrides ov;
    ov.bias = row.beta;
    WatermarkKey key = keygen(
        SchemeId::DistShift,
        rng::derive_seed(cfg.master_seed, "harness/bias-key") + bi, ov);
    std::uint64_t base =
        rng::derive_seed(cfg.master_seed, "harness/bias-gen") + bi;
    std::vector<TokenSeq> texts(cfg.samples);
    std::vector<double> twin_q(cfg.samples);
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      rng::SplitMix64 g(rng::derive_seed(base, i));
      const TokenSeq& prompt = prompts[g.below(prompts.size())];
      std::uint64_t gen_seed = g.next_u64();
      texts[i] = marks::generate_watermarked(model, key, Message{}, prompt,
                                             cfg.token_length, gen_seed);
      lm::GenerateOptions opts;
      opts.max_tokens = cfg.token_length;
      opts.seed = gen_seed;  // same sampling stream, no watermark
      TokenSeq twin = lm::generate(model, prompt, opts);
      twin_q[i] = quality::quality_q(texts[i], twin, canon_cfg);
    }
    row.wm_quality = detail::mean(twin_q);
    std::uint64_t attack_base =
        rng::derive_seed(cfg.master_seed, "harness/bias-attack") + bi;
    for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
      std::vector<double> ps, qs;
      for (std::size_t i = 0; i < cfg.samples; ++i) {
        TokenSeq attacked =
            apply_attack(bundle, model, cfg.attacks[ai], texts[i],
                         rng::derive_seed(attack_base, ai) + i);
        auto res = marks::verify(key.scheme, key, attacked,
                                 model.vocab().size());
        ps.push_back(res.p_value);
        qs.push_back(quality::quality_q(attacked, texts[i], canon_cfg));
      }
      row.cells.push_back({cfg.attacks[ai].label, detail::evasion_at(ps, rho),
                           detail::mean(qs)});
    }
    out[bi] = std::move(row);
  });
  return out;
}

inline nlohmann::json bias_to_json(const std::vector<BiasRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
      cells.push_back({{"attack", c.attack},
                       {"evasion", c.evasion},
                       {"quality", c.quality}});
    }
    out.push_back({{"beta", r.beta},
                   {"wm_quality", r.wm_quality},
                   {"cells", cells}});
  }
  return out;
}

inline std::string bias_to_csv(const std::vector<BiasRow>& rows) {
  std::ostringstream out;
  out << "beta,wm_quality,attack,evasion,quality\n";
  for (const auto& r : rows) {
    for (const auto& c : r.cells) {
      out << detail::fmt_short(r.beta) << "," << detail::fmt_short(r.wm_quality)
          << "," << c.attack << "," << detail::fmt_short(c.evasion) << ","
          << detail::fmt_short(c.quality) << "\n";
    }
  }
  return out.str();
}

// ============================================================================
// Pareto front
// ============================================================================

// Maximal points under componentwise >=; exact duplicates are retained.
// Output sorted by evasion ascending, input order breaking ties.
inline std::vector<std::pair<double, double>> pareto_front(
    const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (j == i) continue;
      dominated = points[j].first >= points[i].first &&
                  points[j].second >= points[i].second &&
                  (points[j].first > points[i].first ||
                   points[j].second > points[i].second);
    }
    if (!dominated) out.push_back(points[i]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

// ============================================================================
// Token frequency report
// ============================================================================

// Top-k (token, relative frequency), frequency-sorted, ties by token id.
inline std::vector<std::pair<Token, double>> token_frequency_report(
    const std::vector<TokenSeq>& texts, std::size_t k) {
  if (k < 1) throw std::invalid_argument("token_frequency_report: k >= 1");
  std::map<Token, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& t : texts) {
    for (Token tok : t.tokens) {
      ++counts[tok];
      ++total;
    }
  }
  std::vector<std::pair<Token, std::uint64_t>> sorted(counts.begin(),
                                                      counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (sorted.size() > k) sorted.resize(k);
  std::vector<std::pair<Token, double>> out;
  for (const auto& [tok, n] : sorted) {
    out.emplace_back(tok, double(n) / double(total));
  }
  return out;
}

inline std::string token_frequency_csv(
    const std::vector<std::pair<std::string,
                                std::vector<std::pair<Token, double>>>>&
        corpora) {
  std::ostringstream out;
  out << "corpus,rank,token,surface,frequency\n";
  const auto& vocab = corpus::bundled().vocab;
  for (const auto& [name, rows] : corpora) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << name << "," << (i + 1) << "," << rows[i].first << ","
          << vocab.surface(rows[i].first) << ","
          << detail::fmt_short(rows[i].second) << "\n";
    }
  }
  return out.str();
}

// ============================================================================
// File helpers
// ============================================================================

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for write");
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace wm::harness
