#pragma once

/**
 * Attacks on watermarked text: baseline per-token perturbations, the
 * parameterized token-level paraphraser, the attack-objective estimator,
 * the (1+lambda) evolutionary tuner, preference-dataset curation, and
 * best-of-N success curves.
 *
 * The attacker never sees the provider's key. Training and evaluation run
 * against surrogate keys the attacker generates itself; transfer to unseen
 * keys comes from the schemes' key-independent structure.
 */

#include <wm/corpus.hpp>
#include <wm/keygen.hpp>
#include <wm/lm.hpp>
#include <wm/quality.hpp>
#include <wm/rng.hpp>
#include <wm/types.hpp>
#include <wm/watermarks.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wm::attacks {

// Q(attacked, original) in [0, 1].
using QualityFn = std::function<double(const TokenSeq&, const TokenSeq&)>;

inline quality::QualityConfig default_quality_config() {
  const auto& b = corpus::bundled();
  quality::QualityConfig cfg;
  cfg.canon = quality::CanonTable(b.synonym_class, b.class_members);
  return cfg;
}

inline QualityFn default_quality_fn() {
  auto cfg = std::make_shared<quality::QualityConfig>(default_quality_config());
  return [cfg](const TokenSeq& attacked, const TokenSeq& original) {
    return quality::quality_q(attacked, original, *cfg);
  };
}

// ============================================================================
// Baseline perturbations
// ============================================================================

enum class BaselineKind : std::uint8_t {
  Swap,
  Synonym,
  Typo,
  Contraction,
  Lowercase,
  Delete,
};

inline const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Swap: return "swap";
    case BaselineKind::Synonym: return "synonym";
    case BaselineKind::Typo: return "typo";
    case BaselineKind::Contraction: return "contraction";
    case BaselineKind::Lowercase: return "lowercase";
    case BaselineKind::Delete: return "delete";
  }
  throw std::invalid_argument("baseline kind: unknown enum value");
}

inline BaselineKind parse_baseline(const std::string& name) {
  for (BaselineKind k :
       {BaselineKind::Swap, BaselineKind::Synonym, BaselineKind::Typo,
        BaselineKind::Contraction, BaselineKind::Lowercase,
        BaselineKind::Delete}) {
    if (name == baseline_name(k)) return k;
  }
  throw std::invalid_argument("baseline kind: unknown name: " + name);
}

inline constexpr BaselineKind kAllBaselines[] = {
    BaselineKind::Swap,       BaselineKind::Synonym,
    BaselineKind::Typo,       BaselineKind::Contraction,
    BaselineKind::Lowercase,  BaselineKind::Delete,
};

namespace detail {

// Uniform synonym replacement among the other members of the class;
// identity for singleton classes.
inline Token synonym_swap(const corpus::Bundle& bundle, Token t,
                          rng::SplitMix64& g) {
  if (t >= bundle.synonym_class.size()) return t;
  const auto& members = bundle.class_members[bundle.synonym_class[t]];
  if (members.size() < 2) return t;
  std::size_t pick = g.below(members.size() - 1);
  Token other = members[pick];
  if (other == t) other = members[members.size() - 1];
  return other;
}

}  // namespace detail

// Independent per-token edits at rate `strength`. Deterministic in seed.
//
// swap: exchange with the next token; synonym: thesaurus substitution;
// typo: replace by the unknown token (a misspelled word leaves the
// vocabulary); contraction: fuse a matching two-token pair into its
// contraction; lowercase: map the surface to lowercase (identity on an
// all-lowercase vocabulary); delete: drop the token.
inline TokenSeq perturb_baseline(const corpus::Bundle& bundle,
                                 BaselineKind kind, double strength,
                                 const TokenSeq& text, std::uint64_t seed) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw std::invalid_argument("strength: must lie in [0, 1]");
  }
  rng::SplitMix64 g(rng::derive_seed(seed, "attack/baseline"));
  TokenSeq out;
  out.provenance = Provenance::Attacked;
  const auto& in = text.tokens;
  for (std::size_t i = 0; i < in.size(); ++i) {
    bool hit = strength > 0.0 && g.uniform() < strength;
    switch (kind) {
      case BaselineKind::Swap:
        if (hit && i + 1 < in.size()) {
          out.tokens.push_back(in[i + 1]);
          out.tokens.push_back(in[i]);
          ++i;
        } else {
          out.tokens.push_back(in[i]);
        }
        break;
      case BaselineKind::Synonym:
        out.tokens.push_back(hit ? detail::synonym_swap(bundle, in[i], g)
                                 : in[i]);
        break;
      case BaselineKind::Typo:
        out.tokens.push_back(hit ? bundle.vocab.unknown_id() : in[i]);
        break;
      case BaselineKind::Contraction: {
        bool fused = false;
        if (hit && i + 1 < in.size()) {
          for (const auto& [pair, fusion] : bundle.contractions) {
            if (pair.first == in[i] && pair.second == in[i + 1]) {
              out.tokens.push_back(fusion);
              ++i;
              fused = true;
              break;
            }
          }
        }
        if (!fused) out.tokens.push_back(in[i]);
        break;
      }
      case BaselineKind::Lowercase:
        if (hit) {
          std::string s = bundle.vocab.surface(in[i]);
          for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
          Token t = bundle.vocab.id_of(s);
          out.tokens.push_back(t == bundle.vocab.unknown_id() ? in[i] : t);
        } else {
          out.tokens.push_back(in[i]);
        }
        break;
      case BaselineKind::Delete:
        if (!hit) out.tokens.push_back(in[i]);
        break;
    }
  }
  return out;
}

// ============================================================================
// Parameterized paraphraser
// ============================================================================

struct ParaphraserParams {
  double p_synonym = 0.1;
  double p_delete = 0.1;
  double p_insert = 0.1;
  double p_swap_adjacent = 0.1;
  double p_resample = 0.1;
  double resample_temperature = 1.0;
  std::uint32_t resample_context = 3;

  bool operator==(const ParaphraserParams&) const = default;
};

inline void validate_paraphraser(const ParaphraserParams& p) {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string(name) + ": must lie in [0, 1]");
    }
  };
  rate(p.p_synonym, "p_synonym");
  rate(p.p_delete, "p_delete");
  rate(p.p_insert, "p_insert");
  rate(p.p_swap_adjacent, "p_swap_adjacent");
  rate(p.p_resample, "p_resample");
  if (!(p.resample_temperature > 0.0)) {
    throw std::invalid_argument("resample_temperature: must be > 0");
  }
  if (p.resample_context < 1) {
    throw std::invalid_argument("resample_context: must be >= 1");
  }
}

inline nlohmann::json paraphraser_to_json(const ParaphraserParams& p) {
  return nlohmann::json{{"p_synonym", p.p_synonym},
                        {"p_delete", p.p_delete},
                        {"p_insert", p.p_insert},
                        {"p_swap_adjacent", p.p_swap_adjacent},
                        {"p_resample", p.p_resample},
                        {"resample_temperature", p.resample_temperature},
                        {"resample_context", p.resample_context}};
}

inline ParaphraserParams paraphraser_from_json(const nlohmann::json& j) {
  ParaphraserParams p;
  p.p_synonym = j.at("p_synonym").get<double>();
  p.p_delete = j.at("p_delete").get<double>();
  p.p_insert = j.at("p_insert").get<double>();
  p.p_swap_adjacent = j.at("p_swap_adjacent").get<double>();
  p.p_resample = j.at("p_resample").get<double>();
  p.resample_temperature = j.at("resample_temperature").get<double>();
  p.resample_context = j.at("resample_context").get<std::uint32_t>();
  validate_paraphraser(p);
  return p;
}

// Single left-to-right pass. Per position the edits are tried in a fixed
// order (synonym, delete, insert, swap, resample) with one independent
// draw each; the first hit applies and the rest are skipped. Inserted and
// resampled tokens come from the model conditioned on the last
// resample_context emitted tokens at resample_temperature.
inline TokenSeq paraphrase(const corpus::Bundle& bundle,
                           const ParaphraserParams& params,
                           const lm::NGramModel& model, const TokenSeq& text,
                           std::uint64_t seed) {
  validate_paraphraser(params);
  if (model.vocab().size() != bundle.vocab.size()) {
    throw std::invalid_argument("paraphrase: model and bundle vocab differ");
  }
  rng::SplitMix64 g(rng::derive_seed(seed, "attack/paraphrase"));
  TokenSeq out;
  out.provenance = Provenance::Attacked;
  std::vector<double> dist;

  auto lm_sample = [&]() {
    std::size_t take =
        std::min<std::size_t>(params.resample_context, out.tokens.size());
    std::span<const Token> ctx(out.tokens.data() + out.tokens.size() - take,
                               take);
    model.next_dist(ctx, dist);
    lm::detail::apply_temperature(dist, params.resample_temperature);
    return Token(lm::detail::sample_index(dist, g.uniform()));
  };

  const auto& in = text.tokens;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (params.p_synonym > 0.0 && g.uniform() < params.p_synonym) {
      out.tokens.push_back(detail::synonym_swap(bundle, in[i], g));
      continue;
    }
    if (params.p_delete > 0.0 && g.uniform() < params.p_delete) {
      continue;
    }
    if (params.p_insert > 0.0 && g.uniform() < params.p_insert) {
      out.tokens.push_back(lm_sample());
      out.tokens.push_back(in[i]);
      continue;
    }
    if (params.p_swap_adjacent > 0.0 && i + 1 < in.size() &&
        g.uniform() < params.p_swap_adjacent) {
      out.tokens.push_back(in[i + 1]);
      out.tokens.push_back(in[i]);
      ++i;
      continue;
    }
    if (params.p_resample > 0.0 && g.uniform() < params.p_resample) {
      out.tokens.push_back(lm_sample());
      continue;
    }
    out.tokens.push_back(in[i]);
  }
  return out;
}

// ============================================================================
// Attack objective (evasion + quality)
// ============================================================================

struct TunerConfig {
  std::vector<SchemeId> schemes = {SchemeId::DistShift};
  std::size_t seed_pool = 16;      // surrogate keys per scheme
  std::vector<TokenSeq> queries;   // prompts for watermarked generations
  std::uint32_t restarts = 1;
  std::uint32_t iterations = 50;
  std::uint32_t lambda = 8;
  double rho = 0.01;
  double delta = 0.6;
  std::size_t max_tokens = 256;
  std::uint64_t message_space = 1;
};

inline void validate_tuner(const TunerConfig& cfg) {
  if (cfg.schemes.empty()) {
    throw std::invalid_argument("schemes: must be non-empty");
  }
  if (cfg.seed_pool == 0) {
    throw std::invalid_argument("seed_pool: must be non-empty");
  }
  if (cfg.queries.empty()) {
    throw std::invalid_argument("queries: must be non-empty");
  }
  if (cfg.iterations < 1) {
    throw std::invalid_argument("iterations: must be >= 1");
  }
  if (cfg.lambda < 1) {
    throw std::invalid_argument("lambda: must be >= 1");
  }
  if (cfg.restarts < 1) {
    throw std::invalid_argument("restarts: must be >= 1");
  }
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0)) {
    throw std::invalid_argument("rho: must lie in (0, 1)");
  }
}

// One pre-generated watermarked sample the objective paraphrases and
// verifies. Params-independent, so the pool is built once per master seed.
struct TuningSample {
  WatermarkKey key;
  Message message;
  TokenSeq watermarked;
};

inline std::vector<TuningSample> build_tuning_pool(
    const TunerConfig& cfg, const lm::NGramModel& model,
    std::uint64_t master_seed) {
  validate_tuner(cfg);
  std::vector<TuningSample> pool;
  rng::SplitMix64 g(rng::derive_seed(master_seed, "attack/pool"));
  for (SchemeId scheme : cfg.schemes) {
    for (std::size_t k = 0; k < cfg.seed_pool; ++k) {
      TuningSample s;
      s.key = keygen(scheme, g.next_u64());
      s.message = Message{cfg.message_space > 1 ? g.below(cfg.message_space) : 0,
                          cfg.message_space};
      const TokenSeq& query = cfg.queries[g.below(cfg.queries.size())];
      s.watermarked = marks::generate_watermarked(
          model, s.key, s.message, query, cfg.max_tokens, g.next_u64());
      pool.push_back(std::move(s));
    }
  }
  return pool;
}

struct ObjectiveEstimate {
  double objective = 0.0;     // evasion_term + quality_term, exactly
  double evasion_term = 0.0;  // mean of 1{p >= rho}
  double quality_term = 0.0;  // mean of Q(attacked, watermarked)
  double mean_p = 0.0;        // mean verify p-value (diagnostic)
};

// Mean over the pool of [1{verify(paraphrased).p >= rho} + Q(paraphrased,
// watermarked)]. Sample i paraphrases with seed derive(eval_seed, i), so a
// shared eval_seed gives common random numbers across candidates.
inline ObjectiveEstimate estimate_objective(const ParaphraserParams& params,
                                            const TunerConfig& cfg,
                                            const std::vector<TuningSample>& pool,
                                            const lm::NGramModel& model,
                                            const QualityFn& qfun,
                                            std::uint64_t eval_seed) {
  validate_paraphraser(params);
  if (pool.empty()) throw std::invalid_argument("pool: must be non-empty");
  const auto& bundle = corpus::bundled();
  ObjectiveEstimate est;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const TuningSample& s = pool[i];
    TokenSeq attacked = paraphrase(bundle, params, model, s.watermarked,
                                   rng::derive_seed(eval_seed, "attack/crn") + i);
    marks::VerifyOptions vo;
    vo.message = s.message;
    auto res = marks::verify(s.key.scheme, s.key, attacked,
                             model.vocab().size(), vo);
    est.evasion_term += res.p_value >= cfg.rho;
    est.quality_term += qfun(attacked, s.watermarked);
    est.mean_p += res.p_value;
  }
  est.evasion_term /= double(pool.size());
  est.quality_term /= double(pool.size());
  est.mean_p /= double(pool.size());
  est.objective = est.evasion_term + est.quality_term;
  return est;
}

inline ObjectiveEstimate estimate_objective(const ParaphraserParams& params,
                                            const TunerConfig& cfg,
                                            const lm::NGramModel& model,
                                            const QualityFn& qfun,
                                            std::uint64_t master_seed) {
  auto pool = build_tuning_pool(cfg, model, master_seed);
  return estimate_objective(params, cfg, pool, model, qfun,
                            rng::derive_seed(master_seed, "attack/eval"));
}

// ============================================================================
// (1+lambda) evolutionary tuner
// ============================================================================

namespace detail {

// Candidates better-equal on the objective win ties by higher mean p-value;
// the p-value moves before the evasion indicator does, so ties at the
// untuned plateau still carry a search gradient.
inline bool objective_less(const ObjectiveEstimate& a,
                           const ObjectiveEstimate& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  return a.mean_p < b.mean_p;
}

inline double gauss(rng::SplitMix64& g) {
  // Box-Muller; the second value is discarded for simplicity.
  double u1 = std::max(g.uniform(), 0x1.0p-60);
  double u2 = g.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline ParaphraserParams mutate_rates(const ParaphraserParams& base,
                                      double sigma, rng::SplitMix64& g) {
  auto clip = [](double v) { return std::min(std::max(v, 0.0), 1.0); };
  ParaphraserParams p = base;
  p.p_synonym = clip(base.p_synonym + sigma * gauss(g));
  p.p_delete = clip(base.p_delete + sigma * gauss(g));
  p.p_insert = clip(base.p_insert + sigma * gauss(g));
  p.p_swap_adjacent = clip(base.p_swap_adjacent + sigma * gauss(g));
  p.p_resample = clip(base.p_resample + sigma * gauss(g));
  return p;
}

}  // namespace detail

struct TuneResult {
  ParaphraserParams params;
  ObjectiveEstimate best_estimate;  // training objective of params
  ObjectiveEstimate init_estimate;  // training objective of init
};

// (1+lambda) evolutionary search on the five edit rates (sigma = 0.05,
// clipped to [0, 1]); resample temperature and context stay at their init
// values. Candidates within an iteration share paraphrase seeds (common
// random numbers). Returns the best params ever evaluated; init is in the
// evaluated set, so best_estimate.objective >= init_estimate.objective.
inline TuneResult tune_adaptive(const ParaphraserParams& init,
                                const TunerConfig& cfg,
                                const lm::NGramModel& model,
                                const QualityFn& qfun,
                                std::uint64_t master_seed) {
  validate_paraphraser(init);
  validate_tuner(cfg);
  constexpr double kSigma = 0.05;
  auto pool = build_tuning_pool(cfg, model, master_seed);

  TuneResult res;
  res.params = init;
  std::optional<ObjectiveEstimate> best_est;
  for (std::uint32_t r = 0; r < cfg.restarts; ++r) {
    rng::SplitMix64 g(rng::derive_seed(master_seed, "attack/es") + r);
    ParaphraserParams parent = init;
    ObjectiveEstimate parent_est =
        estimate_objective(parent, cfg, pool, model, qfun, g.next_u64());
    if (r == 0) res.init_estimate = parent_est;
    if (!best_est || detail::objective_less(*best_est, parent_est)) {
      res.params = parent;
      best_est = parent_est;
    }
    for (std::uint32_t it = 0; it < cfg.iterations; ++it) {
      std::uint64_t crn_seed = g.next_u64();
      for (std::uint32_t c = 0; c < cfg.lambda; ++c) {
        ParaphraserParams cand = detail::mutate_rates(parent, kSigma, g);
        ObjectiveEstimate cand_est =
            estimate_objective(cand, cfg, pool, model, qfun, crn_seed);
        if (detail::objective_less(parent_est, cand_est)) {
          parent = cand;
          parent_est = cand_est;
        }
        if (detail::objective_less(*best_est, cand_est)) {
          res.params = cand;
          best_est = cand_est;
        }
      }
    }
  }
  res.best_estimate = *best_est;
  return res;
}

// ============================================================================
// Preference-dataset curation
// ============================================================================

struct PreferenceTriplet {
  TokenSeq watermarked;
  TokenSeq rejected;
  TokenSeq chosen;
  SchemeId scheme = SchemeId::DistShift;
  std::uint64_t surrogate_key_seed = 0;
  std::uint64_t message_value = 0;
  double q_chosen = 0.0;
};

inline nlohmann::json triplet_to_json(const PreferenceTriplet& t) {
  return nlohmann::json{{"watermarked", t.watermarked.tokens},
                        {"rejected", t.rejected.tokens},
                        {"chosen", t.chosen.tokens},
                        {"scheme", scheme_name(t.scheme)},
                        {"surrogate_key_seed", t.surrogate_key_seed},
                        {"message_value", t.message_value},
                        {"q_chosen", t.q_chosen}};
}

inline PreferenceTriplet triplet_from_json(const nlohmann::json& j) {
  PreferenceTriplet t;
  t.watermarked.tokens = j.at("watermarked").get<std::vector<Token>>();
  t.rejected.tokens = j.at("rejected").get<std::vector<Token>>();
  t.chosen.tokens = j.at("chosen").get<std::vector<Token>>();
  t.scheme = parse_scheme(j.at("scheme").get<std::string>());
  t.surrogate_key_seed = j.at("surrogate_key_seed").get<std::uint64_t>();
  t.message_value = j.at("message_value").get<std::uint64_t>();
  t.q_chosen = j.at("q_chosen").get<double>();
  return t;
}

// One candidate paraphrase with its curation labels.
struct CuratedCandidate {
  TokenSeq text;
  bool positive = false;  // quality >= delta AND verify p > rho
  double q = 0.0;
};

// Partition-and-pair step: positives become chosen samples in order; the
// j-th chosen pairs with the j-th negative while negatives last, then with
// the watermarked text itself.
inline std::vector<PreferenceTriplet> pair_preferences(
    const TokenSeq& watermarked, const std::vector<CuratedCandidate>& cands) {
  std::vector<const CuratedCandidate*> pos, neg;
  for (const auto& c : cands) {
    (c.positive ? pos : neg).push_back(&c);
  }
  std::vector<PreferenceTriplet> out;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    PreferenceTriplet t;
    t.watermarked = watermarked;
    t.chosen = pos[j]->text;
    t.q_chosen = pos[j]->q;
    t.rejected = j < neg.size() ? neg[j]->text : watermarked;
    out.push_back(std::move(t));
  }
  return out;
}

// Preference curation: per (scheme, query) draw a surrogate key and
// message, generate a watermarked sample, and keep it only when the
// watermark is detectable; then label N paraphrases by quality >= delta
// and verify p > rho and pair positives against negatives.
inline std::vector<PreferenceTriplet> curate_preferences(
    const lm::NGramModel& model, const ParaphraserParams& params,
    const std::vector<TokenSeq>& queries, const std::vector<SchemeId>& schemes,
    std::uint32_t n_paraphrases, double rho, double delta,
    const QualityFn& qfun, std::uint64_t master_seed,
    std::size_t max_tokens = 256) {
  if (n_paraphrases < 1) {
    throw std::invalid_argument("n_paraphrases: must be >= 1");
  }
  validate_paraphraser(params);
  const auto& bundle = corpus::bundled();
  rng::SplitMix64 g(rng::derive_seed(master_seed, "attack/curate"));
  std::vector<PreferenceTriplet> out;
  for (SchemeId scheme : schemes) {
    for (const TokenSeq& query : queries) {
      std::uint64_t key_seed = g.next_u64();
      auto key = keygen(scheme, key_seed);
      Message message{0, 1};
      TokenSeq r = marks::generate_watermarked(model, key, message, query,
                                               max_tokens, g.next_u64());
      marks::VerifyOptions vo;
      vo.message = message;
      auto base = marks::verify(scheme, key, r, model.vocab().size(), vo);
      if (!(base.p_value < rho)) continue;  // watermark must be detectable

      std::vector<CuratedCandidate> cands;
      for (std::uint32_t i = 0; i < n_paraphrases; ++i) {
        CuratedCandidate c;
        c.text = paraphrase(bundle, params, model, r, g.next_u64());
        c.q = qfun(c.text, r);
        auto res =
            marks::verify(scheme, key, c.text, model.vocab().size(), vo);
        c.positive = c.q >= delta && res.p_value > rho;
        cands.push_back(std::move(c));
      }
      for (auto& t : pair_preferences(r, cands)) {
        t.scheme = scheme;
        t.surrogate_key_seed = key_seed;
        t.message_value = message.value;
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

// ============================================================================
// Best-of-N success curves
// ============================================================================

// curve[n-1] = fraction of rows with a success among the first n entries.
// Non-decreasing in n by construction.
inline std::vector<double> best_of_n_curve(
    const std::vector<std::vector<bool>>& successes, std::uint32_t n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max: must be >= 1");
  std::vector<double> curve(n_max, 0.0);
  for (const auto& row : successes) {
    if (row.size() < n_max) {
      throw std::invalid_argument("successes: row shorter than n_max");
    }
    bool any = false;
    for (std::uint32_t n = 0; n < n_max; ++n) {
      any = any || row[n];
      curve[n] += any;
    }
  }
  for (double& v : curve) v /= double(successes.empty() ? 1 : successes.size());
  return curve;
}

// Success = paraphrase passes quality >= delta and evades at rho, under a
// fresh surrogate (key, query) per trial.
inline std::vector<double> best_of_n_success(
    const lm::NGramModel& model, const ParaphraserParams& params,
    const std::vector<SchemeId>& schemes, const std::vector<TokenSeq>& queries,
    std::uint32_t n_max, double rho, double delta, std::uint32_t trials,
    const QualityFn& qfun, std::uint64_t master_seed,
    std::size_t max_tokens = 256) {
  if (queries.empty()) throw std::invalid_argument("queries: must be non-empty");
  if (schemes.empty()) throw std::invalid_argument("schemes: must be non-empty");
  const auto& bundle = corpus::bundled();
  rng::SplitMix64 g(rng::derive_seed(master_seed, "attack/best-of-n"));
  std::vector<std::vector<bool>> successes;
  for (std::uint32_t trial = 0; trial < trials; ++trial) {
    SchemeId scheme = schemes[trial % schemes.size()];
    auto key = keygen(scheme, g.next_u64());
    const TokenSeq& query = queries[g.below(queries.size())];
    TokenSeq r = marks::generate_watermarked(model, key, Message{}, query,
                                             max_tokens, g.next_u64());
    std::vector<bool> row;
    for (std::uint32_t n = 0; n < n_max; ++n) {
      TokenSeq attacked = paraphrase(bundle, params, model, r, g.next_u64());
      auto res = marks::verify(scheme, key, attacked, model.vocab().size());
      row.push_back(qfun(attacked, r) >= delta && res.p_value > rho);
    }
    successes.push_back(std::move(row));
  }
  return best_of_n_curve(successes, n_max);
}

}  // namespace wm::attacks
