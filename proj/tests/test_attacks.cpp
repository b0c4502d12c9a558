#include <catch2/catch_amalgamated.hpp>

#include <wm/attacks.hpp>
#include <wm/corpus.hpp>
#include <wm/keygen.hpp>
#include <wm/lm.hpp>
#include <wm/quality.hpp>
#include <wm/rng.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace wm;

namespace {

TokenSeq plain_text(std::size_t len, std::uint64_t seed) {
  lm::GenerateOptions opts;
  opts.max_tokens = len;
  opts.seed = seed;
  return lm::generate(corpus::bundled_model(), TokenSeq{}, opts);
}

std::vector<TokenSeq> some_queries(std::size_t n) {
  const auto& prompts = corpus::bundled().eval_prompts;
  REQUIRE(prompts.size() >= n);
  return {prompts.begin(), prompts.begin() + n};
}

}  // namespace

// ---------------------------------------------------------------------------
// Baseline perturbations
// ---------------------------------------------------------------------------

TEST_CASE("baseline kinds round-trip through their names", "[attacks]") {
  for (attacks::BaselineKind k : attacks::kAllBaselines) {
    REQUIRE(attacks::parse_baseline(attacks::baseline_name(k)) == k);
  }
  REQUIRE_THROWS_AS(attacks::parse_baseline("mixup"), std::invalid_argument);
}

TEST_CASE("zero strength is the identity for every baseline", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(128, 42);
  for (attacks::BaselineKind k : attacks::kAllBaselines) {
    auto out = attacks::perturb_baseline(bundle, k, 0.0, text, 7);
    REQUIRE(out.tokens == text.tokens);
    REQUIRE(out.provenance == Provenance::Attacked);
  }
}

TEST_CASE("baseline strength outside [0,1] is rejected", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(16, 1);
  REQUIRE_THROWS_AS(attacks::perturb_baseline(
                        bundle, attacks::BaselineKind::Swap, -0.1, text, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(attacks::perturb_baseline(
                        bundle, attacks::BaselineKind::Swap, 1.5, text, 0),
                    std::invalid_argument);
}

TEST_CASE("baselines are deterministic in the seed", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(200, 9);
  for (attacks::BaselineKind k : attacks::kAllBaselines) {
    auto a = attacks::perturb_baseline(bundle, k, 0.3, text, 5);
    auto b = attacks::perturb_baseline(bundle, k, 0.3, text, 5);
    REQUIRE(a.tokens == b.tokens);
  }
  auto c = attacks::perturb_baseline(bundle, attacks::BaselineKind::Delete,
                                     0.3, text, 5);
  auto d = attacks::perturb_baseline(bundle, attacks::BaselineKind::Delete,
                                     0.3, text, 6);
  REQUIRE(c.tokens != d.tokens);
}

TEST_CASE("delete at full strength empties the text", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(64, 3);
  auto out = attacks::perturb_baseline(bundle, attacks::BaselineKind::Delete,
                                       1.0, text, 11);
  REQUIRE(out.tokens.empty());
}

TEST_CASE("light swapping makes small edits", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(256, 17);
  auto out = attacks::perturb_baseline(bundle, attacks::BaselineKind::Swap,
                                       0.1, text, 23);
  REQUIRE(out.tokens.size() == text.tokens.size());
  double ratio = quality::edit_distance_ratio(out, text);
  REQUIRE(ratio > 0.0);
  REQUIRE(ratio < 0.15);
  std::vector<Token> sorted_a = out.tokens, sorted_b = text.tokens;
  std::sort(sorted_a.begin(), sorted_a.end());
  std::sort(sorted_b.begin(), sorted_b.end());
  REQUIRE(sorted_a == sorted_b);  // swaps permute, never replace
}

TEST_CASE("full-strength swap exchanges disjoint adjacent pairs", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text;
  text.tokens = {10, 11, 12, 13, 14, 15};
  auto out = attacks::perturb_baseline(bundle, attacks::BaselineKind::Swap,
                                       1.0, text, 0);
  REQUIRE(out.tokens == std::vector<Token>{11, 10, 13, 12, 15, 14});
}

TEST_CASE("synonym substitution stays inside the synonym class", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(256, 29);
  auto out = attacks::perturb_baseline(bundle, attacks::BaselineKind::Synonym,
                                       0.5, text, 31);
  REQUIRE(out.tokens.size() == text.tokens.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    Token a = text.tokens[i], b = out.tokens[i];
    if (a != b) {
      ++changed;
      REQUIRE(bundle.synonym_class[a] == bundle.synonym_class[b]);
    }
  }
  REQUIRE(changed > 0);
  quality::QualityConfig canon_cfg = attacks::default_quality_config();
  REQUIRE(quality::quality_q(out, text, canon_cfg) == 1.0);
}

TEST_CASE("typos replace tokens with the unknown token", "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(400, 37);
  auto out = attacks::perturb_baseline(bundle, attacks::BaselineKind::Typo,
                                       0.25, text, 41);
  REQUIRE(out.tokens.size() == text.tokens.size());
  std::size_t unknowns = 0;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    if (out.tokens[i] != text.tokens[i]) {
      REQUIRE(out.tokens[i] == bundle.vocab.unknown_id());
      ++unknowns;
    }
  }
  double rate = double(unknowns) / double(text.tokens.size());
  REQUIRE(rate > 0.15);
  REQUIRE(rate < 0.35);
}

TEST_CASE("contraction fuses matching pairs at full strength", "[attacks]") {
  const auto& bundle = corpus::bundled();
  REQUIRE(!bundle.contractions.empty());
  const auto& [pair, fusion] = bundle.contractions.front();
  TokenSeq text;
  Token filler = 20;
  text.tokens = {filler, pair.first, pair.second, filler, pair.first,
                 pair.second, filler};
  auto out = attacks::perturb_baseline(
      bundle, attacks::BaselineKind::Contraction, 1.0, text, 2);
  REQUIRE(out.tokens ==
          std::vector<Token>{filler, fusion, filler, fusion, filler});
}

TEST_CASE("lowercase is the identity on an all-lowercase vocabulary",
          "[attacks]") {
  const auto& bundle = corpus::bundled();
  TokenSeq text = plain_text(200, 43);
  auto out = attacks::perturb_baseline(
      bundle, attacks::BaselineKind::Lowercase, 1.0, text, 3);
  REQUIRE(out.tokens == text.tokens);
}

// ---------------------------------------------------------------------------
// Paraphraser
// ---------------------------------------------------------------------------

TEST_CASE("paraphraser params validate their ranges", "[attacks]") {
  attacks::ParaphraserParams p;
  REQUIRE_NOTHROW(attacks::validate_paraphraser(p));
  p.p_insert = 1.2;
  REQUIRE_THROWS_AS(attacks::validate_paraphraser(p), std::invalid_argument);
  p.p_insert = 0.1;
  p.resample_temperature = 0.0;
  REQUIRE_THROWS_AS(attacks::validate_paraphraser(p), std::invalid_argument);
  p.resample_temperature = 1.0;
  p.resample_context = 0;
  REQUIRE_THROWS_AS(attacks::validate_paraphraser(p), std::invalid_argument);
}

TEST_CASE("paraphraser params round-trip through json", "[attacks]") {
  attacks::ParaphraserParams p;
  p.p_synonym = 0.05;
  p.p_delete = 0.2;
  p.p_insert = 0.0;
  p.p_swap_adjacent = 0.35;
  p.p_resample = 0.5;
  p.resample_temperature = 1.7;
  p.resample_context = 2;
  auto back = attacks::paraphraser_from_json(attacks::paraphraser_to_json(p));
  REQUIRE(back == p);
  auto j = attacks::paraphraser_to_json(p);
  j["p_delete"] = -0.5;
  REQUIRE_THROWS_AS(attacks::paraphraser_from_json(j), std::invalid_argument);
}

TEST_CASE("untuned defaults put every edit rate at 0.1", "[attacks]") {
  attacks::ParaphraserParams p;
  REQUIRE(p.p_synonym == 0.1);
  REQUIRE(p.p_delete == 0.1);
  REQUIRE(p.p_insert == 0.1);
  REQUIRE(p.p_swap_adjacent == 0.1);
  REQUIRE(p.p_resample == 0.1);
}

TEST_CASE("all-zero rates paraphrase to the identity", "[attacks]") {
  const auto& bundle = corpus::bundled();
  const auto& model = corpus::bundled_model();
  attacks::ParaphraserParams p;
  p.p_synonym = p.p_delete = p.p_insert = p.p_swap_adjacent = p.p_resample = 0;
  TokenSeq text = plain_text(150, 47);
  auto out = attacks::paraphrase(bundle, p, model, text, 99);
  REQUIRE(out.tokens == text.tokens);
  REQUIRE(out.provenance == Provenance::Attacked);
}

TEST_CASE("paraphrase is deterministic in the seed", "[attacks]") {
  const auto& bundle = corpus::bundled();
  const auto& model = corpus::bundled_model();
  attacks::ParaphraserParams p;  // defaults: all rates 0.1
  TokenSeq text = plain_text(200, 53);
  auto a = attacks::paraphrase(bundle, p, model, text, 7);
  auto b = attacks::paraphrase(bundle, p, model, text, 7);
  auto c = attacks::paraphrase(bundle, p, model, text, 8);
  REQUIRE(a.tokens == b.tokens);
  REQUIRE(a.tokens != c.tokens);
}

TEST_CASE("default paraphrase stays near the source text", "[attacks]") {
  const auto& bundle = corpus::bundled();
  const auto& model = corpus::bundled_model();
  attacks::ParaphraserParams p;
  TokenSeq text = plain_text(256, 59);
  auto out = attacks::paraphrase(bundle, p, model, text, 61);
  // Deletions and insertions roughly cancel; length moves by far less
  // than the total edit volume.
  REQUIRE(out.tokens.size() > text.tokens.size() / 2);
  REQUIRE(out.tokens.size() < text.tokens.size() * 3 / 2);
  REQUIRE(out.tokens != text.tokens);
}

TEST_CASE("pure resampling at high temperature is near-uniform", "[attacks]") {
  const auto& bundle = corpus::bundled();
  const auto& model = corpus::bundled_model();
  attacks::ParaphraserParams p;
  p.p_synonym = p.p_delete = p.p_insert = p.p_swap_adjacent = 0;
  p.p_resample = 1.0;
  p.resample_temperature = 1000.0;

  std::size_t v = model.vocab().size();
  constexpr std::size_t kBins = 50;
  std::vector<double> counts(kBins, 0.0);
  std::size_t total = 0;
  TokenSeq text = plain_text(256, 67);
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto out = attacks::paraphrase(bundle, p, model, text, 1000 + s);
    REQUIRE(out.tokens.size() == text.tokens.size());
    for (Token t : out.tokens) {
      counts[std::size_t(t) * kBins / v] += 1.0;
      ++total;
    }
  }
  // Bin b holds ceil/floor-sized id ranges; expected mass = range size / v.
  double chi2 = 0.0;
  for (std::size_t b = 0; b < kBins; ++b) {
    std::size_t lo = (b * v + kBins - 1) / kBins;
    std::size_t hi = ((b + 1) * v + kBins - 1) / kBins;
    double expect = double(total) * double(hi - lo) / double(v);
    chi2 += (counts[b] - expect) * (counts[b] - expect) / expect;
  }
  // 49 dof: far tail at ~1e-3 is about 85.
  REQUIRE(chi2 < 85.0);
}

// ---------------------------------------------------------------------------
// Objective estimator
// ---------------------------------------------------------------------------

namespace {

attacks::TunerConfig small_config(SchemeId scheme) {
  attacks::TunerConfig cfg;
  cfg.schemes = {scheme};
  cfg.seed_pool = 4;
  cfg.queries = some_queries(4);
  cfg.max_tokens = 96;
  return cfg;
}

}  // namespace

TEST_CASE("objective equals evasion plus quality exactly", "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto cfg = small_config(SchemeId::Binary);
  auto pool = attacks::build_tuning_pool(cfg, model, 77);
  REQUIRE(pool.size() == cfg.seed_pool);
  attacks::ParaphraserParams p;
  auto est = attacks::estimate_objective(p, cfg, pool, model,
                                         attacks::default_quality_fn(), 5);
  REQUIRE(est.objective == est.evasion_term + est.quality_term);
  REQUIRE(est.evasion_term >= 0.0);
  REQUIRE(est.evasion_term <= 1.0);
  REQUIRE(est.quality_term >= 0.0);
  REQUIRE(est.quality_term <= 1.0);
  REQUIRE(est.mean_p >= 0.0);
  REQUIRE(est.mean_p <= 1.0);
}

TEST_CASE("identity paraphrase scores quality one and no evasion",
          "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto cfg = small_config(SchemeId::Binary);
  auto pool = attacks::build_tuning_pool(cfg, model, 78);
  attacks::ParaphraserParams p;
  p.p_synonym = p.p_delete = p.p_insert = p.p_swap_adjacent = p.p_resample = 0;
  auto est = attacks::estimate_objective(p, cfg, pool, model,
                                         attacks::default_quality_fn(), 5);
  REQUIRE(est.quality_term == 1.0);
  REQUIRE(est.evasion_term == 0.0);  // every watermark still detected
  REQUIRE(est.objective == 1.0);
}

TEST_CASE("deleting everything evades with zero quality", "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto cfg = small_config(SchemeId::Binary);
  auto pool = attacks::build_tuning_pool(cfg, model, 79);
  attacks::ParaphraserParams p;
  p.p_synonym = p.p_insert = p.p_swap_adjacent = p.p_resample = 0;
  p.p_delete = 1.0;
  auto est = attacks::estimate_objective(p, cfg, pool, model,
                                         attacks::default_quality_fn(), 5);
  REQUIRE(est.quality_term == 0.0);
  REQUIRE(est.evasion_term == 1.0);  // empty text has p = 1
  REQUIRE(est.objective == 1.0);
}

TEST_CASE("objective estimation shares randomness through the eval seed",
          "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto cfg = small_config(SchemeId::Binary);
  auto pool = attacks::build_tuning_pool(cfg, model, 80);
  attacks::ParaphraserParams p;
  auto a = attacks::estimate_objective(p, cfg, pool, model,
                                       attacks::default_quality_fn(), 5);
  auto b = attacks::estimate_objective(p, cfg, pool, model,
                                       attacks::default_quality_fn(), 5);
  REQUIRE(a.objective == b.objective);
  REQUIRE(a.mean_p == b.mean_p);
}

TEST_CASE("degenerate tuner configs are rejected", "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto ok = small_config(SchemeId::Binary);
  auto check = [&](auto mutate) {
    auto cfg = ok;
    mutate(cfg);
    REQUIRE_THROWS_AS(attacks::build_tuning_pool(cfg, model, 1),
                      std::invalid_argument);
  };
  check([](attacks::TunerConfig& c) { c.schemes.clear(); });
  check([](attacks::TunerConfig& c) { c.seed_pool = 0; });
  check([](attacks::TunerConfig& c) { c.queries.clear(); });
  check([](attacks::TunerConfig& c) { c.iterations = 0; });
  check([](attacks::TunerConfig& c) { c.lambda = 0; });
  check([](attacks::TunerConfig& c) { c.rho = 0.0; });
  const std::vector<attacks::TuningSample> empty;
  attacks::ParaphraserParams p;
  REQUIRE_THROWS_AS(attacks::estimate_objective(
                        p, ok, empty, model, attacks::default_quality_fn(), 1),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Tuner
// ---------------------------------------------------------------------------

TEST_CASE("tuning keeps temperature and context fixed and rates in range",
          "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto cfg = small_config(SchemeId::Binary);
  cfg.seed_pool = 2;
  cfg.queries = some_queries(2);
  cfg.iterations = 2;
  cfg.lambda = 2;
  cfg.max_tokens = 64;
  attacks::ParaphraserParams init;
  init.resample_temperature = 1.3;
  init.resample_context = 2;
  auto tuned = attacks::tune_adaptive(init, cfg, model,
                                      attacks::default_quality_fn(), 123);
  REQUIRE(tuned.params.resample_temperature == 1.3);
  REQUIRE(tuned.params.resample_context == 2);
  for (double r :
       {tuned.params.p_synonym, tuned.params.p_delete, tuned.params.p_insert,
        tuned.params.p_swap_adjacent, tuned.params.p_resample}) {
    REQUIRE(r >= 0.0);
    REQUIRE(r <= 1.0);
  }
  auto again = attacks::tune_adaptive(init, cfg, model,
                                      attacks::default_quality_fn(), 123);
  REQUIRE(again.params == tuned.params);
  REQUIRE(again.best_estimate.objective == tuned.best_estimate.objective);
}

TEST_CASE("tuning never loses to its init on the training pool", "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto cfg = small_config(SchemeId::Binary);
  cfg.seed_pool = 3;
  cfg.queries = some_queries(3);
  cfg.iterations = 3;
  cfg.lambda = 3;
  cfg.max_tokens = 64;
  attacks::ParaphraserParams init;
  auto res = attacks::tune_adaptive(init, cfg, model,
                                    attacks::default_quality_fn(), 321);
  REQUIRE(res.best_estimate.objective >= res.init_estimate.objective);
  REQUIRE(res.best_estimate.objective ==
          res.best_estimate.evasion_term + res.best_estimate.quality_term);
}

// ---------------------------------------------------------------------------
// Preference curation
// ---------------------------------------------------------------------------

TEST_CASE("pairing matches positives against negatives then the source",
          "[attacks]") {
  TokenSeq w;
  w.tokens = {1, 2, 3};
  auto cand = [](Token t, bool pos, double q) {
    attacks::CuratedCandidate c;
    c.text.tokens = {t};
    c.positive = pos;
    c.q = q;
    return c;
  };
  std::vector<attacks::CuratedCandidate> cands = {
      cand(10, true, 0.9), cand(11, false, 0.1), cand(12, true, 0.8),
      cand(13, true, 0.7), cand(14, false, 0.2),
  };
  auto trips = attacks::pair_preferences(w, cands);
  REQUIRE(trips.size() == 3);
  // Positives in order 10, 12, 13; negatives in order 11, 14.
  REQUIRE(trips[0].chosen.tokens == std::vector<Token>{10});
  REQUIRE(trips[0].rejected.tokens == std::vector<Token>{11});
  REQUIRE(trips[0].q_chosen == 0.9);
  REQUIRE(trips[1].chosen.tokens == std::vector<Token>{12});
  REQUIRE(trips[1].rejected.tokens == std::vector<Token>{14});
  REQUIRE(trips[2].chosen.tokens == std::vector<Token>{13});
  REQUIRE(trips[2].rejected.tokens == w.tokens);  // negatives exhausted
  for (const auto& t : trips) REQUIRE(t.watermarked.tokens == w.tokens);

  REQUIRE(attacks::pair_preferences(w, {}).empty());
  REQUIRE(attacks::pair_preferences(w, {cand(9, false, 0.0)}).empty());
}

TEST_CASE("curated triplets satisfy their labels on re-check", "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto queries = some_queries(6);
  attacks::ParaphraserParams p;
  p.p_synonym = 0.15;
  p.p_delete = 0.3;
  p.p_insert = 0.1;
  p.p_swap_adjacent = 0.1;
  p.p_resample = 0.2;
  const double rho = 0.01, delta = 0.35;
  auto qfun = attacks::default_quality_fn();
  auto trips = attacks::curate_preferences(model, p, queries,
                                           {SchemeId::Binary}, 8, rho, delta,
                                           qfun, 555, 128);
  REQUIRE(!trips.empty());
  for (const auto& t : trips) {
    REQUIRE(t.scheme == SchemeId::Binary);
    auto key = keygen(t.scheme, t.surrogate_key_seed);
    marks::VerifyOptions vo;
    vo.message.value = t.message_value;
    auto chosen_res = marks::verify(t.scheme, key, t.chosen,
                                    model.vocab().size(), vo);
    REQUIRE(chosen_res.p_value > rho);
    REQUIRE(qfun(t.chosen, t.watermarked) >= delta);
    REQUIRE(t.q_chosen == qfun(t.chosen, t.watermarked));
    auto base_res = marks::verify(t.scheme, key, t.watermarked,
                                  model.vocab().size(), vo);
    REQUIRE(base_res.p_value < rho);
    // Rejected is a labeled-negative paraphrase or the watermarked text.
    if (t.rejected.tokens != t.watermarked.tokens) {
      auto rej_res = marks::verify(t.scheme, key, t.rejected,
                                   model.vocab().size(), vo);
      bool neg = qfun(t.rejected, t.watermarked) < delta ||
                 rej_res.p_value <= rho;
      REQUIRE(neg);
    }
  }
}

TEST_CASE("curation skips texts whose watermark is not detectable",
          "[attacks]") {
  const auto& model = corpus::bundled_model();
  auto queries = some_queries(3);
  attacks::ParaphraserParams p;
  // 6 tokens leave too few scored steps for p < 0.01 on any scheme.
  auto trips = attacks::curate_preferences(model, p, queries,
                                           {SchemeId::DistShift}, 4, 0.01,
                                           0.6, attacks::default_quality_fn(),
                                           999, 6);
  REQUIRE(trips.empty());
}

TEST_CASE("preference triplets round-trip through json", "[attacks]") {
  attacks::PreferenceTriplet t;
  t.watermarked.tokens = {5, 6, 7};
  t.rejected.tokens = {5, 7};
  t.chosen.tokens = {5, 6, 8};
  t.scheme = SchemeId::Inverse;
  t.surrogate_key_seed = 1234567;
  t.message_value = 3;
  t.q_chosen = 0.875;
  auto back = attacks::triplet_from_json(attacks::triplet_to_json(t));
  REQUIRE(back.watermarked.tokens == t.watermarked.tokens);
  REQUIRE(back.rejected.tokens == t.rejected.tokens);
  REQUIRE(back.chosen.tokens == t.chosen.tokens);
  REQUIRE(back.scheme == t.scheme);
  REQUIRE(back.surrogate_key_seed == t.surrogate_key_seed);
  REQUIRE(back.message_value == t.message_value);
  REQUIRE(back.q_chosen == t.q_chosen);
}

// ---------------------------------------------------------------------------
// Best-of-N
// ---------------------------------------------------------------------------

TEST_CASE("best-of-n curve counts first successes", "[attacks]") {
  std::vector<std::vector<bool>> rows = {
      {false, true, false},
      {false, false, false},
      {true, false, false},
  };
  auto curve = attacks::best_of_n_curve(rows, 3);
  REQUIRE(curve.size() == 3);
  REQUIRE(curve[0] == Catch::Approx(1.0 / 3.0));
  REQUIRE(curve[1] == Catch::Approx(2.0 / 3.0));
  REQUIRE(curve[2] == Catch::Approx(2.0 / 3.0));
  REQUIRE_THROWS_AS(attacks::best_of_n_curve(rows, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(attacks::best_of_n_curve(rows, 0), std::invalid_argument);
  auto zeros = attacks::best_of_n_curve({}, 2);
  REQUIRE(zeros == std::vector<double>{0.0, 0.0});
}

TEST_CASE("best-of-n on independent trials matches the closed form",
          "[attacks]") {
  // Bernoulli rows: curve[n-1] should track 1 - (1-p)^n.
  const double p = 0.3;
  rng::SplitMix64 g(2024);
  std::vector<std::vector<bool>> rows(2000);
  for (auto& row : rows) {
    for (int n = 0; n < 8; ++n) row.push_back(g.uniform() < p);
  }
  auto curve = attacks::best_of_n_curve(rows, 8);
  for (int n = 1; n <= 8; ++n) {
    double expect = 1.0 - std::pow(1.0 - p, n);
    REQUIRE(std::abs(curve[n - 1] - expect) < 0.04);
  }
}

TEST_CASE("best-of-n success runs end to end and never decreases",
          "[attacks]") {
  const auto& model = corpus::bundled_model();
  attacks::ParaphraserParams p;
  p.p_delete = 0.3;
  p.p_resample = 0.25;
  auto curve = attacks::best_of_n_success(
      model, p, {SchemeId::Binary}, some_queries(3), 4, 0.01, 0.2, 6,
      attacks::default_quality_fn(), 31337, 64);
  REQUIRE(curve.size() == 4);
  for (std::size_t n = 0; n < curve.size(); ++n) {
    REQUIRE(curve[n] >= 0.0);
    REQUIRE(curve[n] <= 1.0);
    if (n > 0) REQUIRE(curve[n] >= curve[n - 1]);
  }
  auto again = attacks::best_of_n_success(
      model, p, {SchemeId::Binary}, some_queries(3), 4, 0.01, 0.2, 6,
      attacks::default_quality_fn(), 31337, 64);
  REQUIRE(again == curve);
}
