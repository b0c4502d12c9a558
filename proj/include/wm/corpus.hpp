#pragma once

/**
 * Bundled deterministic corpus.
 *
 * A synthetic English-like corpus built from embedded banks: real function
 * words and punctuation for the grammatical skeleton, syllable-synthesized
 * content words (nouns, verbs, adjectives, adverbs) with Zipf-distributed
 * frequencies, topic-biased noun choice, and sentence templates with
 * recurring connector phrases. Identical on every build and every platform;
 * the generator is seeded with fixed constants.
 *
 * Shape targets: vocabulary around 5k surface forms, 64 long multi-topic
 * documents of roughly 4.7k tokens (about 300k tokens total), so sampled
 * continuations of 256 tokens almost never hit end-of-text, while repeated
 * connector phrases and topical nouns give natural short-range repetition.
 *
 * The same banks drive the synonym classes (groups of four frequency-
 * adjacent words of one part of speech), the contraction table, and the
 * training/evaluation prompt sets. Training prompts combine 40 topics with
 * 25 templates; evaluation prompts use 8 held-out topics and 37 held-out
 * templates, so the two sets share no (topic, template) material.
 */

#include <wm/lm.hpp>
#include <wm/rng.hpp>
#include <wm/types.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace wm::corpus {

// ============================================================================
// Banks
// ============================================================================

namespace detail {

inline const std::vector<std::string>& function_words() {
  static const std::vector<std::string> words = {
      // clang-format off
      "the", "a", "an", "of", "in", "on", "at", "by", "for", "with",
      "without", "from",
      "to", "into", "over", "under", "about", "between", "through", "during",
      "before", "after", "above", "below", "up", "down", "out", "off",
      "and", "or", "but", "nor", "so", "yet", "if", "then", "else", "when",
      "while", "because", "although", "though", "since", "until", "unless",
      "that", "which", "who", "whom", "whose", "this", "these", "those",
      "it", "its", "he", "she", "they", "them", "him", "his", "her", "their",
      "we", "us", "our", "you", "your", "i", "my", "me",
      "is", "are", "was", "were", "be", "been", "being", "has", "have", "had",
      "having", "do", "does", "did", "doing",
      "will", "would", "can", "could", "shall", "should", "may", "might",
      "must", "not", "no", "all", "any", "some", "each", "every", "both",
      "few", "many", "much", "more", "most", "other", "another", "such",
      "only", "own", "same", "as", "also", "very", "too", "just", "than",
      "there", "here", "where", "how", "what", "why", "now", "ever", "never",
      "always", "often", "again", "once",
      "don't", "doesn't", "didn't", "isn't", "aren't", "wasn't", "can't",
      "won't", "it's", "that's",
      "hand", "time", "words", "result", "part", "first", "place", "large",
      "glance", "thus", "story", "ends",
      // clang-format on
  };
  return words;
}

inline const std::vector<std::string>& connector_phrases() {
  static const std::vector<std::string> phrases = {
      "on the other hand", "at the same time", "in other words",
      "as a result",       "for the most part", "in the first place",
      "by and large",      "at first glance",
  };
  return phrases;
}

// Body sentence templates. N/V/A/D are content slots.
inline const std::vector<std::string>& sentence_templates() {
  static const std::vector<std::string> templates = {
      "the N V the A N .",
      "the A N of the N V .",
      "the N V that the N V the N .",
      "it is A that the N V .",
      "the N and the N V the N .",
      "if the N V the N , the N V .",
      "the N of the N V the N of the N .",
      "some N V but most N V the A N .",
      "the A N V D .",
      "when the N V , the N V the N .",
      "the N V the N because the N V the N .",
      "no N V the N without the A N .",
      "every N of the A N V the N .",
      "the N V D and the N V the A N .",
  };
  return templates;
}

// Prompt templates; T is the topic noun, N/V/A are content slots.
inline const std::vector<std::string>& train_prompt_templates() {
  static const std::vector<std::string> templates = {
      "the T of the N V the",
      "it is A that the T",
      "when the T V the N ,",
      "the A T V the N and",
      "every T of the A N",
      "no T V the N without",
      "the N and the T V",
      "if the T V the N ,",
      "the T V that the N",
      "some T V but most",
      "the N of the T V",
      "on the other hand , the T",
      "the T V the A N because",
      "at the same time , the T V",
      "the A N of the T",
      "in other words , the T",
      "the T V D and the",
      "as a result , the T V the",
      "the T and the N V the",
      "for the most part , the T",
      "when the N V , the T",
      "the T V the N of the",
      "by and large , the T V",
      "it is A that the T V the",
      "the A T of the N",
  };
  return templates;
}

inline const std::vector<std::string>& eval_prompt_templates() {
  static const std::vector<std::string> templates = {
      "in the first place , the T",
      "the N V the T although the",
      "most T V the A N ,",
      "the T V the N ; the",
      "at first glance , the T",
      "although the T V the N ,",
      "the N of the N V the T",
      "every A T V the",
      "because the T V the N , the",
      "the T of the A N V",
      "such T V the N and the",
      "while the T V , the N",
      "the A N V the T and",
      "no N of the T V",
      "the T V the T because",
      "since the T V the N ,",
      "many T V the N of the",
      "the N V ; the T V the",
      "few T V the A N without",
      "the T V the N until the",
      "if the N V the T , the",
      "both the T and the N V",
      "the A T V D ,",
      "under the N , the T V",
      "the T V every N of the",
      "through the N , the T",
      "unless the T V the N ,",
      "the N and the N V the T",
      "each T of the N V the",
      "over the A N , the T",
      "the T V much of the",
      "before the N V , the T",
      "the A T and the N V",
      "after the T V the N , the",
      "between the N and the T ,",
      "the T V so that the N",
      "during the N , the T V the",
  };
  return templates;
}

// Deterministic syllable synthesis for content words.
inline std::string syllable(std::uint32_t i) {
  static const std::array<const char*, 36> onsets = {
      "b",  "c",  "d",  "f",  "g",  "h",  "j",  "k",  "l",
      "m",  "n",  "p",  "r",  "s",  "t",  "v",  "w",  "z",
      "br", "cr", "dr", "gr", "pr", "tr", "bl", "cl", "fl",
      "gl", "pl", "sl", "sh", "ch", "th", "st", "sp", "sk"};
  static const std::array<const char*, 10> nuclei = {
      "a", "e", "i", "o", "u", "ai", "ea", "ee", "oo", "ou"};
  static const std::array<const char*, 10> codas = {
      "", "n", "r", "l", "s", "t", "m", "nd", "st", "rn"};
  std::string s = onsets[(i / 100) % 36];
  s += nuclei[(i / 10) % 10];
  s += codas[i % 10];
  return s;
}

struct PosBankSpec {
  const char* suffix;
  std::uint32_t count;
  std::uint32_t stride;  // mixes syllable indices so banks don't run parallel
};

inline std::string content_word(const PosBankSpec& spec, std::uint32_t k) {
  std::uint32_t a = (k * spec.stride + 17) % 3600;
  std::uint32_t b = (k * 7 + spec.stride) % 3600;
  return syllable(a) + syllable(b) + spec.suffix;
}

}  // namespace detail

// ============================================================================
// Bundle
// ============================================================================

struct PosBank {
  Token base = 0;        // first token id of the bank
  std::uint32_t size = 0;
  std::vector<double> cumulative;  // Zipf CDF over ranks
};

struct Bundle {
  Vocabulary vocab;
  std::vector<TokenSeq> docs;

  PosBank nouns, verbs, adjectives, adverbs;

  // Synonym classes: class id per token; classes list their members.
  std::vector<std::uint32_t> synonym_class;
  std::vector<std::vector<Token>> class_members;

  // Contraction table: (first, second) -> merged.
  std::vector<std::pair<std::pair<Token, Token>, Token>> contractions;

  std::vector<TokenSeq> train_prompts;  // 40 topics x 25 templates
  std::vector<TokenSeq> eval_prompts;   // 8 held-out topics x 37 templates

  // Topic noun sets; the first member is the topic keyword.
  std::vector<std::vector<Token>> train_topics;
  std::vector<std::vector<Token>> eval_topics;
};

namespace detail {

inline std::vector<double> zipf_cdf(std::uint32_t n) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::uint32_t r = 0; r < n; ++r) {
    acc += 1.0 / std::pow(double(r) + 3.0, 1.03);
    cdf[r] = acc;
  }
  for (double& x : cdf) x /= acc;
  return cdf;
}

inline Token zipf_draw(const PosBank& bank, rng::SplitMix64& g) {
  double u = g.uniform();
  auto it = std::lower_bound(bank.cumulative.begin(), bank.cumulative.end(), u);
  std::uint32_t rank =
      std::uint32_t(it - bank.cumulative.begin());
  if (rank >= bank.size) rank = bank.size - 1;
  return bank.base + rank;
}

class DocWriter {
 public:
  DocWriter(const Bundle& b, const Vocabulary& v, rng::SplitMix64& g)
      : b_(b), v_(v), g_(g) {}

  Token noun(const std::vector<Token>& topic) {
    if (!topic.empty() && g_.uniform() < 0.45) {
      return topic[g_.below(topic.size())];
    }
    return zipf_draw(b_.nouns, g_);
  }

  void fill_template(const std::string& tmpl, const std::vector<Token>& topic,
                     Token topic_word, std::vector<Token>& out) {
    std::size_t i = 0;
    while (i < tmpl.size()) {
      std::size_t j = tmpl.find(' ', i);
      if (j == std::string::npos) j = tmpl.size();
      std::string w = tmpl.substr(i, j - i);
      i = j + 1;
      if (w == "N") {
        out.push_back(noun(topic));
      } else if (w == "V") {
        out.push_back(zipf_draw(b_.verbs, g_));
      } else if (w == "A") {
        out.push_back(zipf_draw(b_.adjectives, g_));
      } else if (w == "D") {
        out.push_back(zipf_draw(b_.adverbs, g_));
      } else if (w == "T") {
        out.push_back(topic_word);
      } else {
        Token id = v_.id_of(w);
        if (id == v_.unknown_id()) {
          throw std::logic_error("template word missing from vocabulary: " + w);
        }
        out.push_back(id);
      }
    }
  }

  void sentence(const std::vector<Token>& topic, std::vector<Token>& out) {
    if (g_.uniform() < 0.30) {
      const auto& phrases = connector_phrases();
      fill_template(phrases[g_.below(phrases.size())], topic, 0, out);
      out.push_back(v_.id_of(","));
    }
    const auto& templates = sentence_templates();
    fill_template(templates[g_.below(templates.size())], topic, 0, out);
  }

 private:
  const Bundle& b_;
  const Vocabulary& v_;
  rng::SplitMix64& g_;
};

inline Bundle build_bundle() {
  Bundle b;

  // ----- vocabulary -------------------------------------------------------
  std::vector<std::string> surfaces = {"<s>", "</s>", "<unk>"};
  for (const char* p : {".", ",", ";", ":", "!", "?"}) surfaces.emplace_back(p);
  for (const auto& w : function_words()) surfaces.push_back(w);

  std::unordered_set<std::string> used(surfaces.begin(), surfaces.end());
  auto add_bank = [&](PosBank& bank, const PosBankSpec& spec) {
    bank.base = Token(surfaces.size());
    bank.size = spec.count;
    for (std::uint32_t k = 0; k < spec.count; ++k) {
      std::string w = content_word(spec, k);
      while (used.count(w)) w += "o";
      used.insert(w);
      surfaces.push_back(w);
    }
    bank.cumulative = zipf_cdf(spec.count);
  };
  add_bank(b.nouns, {"", 2400, 131});
  add_bank(b.verbs, {"ate", 1200, 241});
  add_bank(b.adjectives, {"ous", 800, 359});
  add_bank(b.adverbs, {"ly", 440, 467});

  b.vocab = Vocabulary(std::move(surfaces), 0, 1, 2);
  const Vocabulary& v = b.vocab;

  // ----- synonym classes --------------------------------------------------
  b.synonym_class.resize(v.size());
  std::uint32_t next_class = 0;
  Token t = 0;
  auto add_singletons = [&](Token upto) {
    for (; t < upto; ++t) {
      b.synonym_class[t] = next_class++;
      b.class_members.push_back({t});
    }
  };
  auto add_grouped = [&](const PosBank& bank) {
    add_singletons(bank.base);
    for (std::uint32_t k = 0; k < bank.size; k += 4) {
      std::vector<Token> members;
      for (std::uint32_t j = k; j < std::min(k + 4, bank.size); ++j) {
        b.synonym_class[bank.base + j] = next_class;
        members.push_back(bank.base + j);
      }
      b.class_members.push_back(std::move(members));
      ++next_class;
    }
    t = bank.base + bank.size;
  };
  add_grouped(b.nouns);
  add_grouped(b.verbs);
  add_grouped(b.adjectives);
  add_grouped(b.adverbs);
  add_singletons(Token(v.size()));

  // ----- contractions -----------------------------------------------------
  auto pair_of = [&](const char* a, const char* bb, const char* c) {
    b.contractions.push_back(
        {{v.id_of(a), v.id_of(bb)}, v.id_of(c)});
  };
  pair_of("do", "not", "don't");
  pair_of("does", "not", "doesn't");
  pair_of("did", "not", "didn't");
  pair_of("is", "not", "isn't");
  pair_of("are", "not", "aren't");
  pair_of("was", "not", "wasn't");
  pair_of("can", "not", "can't");
  pair_of("will", "not", "won't");
  pair_of("it", "is", "it's");
  pair_of("that", "is", "that's");

  // ----- topics -----------------------------------------------------------
  auto make_topics = [&](std::uint32_t count, std::uint32_t salt) {
    std::vector<std::vector<Token>> topics;
    for (std::uint32_t ti = 0; ti < count; ++ti) {
      std::vector<Token> set;
      for (std::uint32_t j = 0; j < 24; ++j) {
        set.push_back(b.nouns.base + (salt + ti * 53 + j * 17) % b.nouns.size);
      }
      topics.push_back(std::move(set));
    }
    return topics;
  };
  b.train_topics = make_topics(40, 0);
  b.eval_topics = make_topics(8, 2129);

  // ----- documents --------------------------------------------------------
  rng::SplitMix64 doc_rng(0x5eedc0de00000001ULL);
  for (std::uint32_t d = 0; d < 64; ++d) {
    std::vector<Token> doc;
    std::size_t target = 4500 + doc_rng.below(500);
    DocWriter w(b, v, doc_rng);
    const std::vector<Token>* topic =
        &b.train_topics[doc_rng.below(b.train_topics.size())];
    std::uint32_t sentences_left = 4 + std::uint32_t(doc_rng.below(4));
    while (doc.size() < target) {
      if (sentences_left == 0) {
        topic = &b.train_topics[doc_rng.below(b.train_topics.size())];
        sentences_left = 4 + std::uint32_t(doc_rng.below(4));
      }
      w.sentence(*topic, doc);
      --sentences_left;
    }
    w.fill_template("thus the story ends here .", {}, 0, doc);
    TokenSeq seq;
    seq.tokens = std::move(doc);
    seq.provenance = Provenance::Corpus;
    b.docs.push_back(std::move(seq));
  }

  // ----- prompts ----------------------------------------------------------
  auto make_prompts = [&](const std::vector<std::vector<Token>>& topics,
                          const std::vector<std::string>& templates,
                          std::uint64_t seed) {
    std::vector<TokenSeq> prompts;
    rng::SplitMix64 g(seed);
    for (std::size_t ti = 0; ti < topics.size(); ++ti) {
      for (std::size_t pi = 0; pi < templates.size(); ++pi) {
        DocWriter w(b, v, g);
        TokenSeq p;
        p.provenance = Provenance::Prompt;
        w.fill_template(templates[pi], topics[ti], topics[ti][0], p.tokens);
        prompts.push_back(std::move(p));
      }
    }
    return prompts;
  };
  b.train_prompts =
      make_prompts(b.train_topics, train_prompt_templates(),
                   0x5eedc0de00000002ULL);
  b.eval_prompts = make_prompts(b.eval_topics, eval_prompt_templates(),
                                0x5eedc0de00000003ULL);

  return b;
}

}  // namespace detail

// Built once per process; everything downstream shares this instance.
inline const Bundle& bundled() {
  static const Bundle b = detail::build_bundle();
  return b;
}

// Order-3 model with additive smoothing, trained on the bundled documents.
// Alpha is small relative to 1/|V| so that once-seen contexts still favor
// their observed continuations; larger values drown the trigram structure
// in uniform noise.
inline const lm::NGramModel& bundled_model() {
  static const lm::NGramModel m =
      lm::train_ngram(bundled().vocab, bundled().docs, 3, 5e-5);
  return m;
}

}  // namespace wm::corpus
