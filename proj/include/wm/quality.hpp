#pragma once

/**
 * Text-quality and similarity metrics.
 *
 * ngram_overlap and edit_distance_ratio are the analysis metrics; quality_q
 * is the composite score used by the attack objective and the preference
 * curation filter: a weighted sum of synonym-canonicalized unigram overlap
 * and a length-ratio term. Canonicalization maps every token to the first
 * member of its synonym class so meaning-preserving substitutions do not
 * count as divergence.
 */

#include <wm/types.hpp>

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

namespace wm::quality {

// Jaccard similarity of the n-gram sets. Sequences shorter than n have an
// empty set; two empty sets count as identical.
inline double ngram_overlap(const TokenSeq& x, const TokenSeq& y,
                            std::size_t n) {
  if (n < 1) throw std::invalid_argument("n: must be >= 1");
  auto grams = [n](const TokenSeq& s) {
    std::set<std::vector<Token>> g;
    if (s.size() >= n) {
      for (std::size_t i = 0; i + n <= s.size(); ++i) {
        g.insert(std::vector<Token>(s.tokens.begin() + i,
                                    s.tokens.begin() + i + n));
      }
    }
    return g;
  };
  auto gx = grams(x);
  auto gy = grams(y);
  if (gx.empty() && gy.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& g : gx) inter += gy.count(g);
  std::size_t uni = gx.size() + gy.size() - inter;
  return double(inter) / double(uni);
}

// Levenshtein distance normalized by the total length; 0 for two empty
// sequences, 1 when nothing aligns.
inline double edit_distance_ratio(const TokenSeq& x, const TokenSeq& y) {
  const auto& a = x.tokens;
  const auto& b = y.tokens;
  if (a.empty() && b.empty()) return 0.0;
  std::vector<std::uint32_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = std::uint32_t(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = std::uint32_t(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::uint32_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return double(prev[b.size()]) / double(a.size() + b.size());
}

// Token -> canonical representative (first member of its synonym class).
// Built once from the synonym classes; identity for unclassed tokens.
struct CanonTable {
  std::vector<Token> repr;

  CanonTable() = default;
  CanonTable(const std::vector<std::uint32_t>& synonym_class,
             const std::vector<std::vector<Token>>& class_members) {
    repr.resize(synonym_class.size());
    for (std::size_t t = 0; t < synonym_class.size(); ++t) {
      repr[t] = class_members[synonym_class[t]].front();
    }
  }

  Token operator()(Token t) const {
    return t < repr.size() ? repr[t] : t;
  }
};

struct QualityConfig {
  double overlap_weight = 0.7;
  double length_weight = 0.3;
  std::size_t overlap_n = 1;
  CanonTable canon;  // empty table = identity
};

inline void validate_config(const QualityConfig& cfg) {
  if (cfg.overlap_weight < 0.0 || cfg.length_weight < 0.0) {
    throw std::invalid_argument("quality weights: must be non-negative");
  }
  double sum = cfg.overlap_weight + cfg.length_weight;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("quality weights: must sum to 1");
  }
  if (cfg.overlap_n < 1) {
    throw std::invalid_argument("overlap_n: must be >= 1");
  }
}

// Composite quality score in [0, 1]; symmetric in (x, y).
inline double quality_q(const TokenSeq& x, const TokenSeq& y,
                        const QualityConfig& cfg) {
  validate_config(cfg);
  TokenSeq cx, cy;
  cx.tokens.reserve(x.size());
  cy.tokens.reserve(y.size());
  for (Token t : x.tokens) cx.tokens.push_back(cfg.canon(t));
  for (Token t : y.tokens) cy.tokens.push_back(cfg.canon(t));
  double overlap = ngram_overlap(cx, cy, cfg.overlap_n);
  double len_score;
  if (x.size() == 0 && y.size() == 0) {
    len_score = 1.0;
  } else {
    double lo = double(std::min(x.size(), y.size()));
    double hi = double(std::max(x.size(), y.size()));
    len_score = lo / hi;
  }
  return cfg.overlap_weight * overlap + cfg.length_weight * len_score;
}

}  // namespace wm::quality
