#pragma once

/**
 * Core vocabulary of the testbed: tokens, token sequences with provenance,
 * vocabularies, scheme identifiers, keys, messages, detection results.
 *
 * Everything downstream (PRF, schemes, attacks, harness) speaks these types;
 * none of them owns heavyweight state.
 */

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace wm {

using Token = std::uint32_t;

enum class Provenance : std::uint8_t {
  Corpus,
  Prompt,
  Generated,
  Watermarked,
  Attacked,
};

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Corpus: return "corpus";
    case Provenance::Prompt: return "prompt";
    case Provenance::Generated: return "generated";
    case Provenance::Watermarked: return "watermarked";
    case Provenance::Attacked: return "attacked";
  }
  throw std::invalid_argument("provenance: unknown enum value");
}

inline Provenance parse_provenance(const std::string& s) {
  if (s == "corpus") return Provenance::Corpus;
  if (s == "prompt") return Provenance::Prompt;
  if (s == "generated") return Provenance::Generated;
  if (s == "watermarked") return Provenance::Watermarked;
  if (s == "attacked") return Provenance::Attacked;
  throw std::invalid_argument("provenance: unknown value \"" + s + "\"");
}

struct TokenSeq {
  std::vector<Token> tokens;
  Provenance provenance = Provenance::Generated;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const TokenSeq&) const = default;
};

// ============================================================================
// Vocabulary
// ============================================================================

// Maps between token ids and surface forms. Special ids are ordinary
// members of the id space: begin_id, end_id, unknown_id < size().
class Vocabulary {
 public:
  Vocabulary() = default;

  // pre: surfaces are distinct and non-empty; specials index into surfaces
  Vocabulary(std::vector<std::string> surfaces, Token begin_id, Token end_id,
             Token unknown_id)
      : surfaces_(std::move(surfaces)),
        begin_(begin_id),
        end_(end_id),
        unknown_(unknown_id) {
    if (begin_ >= surfaces_.size() || end_ >= surfaces_.size() ||
        unknown_ >= surfaces_.size()) {
      throw std::invalid_argument("vocabulary: special id out of range");
    }
    index_.reserve(surfaces_.size());
    for (std::size_t i = 0; i < surfaces_.size(); ++i) {
      if (surfaces_[i].empty()) {
        throw std::invalid_argument("vocabulary: empty surface form at id " +
                                    std::to_string(i));
      }
      auto [it, inserted] = index_.emplace(surfaces_[i], Token(i));
      if (!inserted) {
        throw std::invalid_argument("vocabulary: duplicate surface form \"" +
                                    surfaces_[i] + "\"");
      }
    }
  }

  std::size_t size() const { return surfaces_.size(); }
  Token begin_id() const { return begin_; }
  Token end_id() const { return end_; }
  Token unknown_id() const { return unknown_; }

  const std::string& surface(Token id) const {
    if (id >= surfaces_.size()) {
      throw std::out_of_range("vocabulary: token id " + std::to_string(id) +
                              " out of range");
    }
    return surfaces_[id];
  }

  // Unknown surfaces map to unknown_id.
  Token id_of(const std::string& surface) const {
    auto it = index_.find(surface);
    return it == index_.end() ? unknown_ : it->second;
  }

  bool contains(const std::string& surface) const {
    return index_.count(surface) != 0;
  }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, Token> index_;
  Token begin_ = 0;
  Token end_ = 0;
  Token unknown_ = 0;
};

// ============================================================================
// Schemes, keys, messages
// ============================================================================

enum class SchemeId : std::uint8_t {
  DistShift = 0,
  Exp = 1,
  Binary = 2,
  Inverse = 3,
};

inline constexpr std::array<SchemeId, 4> kAllSchemes = {
    SchemeId::DistShift, SchemeId::Exp, SchemeId::Binary, SchemeId::Inverse};

inline const char* scheme_name(SchemeId s) {
  switch (s) {
    case SchemeId::DistShift: return "dist_shift";
    case SchemeId::Exp: return "exp";
    case SchemeId::Binary: return "binary";
    case SchemeId::Inverse: return "inverse";
  }
  throw std::invalid_argument("scheme: unknown enum value");
}

inline SchemeId parse_scheme(const std::string& s) {
  if (s == "dist_shift") return SchemeId::DistShift;
  if (s == "exp") return SchemeId::Exp;
  if (s == "binary") return SchemeId::Binary;
  if (s == "inverse") return SchemeId::Inverse;
  throw std::invalid_argument("scheme: unknown value \"" + s + "\"");
}

// Generation/detection parameters bound into a key. Field semantics:
//   window_h        context window length hashed into the PRF (0 = global)
//   key_len         position-cycle length for the Inverse scheme
//   green_fraction  green-list fraction gamma (DistShift)
//   bias            green-list logit bias beta (DistShift)
//   skip_prob       per-position probability of sampling unwatermarked
//   temperature     sampling temperature during watermarked generation
struct KeyParams {
  std::uint32_t window_h = 3;
  std::uint32_t key_len = 4;
  double green_fraction = 0.5;
  double bias = 4.0;
  double skip_prob = 0.025;
  double temperature = 1.0;

  bool operator==(const KeyParams&) const = default;
};

struct WatermarkKey {
  SchemeId scheme = SchemeId::DistShift;
  std::uint64_t seed = 0;
  std::array<std::uint8_t, 32> secret{};
  KeyParams params;

  bool operator==(const WatermarkKey&) const = default;
};

// Embedded message: value in [0, space). space == 1 means presence-only.
struct Message {
  std::uint64_t value = 0;
  std::uint64_t space = 1;

  bool operator==(const Message&) const = default;
};

inline void validate_message(const Message& m) {
  if (m.space == 0) {
    throw std::invalid_argument("message.space: must be >= 1");
  }
  if (m.value >= m.space) {
    throw std::invalid_argument("message.value: must be < message.space");
  }
}

struct DetectionResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::uint32_t scored_tokens = 0;
};

}  // namespace wm
