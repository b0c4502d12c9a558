#pragma once

/**
 * Pluggable external-judge interface for text grading.
 *
 * A Judge returns a grade out of 100 for a (prompt, response) pair;
 * judge_score scales it to [0, 1]. The stub judge reproduces quality_q so
 * every caller runs offline and deterministically; the HTTP judge posts the
 * filled grading template to an external endpoint and parses the reply.
 * The grading and paraphrase instruction templates also ship as files under
 * data/ for use with external pipelines; the embedded constants here are
 * the source of truth and the files must match byte for byte.
 */

#include <wm/quality.hpp>
#include <wm/text.hpp>
#include <wm/types.hpp>

#include <cctype>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace wm::judge {

inline const std::string& grading_template() {
  static const std::string t =
      "You are given a prompt and a response, and you provide a grade out of "
      "100 measuring the quality of the response, in terms of accuracy, level "
      "of details, and typographical, grammatical and lexical correctness.\n"
      "Remove points as soon as one of the criteria is missed.\n"
      "Prompt:{}, Response:{}";
  return t;
}

inline const std::string& paraphrase_template() {
  static const std::string t =
      "You are an expert copy-editor.\n"
      "Please rewrite the following text in your own voice and paraphrase all "
      "sentences.\n"
      "Ensure that the final output contains the same information as the "
      "original text and has roughly the same length.\n"
      "Do not leave out any important details when rewriting in your own "
      "voice.\n"
      "Do not include any information that is not present in the original "
      "text.\n"
      "Do not respond with a greeting or any other extraneous information. "
      "Skip the preamble. Just rewrite the text directly.";
  return t;
}

// Replaces each "{}" slot in order; throws if slots and values disagree.
inline std::string fill_template(const std::string& tmpl,
                                 const std::vector<std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 64 * values.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (i + 1 < tmpl.size() && tmpl[i] == '{' && tmpl[i + 1] == '}') {
      if (next >= values.size()) {
        throw std::invalid_argument("fill_template: more slots than values");
      }
      out += values[next++];
      i += 2;
    } else {
      out += tmpl[i++];
    }
  }
  if (next != values.size()) {
    throw std::invalid_argument("fill_template: more values than slots");
  }
  return out;
}

// Extracts the first integer in the reply as a grade out of 100.
inline double parse_grade(const std::string& reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isdigit(static_cast<unsigned char>(reply[i]))) {
    ++i;
  }
  if (i == reply.size()) {
    throw std::invalid_argument("judge reply: no grade found");
  }
  std::size_t j = i;
  long value = 0;
  while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) {
    value = value * 10 + (reply[j] - '0');
    if (value > 1000) break;
    ++j;
  }
  if (value < 0 || value > 100) {
    throw std::invalid_argument("judge reply: grade outside 0..100");
  }
  return double(value);
}

class Judge {
 public:
  virtual ~Judge() = default;
  // Grade out of 100 for a response to a prompt.
  virtual double grade(const std::string& prompt,
                       const std::string& response) const = 0;
};

// Deterministic offline judge: grades with the composite quality score of
// the tokenized pair, scaled to 0..100.
class StubJudge final : public Judge {
 public:
  StubJudge(const Vocabulary& vocab, quality::QualityConfig cfg)
      : vocab_(vocab), cfg_(std::move(cfg)) {}

  double grade(const std::string& prompt,
               const std::string& response) const override {
    TokenSeq a, b;
    a.tokens = text::to_ids(text::tokenize(prompt), vocab_);
    b.tokens = text::to_ids(text::tokenize(response), vocab_);
    return 100.0 * quality::quality_q(a, b, cfg_);
  }

 private:
  const Vocabulary& vocab_;
  quality::QualityConfig cfg_;
};

// Scaled score in [0, 1].
inline double judge_score(const std::string& prompt,
                          const std::string& response, const Judge& judge) {
  double g = judge.grade(prompt, response);
  if (g < 0.0 || g > 100.0) {
    throw std::invalid_argument("judge: grade outside 0..100");
  }
  return g / 100.0;
}

}  // namespace wm::judge
