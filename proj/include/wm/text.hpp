#pragma once

/**
 * Word-level tokenization. Rules, frozen:
 *   - input is ASCII-lowercased
 *   - whitespace separates tokens
 *   - . , ; : ! ? ( ) " are standalone tokens wherever they appear
 *   - apostrophes stay inside their word ("don't" is one token)
 *   - any other non-alphanumeric byte acts as whitespace
 *
 * Detokenization joins with single spaces, omitting the space before
 * closing punctuation. Round-tripping surface text is not a goal; stable
 * ids for the model and the quality metrics are.
 */

#include <wm/types.hpp>

#include <cctype>
#include <string>
#include <vector>

namespace wm::text {

inline bool is_punct_token(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' ||
         c == '?' || c == '(' || c == ')' || c == '"';
}

inline std::vector<std::string> tokenize(const std::string& input) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char raw : input) {
    char c = char(std::tolower(static_cast<unsigned char>(raw)));
    if (is_punct_token(c)) {
      flush();
      out.emplace_back(1, c);
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline std::vector<Token> to_ids(const std::vector<std::string>& words,
                                 const Vocabulary& vocab) {
  std::vector<Token> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(vocab.id_of(w));
  return out;
}

inline std::string detokenize(const std::vector<Token>& tokens,
                              const Vocabulary& vocab) {
  std::string out;
  for (Token t : tokens) {
    const std::string& s = vocab.surface(t);
    bool closes = s.size() == 1 && is_punct_token(s[0]) && s != "(" && s != "\"";
    if (!out.empty() && !closes) out.push_back(' ');
    out += s;
  }
  return out;
}

}  // namespace wm::text
