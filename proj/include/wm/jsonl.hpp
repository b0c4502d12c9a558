#pragma once

/**
 * JSON-lines persistence for token sequences and generic records.
 *
 * One JSON object per line, "\n" terminated. Parse errors carry 1-based
 * line numbers. Unknown fields in a record are not an error; generic
 * readers hand back the full object so callers can round-trip them.
 */

#include <wm/types.hpp>

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wm::jsonl {

inline std::vector<nlohmann::json> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return out;
}

inline void write_records(const std::vector<nlohmann::json>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for write: " + path);
  for (const auto& r : records) {
    out << r.dump() << "\n";
  }
}

inline nlohmann::json seq_to_json(const TokenSeq& seq) {
  return nlohmann::json{{"tokens", seq.tokens},
                        {"provenance", provenance_name(seq.provenance)}};
}

// Unknown fields are ignored, not rejected.
inline TokenSeq seq_from_json(const nlohmann::json& j) {
  TokenSeq seq;
  seq.tokens = j.at("tokens").get<std::vector<Token>>();
  seq.provenance = parse_provenance(j.at("provenance").get<std::string>());
  return seq;
}

inline std::vector<TokenSeq> read_seqs(const std::string& path) {
  std::vector<TokenSeq> out;
  std::size_t lineno = 0;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(seq_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return out;
}

inline void write_seqs(const std::vector<TokenSeq>& seqs,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for write: " + path);
  for (const auto& s : seqs) {
    out << seq_to_json(s).dump() << "\n";
  }
}

}  // namespace wm::jsonl
