#pragma once

/**
 * Count-based n-gram language model.
 *
 * Additive-alpha smoothed conditional tables for orders 1..n with hard
 * backoff: the distribution comes from the longest context that was seen
 * in training; unseen contexts fall through to shorter ones, ending at the
 * always-present unigram table. Every probability is strictly positive, so
 * log-space consumers never see -inf.
 *
 * Generation is ancestral sampling with an optional per-step filter hook
 * through which the watermark schemes reshape or override the sampling
 * distribution. The filter sees the distribution after temperature scaling.
 */

#include <wm/rng.hpp>
#include <wm/types.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace wm::lm {

namespace detail {

// Exact context packing: up to 3 context tokens of < 2^20 each.
// Layout: bits 60..63 length, bits 40..59 / 20..39 / 0..19 token ids,
// oldest first. No hashing, so no collisions.
inline std::uint64_t pack_context(std::span<const Token> ctx) {
  if (ctx.size() > 3) throw std::invalid_argument("context: longer than 3");
  std::uint64_t key = std::uint64_t(ctx.size()) << 60;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (ctx[i] >= (1u << 20)) {
      throw std::invalid_argument("context: token id exceeds 2^20");
    }
    key |= std::uint64_t(ctx[i]) << (40 - 20 * i);
  }
  return key;
}

}  // namespace detail

class NGramModel {
 public:
  // pre: order in [1, 4]; alpha > 0
  NGramModel(Vocabulary vocab, std::uint32_t order, double alpha)
      : vocab_(std::move(vocab)), order_(order), alpha_(alpha) {
    if (order_ < 1 || order_ > 4) {
      throw std::invalid_argument("order: must lie in [1, 4]");
    }
    if (!(alpha_ > 0.0)) {
      throw std::invalid_argument("alpha: must be > 0");
    }
  }

  const Vocabulary& vocab() const { return vocab_; }
  std::uint32_t order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t context_count() const { return cells_.size(); }

  // Counts one document. Virtual begin tokens pad the left edge; an
  // end-of-text event is appended.
  void observe(const std::vector<Token>& doc) {
    std::vector<Token> seq;
    seq.reserve(doc.size() + order_);
    for (std::uint32_t i = 0; i + 1 < order_; ++i) {
      seq.push_back(vocab_.begin_id());
    }
    seq.insert(seq.end(), doc.begin(), doc.end());
    seq.push_back(vocab_.end_id());
    std::size_t lead = order_ >= 1 ? order_ - 1 : 0;
    for (std::size_t t = lead; t < seq.size(); ++t) {
      for (std::uint32_t k = 1; k <= order_; ++k) {
        std::span<const Token> ctx(seq.data() + t - (k - 1), k - 1);
        events_.emplace_back(detail::pack_context(ctx), seq[t]);
      }
    }
  }

  // Builds the count tables from buffered events. Call once after the
  // observe() calls; one sort replaces per-event table updates.
  void finalize() {
    if (!events_.empty()) {
      std::sort(events_.begin(), events_.end());
      for (std::size_t i = 0; i < events_.size();) {
        std::uint64_t key = events_[i].first;
        index_.emplace(key, cells_.size());
        cells_.emplace_back();
        Cell& cell = cells_.back();
        while (i < events_.size() && events_[i].first == key) {
          Token tok = events_[i].second;
          std::uint32_t n = 0;
          while (i < events_.size() && events_[i].first == key &&
                 events_[i].second == tok) {
            ++n;
            ++i;
          }
          cell.items.emplace_back(tok, n);
        }
      }
      events_.clear();
      events_.shrink_to_fit();
    }
    for (auto& cell : cells_) {
      std::sort(cell.items.begin(), cell.items.end());
      cell.total = 0;
      for (const auto& [tok, n] : cell.items) cell.total += n;
    }
    finalized_ = true;
  }

  // Smoothed distribution for the longest seen suffix of `context`.
  // out is resized to |V|; entries are strictly positive and sum to 1.
  void next_dist(std::span<const Token> context, std::vector<double>& out) const {
    const Cell& cell = backoff_cell(context);
    std::size_t v = vocab_.size();
    out.assign(v, 0.0);
    double denom = double(cell.total) + alpha_ * double(v);
    double base = alpha_ / denom;
    for (std::size_t i = 0; i < v; ++i) out[i] = base;
    for (const auto& [tok, n] : cell.items) out[tok] += double(n) / denom;
  }

  std::vector<double> next_dist(std::span<const Token> context) const {
    std::vector<double> out;
    next_dist(context, out);
    return out;
  }

  // P(token | context) from the same backoff walk as next_dist.
  double prob(std::span<const Token> context, Token token) const {
    if (token >= vocab_.size()) {
      throw std::out_of_range("prob: token id out of range");
    }
    const Cell& cell = backoff_cell(context);
    double denom = double(cell.total) + alpha_ * double(vocab_.size());
    auto it = std::lower_bound(
        cell.items.begin(), cell.items.end(),
        std::pair<Token, std::uint32_t>(token, 0),
        [](const auto& a, const auto& b) { return a.first < b.first; });
    double n = (it != cell.items.end() && it->first == token) ? it->second : 0;
    return (n + alpha_) / denom;
  }

  nlohmann::json cells_to_json() const;
  void cells_from_json(const nlohmann::json& j);

 private:
  struct Cell {
    std::uint64_t total = 0;
    std::vector<std::pair<Token, std::uint32_t>> items;
  };

  const Cell& backoff_cell(std::span<const Token> context) const {
    if (!finalized_) throw std::logic_error("model: finalize() not called");
    std::size_t take = std::min<std::size_t>(context.size(), order_ - 1);
    std::span<const Token> eff = context.subspan(context.size() - take, take);
    for (std::size_t len = eff.size();; --len) {
      auto it = index_.find(
          detail::pack_context(eff.subspan(eff.size() - len, len)));
      if (it != index_.end()) return cells_[it->second];
      if (len == 0) break;
    }
    throw std::logic_error("model: unigram table missing (untrained model)");
  }

  Vocabulary vocab_;
  std::uint32_t order_;
  double alpha_;
  bool finalized_ = false;
  std::vector<std::pair<std::uint64_t, Token>> events_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::vector<Cell> cells_;
};

inline NGramModel train_ngram(Vocabulary vocab,
                              const std::vector<TokenSeq>& docs,
                              std::uint32_t order, double alpha) {
  NGramModel m(std::move(vocab), order, alpha);
  for (const auto& d : docs) m.observe(d.tokens);
  m.finalize();
  return m;
}

// ============================================================================
// Generation
// ============================================================================

struct StepInfo {
  // Tokens emitted so far in this generation (excludes the prompt).
  const std::vector<Token>& emitted;
  std::size_t position;
};

// May reshape `dist` in place (must leave a valid distribution) and may
// return a token to force, bypassing sampling.
using StepFilter =
    std::function<std::optional<Token>(const StepInfo&, std::vector<double>&)>;

// Sees every emitted token right after it is chosen (end-of-text excluded).
using StepObserver = std::function<void(const StepInfo&, Token)>;

struct GenerateOptions {
  std::size_t max_tokens = 256;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  StepFilter filter;
  StepObserver observer;
};

namespace detail {

// In-place temperature scaling. Temperatures below 1e-6 collapse to argmax.
inline void apply_temperature(std::vector<double>& dist, double temperature) {
  if (temperature == 1.0) return;
  if (temperature < 1e-6) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
      if (dist[i] > dist[best]) best = i;
    }
    std::fill(dist.begin(), dist.end(), 0.0);
    dist[best] = 1.0;
    return;
  }
  double inv = 1.0 / temperature;
  double mx = *std::max_element(dist.begin(), dist.end());
  double lmx = std::log(mx);
  double sum = 0.0;
  for (double& p : dist) {
    p = std::exp((std::log(p) - lmx) * inv);
    sum += p;
  }
  for (double& p : dist) p /= sum;
}

inline std::size_t sample_index(const std::vector<double>& dist, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return i;
  }
  return dist.size() - 1;
}

}  // namespace detail

// Ancestral sampling continuation. The prompt seeds the model context but
// is not part of the returned sequence; generation stops at max_tokens or
// on the end-of-text token (which is not emitted).
inline TokenSeq generate(const NGramModel& model, const TokenSeq& prompt,
                         const GenerateOptions& opts) {
  rng::SplitMix64 g(opts.seed);
  std::vector<Token> context;
  for (std::uint32_t i = 0; i + 1 < model.order(); ++i) {
    context.push_back(model.vocab().begin_id());
  }
  context.insert(context.end(), prompt.tokens.begin(), prompt.tokens.end());

  TokenSeq out;
  out.provenance = Provenance::Generated;
  std::vector<double> dist;
  for (std::size_t t = 0; t < opts.max_tokens; ++t) {
    model.next_dist(context, dist);
    detail::apply_temperature(dist, opts.temperature);
    std::optional<Token> forced;
    if (opts.filter) {
      forced = opts.filter(StepInfo{out.tokens, t}, dist);
    }
    Token tok;
    if (forced) {
      tok = *forced;
      if (tok >= model.vocab().size()) {
        throw std::out_of_range("filter: forced token out of range");
      }
    } else {
      tok = Token(detail::sample_index(dist, g.uniform()));
    }
    if (tok == model.vocab().end_id()) break;
    if (opts.observer) {
      opts.observer(StepInfo{out.tokens, t}, tok);
    }
    out.tokens.push_back(tok);
    context.push_back(tok);
  }
  return out;
}

// exp(-(1/T) * sum log P(x_t | x_<t)) with begin-padded left contexts.
inline double perplexity(const NGramModel& model, const TokenSeq& seq) {
  if (seq.tokens.empty()) {
    throw std::invalid_argument("perplexity: empty sequence");
  }
  std::vector<Token> buf;
  for (std::uint32_t i = 0; i + 1 < model.order(); ++i) {
    buf.push_back(model.vocab().begin_id());
  }
  buf.insert(buf.end(), seq.tokens.begin(), seq.tokens.end());
  std::size_t lead = buf.size() - seq.tokens.size();
  double sum = 0.0;
  for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
    std::span<const Token> ctx(buf.data(), lead + t);
    sum += std::log(model.prob(ctx, seq.tokens[t]));
  }
  return std::exp(-sum / double(seq.tokens.size()));
}

// ============================================================================
// Model files (JSONL count tables)
// ============================================================================

inline void save_model(const NGramModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for write: " + path);
  const Vocabulary& v = model.vocab();
  nlohmann::json header{{"type", "ngram"},
                        {"order", model.order()},
                        {"alpha", model.alpha()},
                        {"begin", v.begin_id()},
                        {"end", v.end_id()},
                        {"unknown", v.unknown_id()}};
  std::vector<std::string> surfaces;
  for (std::size_t i = 0; i < v.size(); ++i) surfaces.push_back(v.surface(Token(i)));
  header["vocab"] = surfaces;
  out << header.dump() << "\n";
  out << model.cells_to_json().dump() << "\n";
}

inline NGramModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + " line 1: missing model header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + " line 1: " + e.what());
  }
  if (header.value("type", "") != "ngram") {
    throw std::runtime_error(path + ": not an ngram model file");
  }
  Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>(),
                   header.at("begin").get<Token>(),
                   header.at("end").get<Token>(),
                   header.at("unknown").get<Token>());
  NGramModel m(std::move(vocab), header.at("order").get<std::uint32_t>(),
               header.at("alpha").get<double>());
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + " line 2: missing count tables");
  }
  try {
    m.cells_from_json(nlohmann::json::parse(line));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + " line 2: " + e.what());
  }
  return m;
}

inline nlohmann::json NGramModel::cells_to_json() const {
  // Context keys sorted for byte-stable output.
  std::vector<std::uint64_t> keys;
  keys.reserve(index_.size());
  for (const auto& [key, idx] : index_) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  nlohmann::json rows = nlohmann::json::array();
  for (std::uint64_t key : keys) {
    const Cell& cell = cells_[index_.at(key)];
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [tok, n] : cell.items) {
      items.push_back({tok, n});
    }
    rows.push_back({{"ctx", key}, {"items", std::move(items)}});
  }
  return rows;
}

inline void NGramModel::cells_from_json(const nlohmann::json& rows) {
  index_.clear();
  cells_.clear();
  for (const auto& row : rows) {
    std::uint64_t key = row.at("ctx").get<std::uint64_t>();
    Cell cell;
    for (const auto& item : row.at("items")) {
      cell.items.emplace_back(item.at(0).get<Token>(),
                              item.at(1).get<std::uint32_t>());
    }
    index_.emplace(key, cells_.size());
    cells_.push_back(std::move(cell));
  }
  finalize();
}

}  // namespace wm::lm
