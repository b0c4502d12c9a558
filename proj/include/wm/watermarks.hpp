#pragma once

/**
 * Watermarking schemes as per-step sampling transforms, plus detection.
 *
 * All four schemes share one skeleton. At each generation step the PRF is
 * keyed by (secret, message, context window of the last window_h emitted
 * tokens, begin-padded at the left edge); a per-position skip draw leaves
 * a skip_prob fraction of positions unwatermarked. Detection rescans the
 * text with the same PRF, scores positions with full real windows
 * (t >= window_h), excludes skip positions, and scores each repeated PRF
 * input once.
 *
 * Schemes:
 *   DistShift  multiplies green-list mass by e^bias and renormalizes before
 *              sampling; detection counts green tokens against an exact
 *              binomial upper tail.
 *   Exp        forces argmax_v r_v^(1/p_v) for PRF vector r; detection sums
 *              -ln(1 - r at the observed token) against a Gamma(T, 1) tail.
 *   Binary     walks the token id's bits most-significant first, choosing
 *              bit 1 iff u_j < (conditional mass of the 1-subtree);
 *              detection sums -ln(u_j) or -ln(1 - u_j) per observed bit
 *              against a Gamma(bits * T, 1) tail.
 *   Inverse    inverse-transform samples through a keyed permutation: the
 *              pair (u_t, perm_t) comes from the window PRF extended with
 *              the cycle index c = t mod key_len; the emitted token is the
 *              first in perm order whose cumulative mass reaches u_t.
 *              Detection compares D = mean |u_t - normalized rank of the
 *              observed token in perm_t| against reference keys derived
 *              per (key, text), with
 *              p = (1 + #{D_ref <= D_obs}) / (ref_count + 1).
 *
 * Inverse reference keys, frozen: ref secret k is
 *   SHA-256("wm/inverse-ref/v1" || key secret (32) ||
 *           SHA-256(token ids, u32 LE each) (32) || k as u64 LE).
 * Per-text derivation keeps reference D statistics independent across texts.
 * Reference ranks are drawn directly as floor(uniform * |V|) instead of
 * materializing each reference permutation: the rank of a fixed token in a
 * pseudorandom permutation is uniform over 0..|V|-1 and independent across
 * distinct PRF inputs, so the two procedures sample the same D law while
 * the direct draw costs two PRF words per (reference, position).
 */

#include <wm/keygen.hpp>
#include <wm/lm.hpp>
#include <wm/prf.hpp>
#include <wm/sha256.hpp>
#include <wm/stats.hpp>
#include <wm/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace wm::marks {

inline std::uint32_t bits_per_token(std::size_t vocab_size) {
  std::uint32_t b = 1;
  while ((std::size_t(1) << b) < vocab_size) ++b;
  return b;
}

struct VerifyOptions {
  Message message{};
  std::uint32_t inverse_ref_count = 100;
};

// Per-position PRF values, for embed/verify consistency checks.
// Values by scheme: DistShift [green bit], Exp [r at token],
// Binary [u_0 .. u_{B-1}], Inverse [u_c, normalized rank].
struct StepTrace {
  bool skipped = false;
  bool scored = false;
  std::vector<double> values;
};

struct Trace {
  std::vector<StepTrace> steps;
};

struct ScoreOutcome {
  double statistic = 0.0;
  std::uint32_t scored = 0;
};

namespace detail {

inline std::vector<Token> window_at(std::span<const Token> seq, std::size_t t,
                                    std::uint32_t h, Token begin_id) {
  std::vector<Token> w(h);
  for (std::uint32_t i = 0; i < h; ++i) {
    std::size_t back = h - i;  // window position i refers to seq[t - back]
    w[i] = back > t ? begin_id : seq[t - back];
  }
  return w;
}

// Exact dedup key for a (window, cycle-index) PRF input.
inline std::string dedup_key(std::span<const Token> w, std::uint32_t cycle) {
  std::string key(4 * w.size() + 4, '\0');
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (int b = 0; b < 4; ++b) {
      key[4 * i + b] = char(w[i] >> (8 * b));
    }
  }
  for (int b = 0; b < 4; ++b) {
    key[4 * w.size() + b] = char(cycle >> (8 * b));
  }
  return key;
}

// Inverse per-step values: threshold u and the permutation ordering the
// cumulative distribution, both from the window PRF at cycle index c.
inline double inverse_u(const prf::WindowPrf& prf, std::uint32_t c) {
  return prf.uniform_ext(prf::kSaltInverseU, c);
}

inline void inverse_perm(const prf::WindowPrf& prf, std::uint32_t c,
                         std::vector<Token>& perm) {
  prf.fill_permutation(prf.stream_ext(prf::kSaltInversePerm, c), perm);
}

inline double clamp_unit(double u) {
  return std::min(std::max(u, 0x1.0p-64), 1.0 - 0x1.0p-53);
}

// Green mask for one window: first floor(gamma * V) permutation entries.
inline void fill_green_mask(const prf::WindowPrf& prf, double gamma,
                            std::vector<Token>& perm_buf,
                            std::vector<std::uint8_t>& mask) {
  std::size_t v = mask.size();
  perm_buf.resize(v);
  prf.fill_permutation(prf.stream(prf::kSaltGreen), perm_buf);
  std::fill(mask.begin(), mask.end(), 0);
  std::size_t g = std::size_t(gamma * double(v));
  if (g == 0 || g >= v) {
    throw std::invalid_argument(
        "green_fraction: degenerate partition for this vocabulary size");
  }
  for (std::size_t i = 0; i < g; ++i) mask[perm_buf[i]] = 1;
}

}  // namespace detail

// ============================================================================
// Embedding
// ============================================================================

// Watermarked continuation. The transform runs on the model's distribution
// after temperature scaling; skip positions sample the plain distribution.
inline TokenSeq generate_watermarked(const lm::NGramModel& model,
                                     const WatermarkKey& key,
                                     const Message& message,
                                     const TokenSeq& prompt,
                                     std::size_t max_tokens,
                                     std::uint64_t seed,
                                     Trace* trace = nullptr) {
  validate_message(message);
  validate_params(key.params);
  const std::size_t v = model.vocab().size();
  const Token begin_id = model.vocab().begin_id();
  const KeyParams& p = key.params;

  // Shared per-generation scratch, reused across steps.
  auto perm_buf = std::make_shared<std::vector<Token>>();
  auto mask = std::make_shared<std::vector<std::uint8_t>>(v);
  auto rvec = std::make_shared<std::vector<double>>();
  auto cum = std::make_shared<std::vector<double>>();
  auto ubits = std::make_shared<std::vector<double>>();
  auto inv_vals = std::make_shared<std::array<double, 2>>();
  auto skipped_flags = std::make_shared<std::vector<bool>>();
  const double bias_factor = std::exp(p.bias);

  lm::GenerateOptions opts;
  opts.max_tokens = max_tokens;
  opts.temperature = p.temperature;
  opts.seed = seed;
  if (trace) trace->steps.clear();

  opts.filter = [&key, &message, begin_id, v, bias_factor, perm_buf, mask,
                 rvec, cum, ubits, inv_vals, skipped_flags](
                    const lm::StepInfo& info,
                    std::vector<double>& dist) -> std::optional<Token> {
    const KeyParams& kp = key.params;
    std::vector<Token> window = detail::window_at(
        info.emitted, info.position, kp.window_h, begin_id);
    prf::WindowPrf prf(key.secret, message.value, window);
    bool skip = kp.skip_prob > 0.0 && prf.skip(kp.skip_prob);
    skipped_flags->push_back(skip);
    if (skip) return std::nullopt;

    switch (key.scheme) {
      case SchemeId::DistShift: {
        detail::fill_green_mask(prf, kp.green_fraction, *perm_buf, *mask);
        double sum = 0.0;
        for (std::size_t i = 0; i < v; ++i) {
          if ((*mask)[i]) dist[i] *= bias_factor;
          sum += dist[i];
        }
        for (double& d : dist) d /= sum;
        return std::nullopt;  // sample from the shifted distribution
      }
      case SchemeId::Exp: {
        rvec->resize(v);
        for (std::size_t i = 0; i < v; ++i) {
          (*rvec)[i] = prf.uniform_ext(prf::kSaltExp, i);
        }
        // argmax r^(1/p) == argmax log(r)/p; r clamped away from 0.
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v; ++i) {
          double score = std::log(detail::clamp_unit((*rvec)[i])) / dist[i];
          if (score > best_score) {
            best_score = score;
            best = i;
          }
        }
        return Token(best);
      }
      case SchemeId::Binary: {
        const std::uint32_t bits = bits_per_token(v);
        cum->assign(v + 1, 0.0);
        for (std::size_t i = 0; i < v; ++i) {
          (*cum)[i + 1] = (*cum)[i] + dist[i];
        }
        auto mass = [&](std::size_t lo, std::size_t hi) {
          lo = std::min(lo, v);
          hi = std::min(hi, v);
          return lo >= hi ? 0.0 : (*cum)[hi] - (*cum)[lo];
        };
        std::size_t lo = 0;
        std::size_t width = std::size_t(1) << bits;
        ubits->clear();
        for (std::uint32_t j = 0; j < bits; ++j) {
          std::size_t mid = lo + width / 2;
          double m1 = mass(mid, lo + width);
          double m0 = mass(lo, mid);
          // Strict comparison: q == 0 never descends right, q == 1 always
          // does, so the walk cannot enter a zero-mass subtree.
          double q = m1 / (m0 + m1);
          double u = prf.uniform_ext(prf::kSaltBinary, j);
          ubits->push_back(u);
          bool bit = u < q;
          if (bit) lo = mid;
          width /= 2;
        }
        return Token(lo);
      }
      case SchemeId::Inverse: {
        std::uint32_t c = std::uint32_t(info.position % kp.key_len);
        double u = detail::inverse_u(prf, c);
        perm_buf->resize(v);
        detail::inverse_perm(prf, c, *perm_buf);
        const auto& perm = *perm_buf;
        double acc = 0.0;
        std::size_t pick = v - 1;
        for (std::size_t i = 0; i < v; ++i) {
          acc += dist[perm[i]];
          if (acc >= u) {
            pick = i;
            break;
          }
        }
        (*inv_vals) = {u, double(pick) / double(v - 1)};
        return perm[pick];
      }
    }
    throw std::invalid_argument("scheme: unknown enum value");
  };

  if (trace) {
    opts.observer = [&key, mask, rvec, ubits, inv_vals, skipped_flags, trace](
                        const lm::StepInfo& info, Token tok) {
      StepTrace st;
      st.skipped = (*skipped_flags)[info.position];
      if (!st.skipped) {
        switch (key.scheme) {
          case SchemeId::DistShift:
            st.values = {double((*mask)[tok])};
            break;
          case SchemeId::Exp:
            st.values = {(*rvec)[tok]};
            break;
          case SchemeId::Binary:
            st.values = *ubits;
            break;
          case SchemeId::Inverse:
            st.values = {(*inv_vals)[0], (*inv_vals)[1]};
            break;
        }
      }
      trace->steps.push_back(std::move(st));
    };
  }

  TokenSeq out = lm::generate(model, prompt, opts);
  out.provenance = Provenance::Watermarked;
  return out;
}

// ============================================================================
// Detection
// ============================================================================

namespace detail {

struct ScoredPosition {
  std::size_t t;
  Token token;
};

// Shared scoring walk: positions with full real windows, skip positions
// excluded, repeated PRF inputs scored once. The PRF input is the window,
// plus the cycle index for Inverse.
inline std::vector<ScoredPosition> scored_positions(const WatermarkKey& key,
                                                    const Message& message,
                                                    const TokenSeq& text,
                                                    Trace* trace) {
  const KeyParams& p = key.params;
  const std::uint32_t h = p.window_h;
  std::vector<ScoredPosition> out;
  if (trace) trace->steps.assign(text.size(), {});
  std::unordered_set<std::string> seen;
  for (std::size_t t = h; t < text.size(); ++t) {
    std::span<const Token> w(text.tokens.data() + t - h, h);
    prf::WindowPrf prf(key.secret, message.value, w);
    if (p.skip_prob > 0.0 && prf.skip(p.skip_prob)) {
      if (trace) (*trace).steps[t].skipped = true;
      continue;
    }
    std::uint32_t cycle =
        key.scheme == SchemeId::Inverse ? std::uint32_t(t % p.key_len) : 0;
    if (!seen.insert(dedup_key(w, cycle)).second) continue;
    out.push_back({t, text.tokens[t]});
    if (trace) (*trace).steps[t].scored = true;
  }
  return out;
}

}  // namespace detail

// Raw detection statistic over the scored positions. vocab_size must match
// the generating model's vocabulary.
inline ScoreOutcome score_statistic(SchemeId scheme, const WatermarkKey& key,
                                    const TokenSeq& text,
                                    std::size_t vocab_size,
                                    const Message& message = {},
                                    Trace* trace = nullptr) {
  if (scheme != key.scheme) {
    throw std::invalid_argument("scheme: does not match the key's scheme");
  }
  validate_message(message);
  validate_params(key.params);
  for (Token tok : text.tokens) {
    if (tok >= vocab_size) {
      throw std::out_of_range("text: token id outside the vocabulary");
    }
  }
  const KeyParams& p = key.params;
  auto positions = detail::scored_positions(key, message, text, trace);

  ScoreOutcome out;
  out.scored = std::uint32_t(positions.size());
  if (positions.empty()) return out;

  switch (scheme) {
    case SchemeId::DistShift: {
      std::vector<Token> perm_buf;
      std::vector<std::uint8_t> mask(vocab_size);
      std::uint32_t greens = 0;
      for (const auto& sp : positions) {
        std::span<const Token> w(text.tokens.data() + sp.t - p.window_h,
                                 p.window_h);
        prf::WindowPrf prf(key.secret, message.value, w);
        detail::fill_green_mask(prf, p.green_fraction, perm_buf, mask);
        bool green = mask[sp.token];
        greens += green;
        if (trace) (*trace).steps[sp.t].values = {double(green)};
      }
      out.statistic = double(greens);
      break;
    }
    case SchemeId::Exp: {
      double s = 0.0;
      for (const auto& sp : positions) {
        std::span<const Token> w(text.tokens.data() + sp.t - p.window_h,
                                 p.window_h);
        prf::WindowPrf prf(key.secret, message.value, w);
        double r = prf.uniform_ext(prf::kSaltExp, sp.token);
        s += -std::log1p(-detail::clamp_unit(r));
        if (trace) (*trace).steps[sp.t].values = {r};
      }
      out.statistic = s;
      break;
    }
    case SchemeId::Binary: {
      const std::uint32_t bits = bits_per_token(vocab_size);
      double s = 0.0;
      for (const auto& sp : positions) {
        std::span<const Token> w(text.tokens.data() + sp.t - p.window_h,
                                 p.window_h);
        prf::WindowPrf prf(key.secret, message.value, w);
        for (std::uint32_t j = 0; j < bits; ++j) {
          double u = prf.uniform_ext(prf::kSaltBinary, j);
          if (trace) (*trace).steps[sp.t].values.push_back(u);
          u = detail::clamp_unit(u);
          bool bit = (sp.token >> (bits - 1 - j)) & 1;
          s += bit ? -std::log(u) : -std::log1p(-u);
        }
      }
      out.statistic = s;
      break;
    }
    case SchemeId::Inverse: {
      std::vector<Token> perm(vocab_size);
      double acc = 0.0;
      for (const auto& sp : positions) {
        std::span<const Token> w(text.tokens.data() + sp.t - p.window_h,
                                 p.window_h);
        prf::WindowPrf prf(key.secret, message.value, w);
        std::uint32_t c = std::uint32_t(sp.t % p.key_len);
        double u = detail::inverse_u(prf, c);
        detail::inverse_perm(prf, c, perm);
        std::size_t rank = 0;
        while (perm[rank] != sp.token) ++rank;
        double rank_norm = double(rank) / double(vocab_size - 1);
        acc += std::fabs(u - rank_norm);
        if (trace) (*trace).steps[sp.t].values = {u, rank_norm};
      }
      out.statistic = acc / double(positions.size());
      break;
    }
  }
  return out;
}

// Detection with p-value. Statistic directions: DistShift/Exp/Binary large
// under watermark (upper tails); Inverse small (reference comparison).
inline DetectionResult verify(SchemeId scheme, const WatermarkKey& key,
                              const TokenSeq& text, std::size_t vocab_size,
                              const VerifyOptions& opts = {},
                              Trace* trace = nullptr) {
  ScoreOutcome sc =
      score_statistic(scheme, key, text, vocab_size, opts.message, trace);
  DetectionResult res;
  res.statistic = sc.statistic;
  res.scored_tokens = sc.scored;
  res.p_value = 1.0;
  if (sc.scored == 0) return res;

  const KeyParams& p = key.params;
  switch (scheme) {
    case SchemeId::DistShift: {
      // Exact achieved green fraction, not the nominal parameter.
      std::size_t g = std::size_t(p.green_fraction * double(vocab_size));
      double gamma_eff = double(g) / double(vocab_size);
      res.p_value = stats::binomial_upper_tail(std::uint64_t(sc.statistic),
                                               sc.scored, gamma_eff);
      break;
    }
    case SchemeId::Exp:
      res.p_value = stats::gamma_q(double(sc.scored), sc.statistic);
      break;
    case SchemeId::Binary: {
      double n_bits = double(sc.scored) * bits_per_token(vocab_size);
      res.p_value = stats::gamma_q(n_bits, sc.statistic);
      break;
    }
    case SchemeId::Inverse: {
      if (opts.inverse_ref_count == 0) {
        throw std::invalid_argument("inverse_ref_count: must be >= 1");
      }
      auto positions =
          detail::scored_positions(key, opts.message, text, nullptr);
      // Reference secrets bind the key and the text; see header comment.
      std::vector<std::uint8_t> tbuf(4 * text.size());
      for (std::size_t i = 0; i < text.size(); ++i) {
        for (int b = 0; b < 4; ++b) {
          tbuf[4 * i + b] = std::uint8_t(text.tokens[i] >> (8 * b));
        }
      }
      auto text_hash = sha::hash(tbuf.data(), tbuf.size());
      std::uint32_t at_or_below = 0;
      for (std::uint32_t k = 0; k < opts.inverse_ref_count; ++k) {
        std::uint8_t buf[17 + 32 + 32 + 8];
        std::memcpy(buf, "wm/inverse-ref/v1", 17);
        std::memcpy(buf + 17, key.secret.data(), 32);
        std::memcpy(buf + 49, text_hash.data(), 32);
        for (int i = 0; i < 8; ++i) {
          buf[81 + i] = std::uint8_t(std::uint64_t(k) >> (8 * i));
        }
        auto ref_secret = sha::hash(buf, sizeof(buf));
        // Direct rank draw; see header comment for the equivalence.
        double acc = 0.0;
        for (const auto& sp : positions) {
          std::span<const Token> w(text.tokens.data() + sp.t - p.window_h,
                                   p.window_h);
          prf::WindowPrf ref_prf(ref_secret, opts.message.value, w);
          std::uint32_t c = std::uint32_t(sp.t % p.key_len);
          double ref_u = detail::inverse_u(ref_prf, c);
          double draw = ref_prf.uniform_ext(prf::kSaltInversePerm, c);
          double ref_rank = std::min(double(vocab_size - 1),
                                     std::floor(draw * double(vocab_size)));
          acc += std::fabs(ref_u - ref_rank / double(vocab_size - 1));
        }
        double d_ref = acc / double(positions.size());
        at_or_below += d_ref <= sc.statistic;
      }
      res.p_value = double(1 + at_or_below) / double(opts.inverse_ref_count + 1);
      break;
    }
  }
  return res;
}

}  // namespace wm::marks
