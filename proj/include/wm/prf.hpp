#pragma once

/**
 * Keyed pseudorandom primitives shared by all schemes.
 *
 * Canonical input encoding (frozen; any SHA-256 implementation reproduces
 * detection from this layout). The hashed message is PREFIX || SUFFIX:
 *
 *   PREFIX, zero-padded to a multiple of 64 bytes:
 *     bytes  0..31   key secret
 *     bytes 32..39   message value, u64 little-endian
 *     byte  40       window length h (u8)
 *     bytes 41..     window token ids, u32 little-endian each, oldest first
 *
 *   SUFFIX: u64 little-endian words, in order:
 *     salt, then any extensions, then (for streams only) a block counter.
 *
 * Derived values, also frozen:
 *   uniform      u = (W >> 11) * 2^-53 where W = digest bytes 0..7 as LE u64;
 *                u lies in [0, 1) with 53 bits of precision.
 *   vector       element i of prf_uniform_vector is exactly the uniform for
 *                suffix [salt, i].
 *   stream       counter-mode blocks: block c hashes suffix [salt, exts..., c]
 *                and yields digest words 0..3 (each 8 LE bytes), in order.
 *   permutation  Fisher-Yates over 0..n-1, i from n-1 down to 1, swapping
 *                position i with floor(word * (i+1) / 2^64), words taken
 *                from the stream with the given salt.
 *
 * The 64-byte alignment of PREFIX is what makes the midstate cache work:
 * one key/message/window combination costs one SHA-256 state setup, after
 * which every draw is a single compression.
 */

#include <wm/sha256.hpp>
#include <wm/types.hpp>

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

namespace wm::prf {

// Purpose salts. Every call site uses a distinct salt so draws for
// different purposes never collide even on identical windows.
inline constexpr std::uint64_t kSaltSkip = 1;
inline constexpr std::uint64_t kSaltGreen = 2;
inline constexpr std::uint64_t kSaltExp = 3;
inline constexpr std::uint64_t kSaltBinary = 4;
inline constexpr std::uint64_t kSaltInverseU = 5;
inline constexpr std::uint64_t kSaltInversePerm = 6;

inline double to_unit(std::uint64_t w) { return double(w >> 11) * 0x1.0p-53; }

// Midstate-backed PRF bound to (secret, message, window).
class WindowPrf {
 public:
  WindowPrf(const std::array<std::uint8_t, 32>& secret, std::uint64_t message,
            std::span<const Token> window) {
    if (window.size() > 64) {
      throw std::invalid_argument("window: length must be <= 64");
    }
    std::uint8_t buf[320];
    std::size_t raw = 41 + 4 * window.size();
    std::size_t padded = (raw + 63) / 64 * 64;
    std::memset(buf, 0, padded);
    std::memcpy(buf, secret.data(), 32);
    put_u64(buf + 32, message);
    buf[40] = std::uint8_t(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
      put_u32(buf + 41 + 4 * i, window[i]);
    }
    ms_ = sha::Midstate(buf, padded);
  }

  sha::Digest digest(std::span<const std::uint64_t> suffix_words) const {
    std::uint8_t buf[32];
    if (suffix_words.size() > 4) {
      throw std::invalid_argument("prf: suffix too long");
    }
    for (std::size_t i = 0; i < suffix_words.size(); ++i) {
      put_u64(buf + 8 * i, suffix_words[i]);
    }
    return ms_.finish(buf, 8 * suffix_words.size());
  }

  std::uint64_t word(std::uint64_t salt) const {
    const std::uint64_t s[1] = {salt};
    return sha::word0(digest(s));
  }

  double uniform(std::uint64_t salt) const { return to_unit(word(salt)); }

  double uniform_ext(std::uint64_t salt, std::uint64_t ext) const {
    const std::uint64_t s[2] = {salt, ext};
    return to_unit(sha::word0(digest(s)));
  }

  // Counter-mode word stream; four u64 words per compression.
  class Stream {
   public:
    Stream(const WindowPrf& prf, std::uint64_t salt)
        : prf_(prf), suffix_{salt, 0}, len_(2) {}
    Stream(const WindowPrf& prf, std::uint64_t salt, std::uint64_t ext)
        : prf_(prf), suffix_{salt, ext, 0}, len_(3) {}

    std::uint64_t next_word() {
      if (used_ == 4) {
        block_ = prf_.digest(std::span<const std::uint64_t>(suffix_, len_));
        ++suffix_[len_ - 1];
        used_ = 0;
      }
      return sha::word(block_, used_++);
    }

    double next_uniform() { return to_unit(next_word()); }

   private:
    const WindowPrf& prf_;
    std::uint64_t suffix_[3];
    std::size_t len_;
    sha::Digest block_{};
    unsigned used_ = 4;
  };

  Stream stream(std::uint64_t salt) const { return Stream(*this, salt); }
  Stream stream_ext(std::uint64_t salt, std::uint64_t ext) const {
    return Stream(*this, salt, ext);
  }

  // Fills out with a permutation of 0..out.size()-1.
  void fill_permutation(Stream&& s, std::span<Token> out) const {
    std::size_t n = out.size();
    if (n == 0) throw std::invalid_argument("permutation: size must be >= 1");
    for (std::size_t i = 0; i < n; ++i) out[i] = Token(i);
    for (std::size_t i = n - 1; i >= 1; --i) {
      std::uint64_t w = s.next_word();
      std::size_t j = std::size_t(
          (static_cast<unsigned __int128>(w) * (std::uint64_t(i) + 1)) >> 64);
      std::swap(out[i], out[j]);
    }
  }

  bool skip(double skip_prob) const { return uniform(kSaltSkip) < skip_prob; }

 private:
  static void put_u64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = std::uint8_t(v >> (8 * i));
  }
  static void put_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = std::uint8_t(v >> (8 * i));
  }

  sha::Midstate ms_;
};

// ============================================================================
// Value-struct surface
// ============================================================================

// One fully-specified PRF input. Convenient for tests and cold paths;
// hot paths construct a WindowPrf once per window and vary only the salt.
struct PrfInput {
  std::array<std::uint8_t, 32> secret{};
  std::uint64_t message = 0;
  std::vector<Token> window;
  std::uint64_t salt = 0;
};

inline double prf_uniform(const PrfInput& in) {
  return WindowPrf(in.secret, in.message, in.window).uniform(in.salt);
}

// Element i equals prf_uniform of `in` with suffix extended by i.
inline std::vector<double> prf_uniform_vector(const PrfInput& in,
                                              std::size_t count) {
  WindowPrf prf(in.secret, in.message, in.window);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = prf.uniform_ext(in.salt, i);
  }
  return out;
}

inline std::vector<Token> prf_permutation(const PrfInput& in, std::size_t n) {
  WindowPrf prf(in.secret, in.message, in.window);
  std::vector<Token> out(n);
  prf.fill_permutation(prf.stream(in.salt), out);
  return out;
}

// First floor(gamma * n) entries of prf_permutation, in permutation order.
inline std::vector<Token> green_partition(const PrfInput& in, double gamma,
                                          std::size_t n) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("green_fraction: must lie in (0, 1)");
  }
  std::size_t g = std::size_t(gamma * double(n));
  if (g == 0) {
    throw std::invalid_argument(
        "green_fraction: partition is empty for this vocabulary size");
  }
  std::vector<Token> perm = prf_permutation(in, n);
  perm.resize(g);
  return perm;
}

// Tagged skip draw; ignores in.salt and uses the dedicated skip salt.
inline bool should_skip(const PrfInput& in, double skip_prob) {
  if (!(skip_prob >= 0.0 && skip_prob < 1.0)) {
    throw std::invalid_argument("skip_prob: must lie in [0, 1)");
  }
  return WindowPrf(in.secret, in.message, in.window).skip(skip_prob);
}

}  // namespace wm::prf
