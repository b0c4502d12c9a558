#pragma once

/**
 * Key generation and key files.
 *
 * A key binds scheme, parameters, and a 32-byte secret derived
 * deterministically from (scheme, seed, params) via SHA-256 over a canonical
 * encoding, so a key file can always be reconstructed from its seed line.
 * Loaded key files are authoritative: the stored secret is used as-is, which
 * allows keys minted elsewhere.
 */

#include <wm/sha256.hpp>
#include <wm/types.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

namespace wm {

struct KeyOverrides {
  std::optional<std::uint32_t> window_h;
  std::optional<std::uint32_t> key_len;
  std::optional<double> green_fraction;
  std::optional<double> bias;
  std::optional<double> skip_prob;
  std::optional<double> temperature;
};

inline void validate_params(const KeyParams& p) {
  if (p.window_h > 64) {
    throw std::invalid_argument("window_h: must be <= 64");
  }
  if (p.key_len < 1 || p.key_len > 64) {
    throw std::invalid_argument("key_len: must lie in [1, 64]");
  }
  if (!(p.green_fraction > 0.0 && p.green_fraction < 1.0)) {
    throw std::invalid_argument("green_fraction: must lie in (0, 1)");
  }
  if (!(p.bias >= 0.0) || p.bias > 64.0) {
    throw std::invalid_argument("bias: must lie in [0, 64]");
  }
  if (!(p.skip_prob >= 0.0 && p.skip_prob < 1.0)) {
    throw std::invalid_argument("skip_prob: must lie in [0, 1)");
  }
  if (!(p.temperature >= 0.0) || p.temperature > 64.0) {
    throw std::invalid_argument("temperature: must lie in [0, 64]");
  }
}

// Scheme-specific defaults. DistShift applies its bias to logits before a
// cooler softmax and never skips; the sampling-transform schemes keep unit
// temperature and a small skip rate.
inline KeyParams default_params(SchemeId scheme) {
  KeyParams p;
  if (scheme == SchemeId::DistShift) {
    p.skip_prob = 0.0;
    p.temperature = 0.7;
  }
  return p;
}

namespace detail {

inline void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = std::uint8_t(v >> (8 * i));
}

inline std::uint64_t f64_bits(double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  return v;
}

}  // namespace detail

// Canonical secret derivation:
//   SHA-256("wm/keygen/v1" (12 bytes) || scheme u8 || seed u64 LE ||
//           window_h u64 LE || key_len u64 LE ||
//           green_fraction, bias, skip_prob, temperature as IEEE-754 bits,
//           each u64 LE)
inline std::array<std::uint8_t, 32> derive_secret(SchemeId scheme,
                                                  std::uint64_t seed,
                                                  const KeyParams& p) {
  std::uint8_t buf[12 + 1 + 8 * 7];
  std::memcpy(buf, "wm/keygen/v1", 12);
  buf[12] = std::uint8_t(scheme);
  std::uint8_t* q = buf + 13;
  detail::put_u64(q, seed);
  detail::put_u64(q + 8, p.window_h);
  detail::put_u64(q + 16, p.key_len);
  detail::put_u64(q + 24, detail::f64_bits(p.green_fraction));
  detail::put_u64(q + 32, detail::f64_bits(p.bias));
  detail::put_u64(q + 40, detail::f64_bits(p.skip_prob));
  detail::put_u64(q + 48, detail::f64_bits(p.temperature));
  return sha::hash(buf, sizeof(buf));
}

inline WatermarkKey keygen(SchemeId scheme, std::uint64_t seed,
                           const KeyOverrides& ov = {}) {
  KeyParams p = default_params(scheme);
  if (ov.window_h) p.window_h = *ov.window_h;
  if (ov.key_len) p.key_len = *ov.key_len;
  if (ov.green_fraction) p.green_fraction = *ov.green_fraction;
  if (ov.bias) p.bias = *ov.bias;
  if (ov.skip_prob) p.skip_prob = *ov.skip_prob;
  if (ov.temperature) p.temperature = *ov.temperature;
  validate_params(p);
  WatermarkKey key;
  key.scheme = scheme;
  key.seed = seed;
  key.params = p;
  key.secret = derive_secret(scheme, seed, p);
  return key;
}

// ============================================================================
// Key files
// ============================================================================

inline std::string to_hex(const std::array<std::uint8_t, 32>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

inline std::array<std::uint8_t, 32> from_hex(const std::string& s) {
  if (s.size() != 64) {
    throw std::invalid_argument("secret_hex: must be 64 hex digits");
  }
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("secret_hex: invalid hex digit");
  };
  std::array<std::uint8_t, 32> out{};
  for (std::size_t i = 0; i < 32; ++i) {
    out[i] = std::uint8_t(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  }
  return out;
}

inline nlohmann::json key_to_json(const WatermarkKey& key) {
  return nlohmann::json{
      {"scheme", scheme_name(key.scheme)},
      {"seed", key.seed},
      {"secret_hex", to_hex(key.secret)},
      {"params",
       {{"window_h", key.params.window_h},
        {"key_len", key.params.key_len},
        {"green_fraction", key.params.green_fraction},
        {"bias", key.params.bias},
        {"skip_prob", key.params.skip_prob},
        {"temperature", key.params.temperature}}},
  };
}

inline WatermarkKey key_from_json(const nlohmann::json& j) {
  WatermarkKey key;
  key.scheme = parse_scheme(j.at("scheme").get<std::string>());
  key.seed = j.at("seed").get<std::uint64_t>();
  key.secret = from_hex(j.at("secret_hex").get<std::string>());
  const auto& p = j.at("params");
  key.params.window_h = p.at("window_h").get<std::uint32_t>();
  key.params.key_len = p.at("key_len").get<std::uint32_t>();
  key.params.green_fraction = p.at("green_fraction").get<double>();
  key.params.bias = p.at("bias").get<double>();
  key.params.skip_prob = p.at("skip_prob").get<double>();
  key.params.temperature = p.at("temperature").get<double>();
  validate_params(key.params);
  return key;
}

inline void save_key(const WatermarkKey& key, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open key file for write: " + path);
  out << key_to_json(key).dump(2) << "\n";
}

inline WatermarkKey load_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open key file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("key file " + path + ": " + e.what());
  }
  return key_from_json(j);
}

}  // namespace wm
