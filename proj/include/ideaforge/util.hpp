#pragma once

// Shared low-level helpers: error types, hashing, deterministic RNG,
// string/CSV utilities, and stable number formatting.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace ideaforge {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Bad config file / CLI usage / missing credentials. CLI maps this to exit 2.
struct ConfigError : Error {
  using Error::Error;
};
// Malformed or invariant-violating data files.
struct SchemaError : Error {
  using Error::Error;
};
// Chat/embedding provider failure (after retries) or mock script mismatch.
struct GatewayError : Error {
  using Error::Error;
};
// A conversation that cannot proceed under its protocol rules; the runner
// persists the partial transcript with status=protocol_failure.
struct ProtocolFailure : Error {
  using Error::Error;
};
// Operation not defined for this input (e.g. trajectory features on a
// progressive transcript).
struct NotApplicableError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Hashing

inline std::array<unsigned char, 32> sha256_bytes(std::string_view data) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("EVP_MD_CTX_new failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  static const char* hexd = "0123456789abcdef";
  auto d = sha256_bytes(data);
  std::string s;
  s.reserve(64);
  for (unsigned char b : d) {
    s.push_back(hexd[b >> 4]);
    s.push_back(hexd[b & 0xf]);
  }
  return s;
}

// First 8 digest bytes, little-endian.
inline std::uint64_t sha256_seed64(std::string_view data) {
  auto d = sha256_bytes(data);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | d[static_cast<size_t>(i)];
  return v;
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// All randomness in the engine flows through DetRng instances seeded from
// named sub-seeds. The bounded-index draw is pinned here so independent
// reimplementations can reproduce the exact sequence:
//   draw x from mt19937_64; reject while x >= n * floor(2^64 / n);
//   return x % n.

class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw Error("uniform_index: n must be positive");
    const std::uint64_t nn = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = (UINT64_MAX / nn) * nn;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % nn);
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (pinned algorithm, platform-stable).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Pure function of the run seed and the conversation coordinates; execution
// order can never change any conversation's randomness.
inline std::uint64_t derive_seed(std::uint64_t master_seed, int condition_id,
                                 std::string_view task_id, int repetition) {
  std::string key = std::to_string(master_seed);
  key += '|';
  key += std::to_string(condition_id);
  key += '|';
  key += task_id;
  key += '|';
  key += std::to_string(repetition);
  return sha256_seed64(key);
}

// ---------------------------------------------------------------------------
// Strings

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline size_t word_count(std::string_view s) {
  size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

// Case-insensitive substring search (ASCII).
inline size_t ifind(std::string_view haystack, std::string_view needle,
                    size_t from = 0) {
  if (needle.empty()) return from <= haystack.size() ? from : std::string::npos;
  if (haystack.size() < needle.size()) return std::string::npos;
  for (size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    size_t j = 0;
    for (; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
          std::tolower(static_cast<unsigned char>(needle[j])))
        break;
    }
    if (j == needle.size()) return i;
  }
  return std::string::npos;
}

inline bool icontains(std::string_view haystack, std::string_view needle) {
  return ifind(haystack, needle) != std::string::npos;
}

// Canonical form used for duplicate-idea detection: Unicode NFC, lowercased,
// whitespace runs collapsed to single spaces, trimmed.
inline std::string normalize_for_dedup(std::string_view utf8) {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec) || !nfc) throw Error("ICU NFC instance unavailable");
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString normed = nfc->normalize(us, ec);
  if (U_FAILURE(ec)) throw Error("ICU NFC normalization failed");
  normed.toLower();

  icu::UnicodeString collapsed;
  bool pending_space = false, seen_any = false;
  for (int32_t i = 0; i < normed.length();) {
    UChar32 cp = normed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      pending_space = seen_any;
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar32>(' '));
      pending_space = false;
    }
    collapsed.append(cp);
    seen_any = true;
  }
  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

// ---------------------------------------------------------------------------
// Number parsing / formatting

// First integer token in free text. Returns false when no digit run exists.
// A '-' immediately preceding the digits is taken as a sign.
inline bool first_integer_token(std::string_view text, long long* out) {
  for (size_t i = 0; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
    size_t start = i;
    bool neg = false;
    if (start > 0 && text[start - 1] == '-') {
      neg = true;
      --start;
    }
    size_t end = i;
    while (end < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[end])))
      ++end;
    if (end - i > 18) return false;  // absurd length, treat as unparsable
    long long v = 0;
    auto [p, errc] = std::from_chars(text.data() + i, text.data() + end, v);
    (void)p;
    if (errc != std::errc()) return false;
    *out = neg ? -v : v;
    return true;
  }
  return false;
}

// Shortest round-trip decimal representation; stable across runs.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

// Minimal RFC-4180 style line parser (quotes, doubled quotes). Newlines
// inside quoted fields are not supported; our writers never emit them.
inline std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace ideaforge
