#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kdist {

// Error taxonomy shared by every module. Callers (the CLI in particular)
// map these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct WidthError : Error {
  using Error::Error;
};
struct CeilingError : Error {
  using Error::Error;
};
struct DecodeError : Error {
  using Error::Error;
};
struct DesignError : Error {
  DesignError(const std::string& what, std::uint64_t achieved)
      : Error(what), achieved(achieved) {}
  std::uint64_t achieved;
};
struct CertificationError : Error {
  using Error::Error;
};

/// Smallest k with 2^k >= x (0 for x <= 1).
constexpr unsigned ceil_log2(std::uint64_t x) {
  return x <= 1 ? 0u : static_cast<unsigned>(std::bit_width(x - 1));
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used for stable digests of canonical text.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// A finite binary string. Index 0 is the leftmost, most significant bit.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t length, bool fill = false)
      : bits_(length, fill ? 1 : 0) {}

  static BitString from_string(std::string_view text) {
    BitString out;
    out.bits_.reserve(text.size());
    for (char c : text) {
      if (c != '0' && c != '1')
        throw DecodeError("bit string contains a character other than 0/1");
      out.bits_.push_back(c == '1');
    }
    return out;
  }

  static BitString from_uint(std::uint64_t value, std::size_t width) {
    if (width < 64 && (value >> width) != 0)
      throw WidthError("value does not fit in " + std::to_string(width) +
                       " bits");
    BitString out(width);
    for (std::size_t i = 0; i < width; ++i)
      out.bits_[width - 1 - i] = i < 64 ? (value >> i) & 1U : 0;
    return out;
  }

  /// Minimal binary representation of a natural number; bin(0) = "0".
  static BitString binary(std::uint64_t value) {
    return from_uint(value, value == 0 ? 1 : std::bit_width(value));
  }

  /// Parses "<length>:<hex>", bits packed MSB first, zero padded.
  static BitString from_hex(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos)
      throw DecodeError("hex bit string lacks '<length>:' prefix");
    std::size_t length = 0;
    for (char c : text.substr(0, colon)) {
      if (c < '0' || c > '9') throw DecodeError("bad hex bit-string length");
      length = length * 10 + static_cast<std::size_t>(c - '0');
    }
    auto hex = text.substr(colon + 1);
    if (hex.size() != (length + 3) / 4)
      throw DecodeError("hex payload size does not match declared length");
    BitString out(length);
    for (std::size_t d = 0; d < hex.size(); ++d) {
      char c = hex[d];
      unsigned nibble = 0;
      if (c >= '0' && c <= '9')
        nibble = static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f')
        nibble = static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F')
        nibble = static_cast<unsigned>(c - 'A' + 10);
      else
        throw DecodeError("bad hex digit");
      for (unsigned b = 0; b < 4; ++b) {
        std::size_t pos = d * 4 + b;
        bool bit = (nibble >> (3 - b)) & 1U;
        if (pos < length)
          out.bits_[pos] = bit;
        else if (bit)
          throw DecodeError("nonzero padding in hex bit string");
      }
    }
    return out;
  }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  bool at(std::size_t i) const {
    if (i >= bits_.size()) throw WidthError("bit index out of range");
    return bits_[i] != 0;
  }
  void set(std::size_t i, bool value) { bits_.at(i) = value; }
  void flip(std::size_t i) { bits_.at(i) ^= 1; }
  void push_back(bool bit) { bits_.push_back(bit); }
  void append(const BitString& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
  }

  BitString substr(std::size_t pos, std::size_t len) const {
    if (pos + len > bits_.size()) throw WidthError("substring out of range");
    BitString out;
    out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(pos),
                     bits_.begin() + static_cast<std::ptrdiff_t>(pos + len));
    return out;
  }

  std::uint64_t to_uint() const {
    if (bits_.size() > 64) throw WidthError("bit string longer than 64 bits");
    std::uint64_t v = 0;
    for (auto b : bits_) v = (v << 1) | b;
    return v;
  }

  /// The string read as a binary integer, reduced modulo p.
  std::uint64_t mod(std::uint64_t p) const {
    unsigned __int128 acc = 0;
    for (auto b : bits_) acc = ((acc << 1) | b) % p;
    return static_cast<std::uint64_t>(acc);
  }

  std::size_t popcount() const {
    std::size_t c = 0;
    for (auto b : bits_) c += b;
    return c;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  std::string to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s = std::to_string(bits_.size()) + ":";
    for (std::size_t d = 0; d * 4 < bits_.size(); ++d) {
      unsigned nibble = 0;
      for (unsigned b = 0; b < 4; ++b) {
        std::size_t pos = d * 4 + b;
        nibble = (nibble << 1) | (pos < bits_.size() ? bits_[pos] : 0U);
      }
      s.push_back(digits[nibble]);
    }
    return s;
  }

  friend bool operator==(const BitString&, const BitString&) = default;
  // Shorter strings first, then lexicographic: the standard enumeration
  // order of {0,1}^*.
  friend std::strong_ordering operator<=>(const BitString& a,
                                          const BitString& b) {
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace kdist
