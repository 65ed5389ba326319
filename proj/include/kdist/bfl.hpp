#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdist/bits.hpp"
#include "kdist/selfdelim.hpp"

namespace kdist {

/// Primes in increasing order, sieved on demand.
class PrimeTable {
 public:
  /// The j-th prime, 1-based: prime(1) = 2.
  std::uint64_t prime(std::uint64_t j) {
    if (j == 0) throw WidthError("prime index is 1-based");
    while (primes_.size() < j) grow();
    return primes_[j - 1];
  }

 private:
  void grow() {
    limit_ = limit_ < 64 ? 64 : limit_ * 2;
    std::vector<bool> composite(limit_ + 1, false);
    primes_.clear();
    for (std::uint64_t i = 2; i <= limit_; ++i) {
      if (composite[i]) continue;
      primes_.push_back(i);
      for (std::uint64_t m = i * i; m <= limit_; m += i) composite[m] = true;
    }
  }

  std::uint64_t limit_ = 0;
  std::vector<std::uint64_t> primes_;
};

inline std::uint64_t nth_prime(std::uint64_t j) {
  thread_local PrimeTable table;
  return table.prime(j);
}

/// Prime fingerprint isolating x inside a finite set.
struct BflTag {
  std::uint64_t prime_index = 1;  // j, 1-based
  std::uint64_t prime = 2;
  std::uint64_t residue = 0;

  friend bool operator==(const BflTag&, const BflTag&) = default;
};

/// Smallest prime p with y mod p != x mod p for every other y in S
/// (strings read as binary integers). A good prime is always among the
/// first n·|S| + 1: each nonzero difference below 2^n has fewer than n
/// prime factors.
inline BflTag make_tag(std::uint64_t x, std::span<const std::uint64_t> S,
                       unsigned n) {
  if (n > 63) throw WidthError("make_tag integer path limited to 63 bits");
  bool found = false;
  for (auto y : S) found |= (y == x);
  if (!found) throw ConfigError("make_tag: x is not in S");
  const std::uint64_t bound = std::uint64_t{n} * S.size() + 1;
  for (std::uint64_t j = 1;; ++j) {
    if (j > bound)
      throw std::logic_error("prime search passed n·|S|+1 = " +
                             std::to_string(bound));
    std::uint64_t p = nth_prime(j);
    std::uint64_t rx = x % p;
    bool separates = true;
    for (auto y : S)
      if (y != x && y % p == rx) {
        separates = false;
        break;
      }
    if (separates) return {j, p, rx};
  }
}

inline BflTag make_tag(const BitString& x, std::span<const BitString> S) {
  std::vector<std::uint64_t> values;
  values.reserve(S.size());
  for (const auto& y : S) {
    if (y.size() != x.size())
      throw WidthError("make_tag: members must share x's length");
    values.push_back(y.to_uint());
  }
  return make_tag(x.to_uint(), values, static_cast<unsigned>(x.size()));
}

/// The fingerprint check alone: y mod p == residue.
inline bool residue_matches(const BflTag& tag, const BitString& y) {
  return y.mod(tag.prime) == tag.residue;
}

inline bool tag_accepts(const BflTag& tag, const BitString& y,
                        const std::function<bool(const BitString&)>& member_of_S) {
  return member_of_S(y) && residue_matches(tag, y);
}

inline BitString encode_tag(const BflTag& tag) {
  return sd_encode({BitString::binary(tag.prime_index),
                    BitString::binary(tag.residue)});
}

/// Length of the self-delimited (j, residue) pair.
inline std::size_t tag_bits(const BflTag& tag) { return encode_tag(tag).size(); }

inline BflTag decode_tag(const BitString& bits) {
  auto parts = sd_decode(bits);
  if (parts.size() != 2) throw DecodeError("tag must have two parts");
  if (parts[0].size() > 63 || parts[1].size() > 63 || parts[0].empty() ||
      parts[1].empty())
    throw DecodeError("tag field width out of range");
  BflTag t;
  t.prime_index = parts[0].to_uint();
  if (t.prime_index == 0) throw DecodeError("prime index is 1-based");
  if (t.prime_index > 10'000'000) throw DecodeError("prime index implausibly large");
  t.prime = nth_prime(t.prime_index);
  t.residue = parts[1].to_uint();
  if (t.residue >= t.prime) throw DecodeError("residue not below its prime");
  return t;
}

}  // namespace kdist
