#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kdist/bits.hpp"

namespace kdist {

// Self-delimiting concatenation of x_1 .. x_m (m >= 1):
//
//   dbl(bin|x_2|) 01 dbl(bin|x_3|) 01 ... dbl(bin|x_m|) 01  01  x_1 x_2 ... x_m
//
// dbl(u) doubles every bit of u and bin(0) = "0", so each length field is
// nonempty and an empty field ("01" right after a separator) ends the
// header. x_1 carries no length field: its length is whatever remains, so
// decoding needs the total bit count. Cost: Σ|x_i| + Σ_{i>=2} 2(⌈log2(|x_i|+1)⌉ + 1) + 2.

inline BitString sd_encode(std::span<const BitString> parts) {
  if (parts.empty()) throw WidthError("sd_encode needs at least one part");
  BitString out;
  auto separator = [&] {
    out.push_back(false);
    out.push_back(true);
  };
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto len = BitString::binary(parts[i].size());
    for (std::size_t b = 0; b < len.size(); ++b) {
      out.push_back(len[b]);
      out.push_back(len[b]);
    }
    separator();
  }
  separator();
  for (const auto& p : parts) out.append(p);
  return out;
}

inline BitString sd_encode(std::initializer_list<BitString> parts) {
  return sd_encode(std::span(parts.begin(), parts.size()));
}

inline std::vector<BitString> sd_decode(const BitString& bits) {
  std::vector<std::uint64_t> lengths;
  std::size_t pos = 0;
  std::uint64_t field = 0;
  std::size_t field_bits = 0;
  for (;;) {
    if (pos + 2 > bits.size())
      throw DecodeError("self-delimited header runs past the end");
    bool a = bits[pos], b = bits[pos + 1];
    pos += 2;
    if (a == b) {
      if (field_bits >= 63) throw DecodeError("length field too long");
      field = (field << 1) | a;
      ++field_bits;
    } else if (!a && b) {
      if (field_bits == 0) break;
      lengths.push_back(field);
      field = 0;
      field_bits = 0;
    } else {
      throw DecodeError("malformed self-delimited header (pair 10)");
    }
  }
  std::uint64_t rest = bits.size() - pos;
  std::uint64_t others = 0;
  for (auto l : lengths) {
    if (l > rest) throw DecodeError("part length exceeds payload");
    others += l;
  }
  if (others > rest) throw DecodeError("part lengths exceed payload");
  std::vector<BitString> parts;
  parts.push_back(bits.substr(pos, rest - others));
  pos += rest - others;
  for (auto l : lengths) {
    parts.push_back(bits.substr(pos, l));
    pos += l;
  }
  return parts;
}

}  // namespace kdist
