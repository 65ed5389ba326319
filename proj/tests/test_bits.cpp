#include <gtest/gtest.h>

#include <random>

#include "kdist/bits.hpp"
#include "kdist/selfdelim.hpp"

using namespace kdist;

TEST(BitString, ParseAndPrint) {
  auto b = BitString::from_string("1011");
  EXPECT_EQ(b.size(), 4u);
  EXPECT_EQ(b.to_string(), "1011");
  EXPECT_EQ(b.to_uint(), 11u);
  EXPECT_EQ(b.popcount(), 3u);
  EXPECT_THROW(BitString::from_string("10a"), DecodeError);
}

TEST(BitString, FromUintIsMsbFirst) {
  EXPECT_EQ(BitString::from_uint(5, 4).to_string(), "0101");
  EXPECT_EQ(BitString::from_uint(0, 0).size(), 0u);
  EXPECT_THROW(BitString::from_uint(16, 4), WidthError);
}

TEST(BitString, BinaryOfZeroIsOneBit) {
  EXPECT_EQ(BitString::binary(0).to_string(), "0");
  EXPECT_EQ(BitString::binary(1).to_string(), "1");
  EXPECT_EQ(BitString::binary(6).to_string(), "110");
}

TEST(BitString, HexRoundTrip) {
  std::mt19937_64 rng(3);
  for (std::size_t len : {0u, 1u, 7u, 8u, 9u, 64u, 131u}) {
    BitString b;
    for (std::size_t i = 0; i < len; ++i) b.push_back(rng() & 1);
    EXPECT_EQ(BitString::from_hex(b.to_hex()), b) << len;
  }
  EXPECT_THROW(BitString::from_hex("12"), Error);
}

TEST(BitString, ModMatchesInteger) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    std::uint64_t v = rng() >> 4;
    std::uint64_t p = 2 + rng() % 1000;
    EXPECT_EQ(BitString::from_uint(v, 60).mod(p), v % p);
  }
}

TEST(BitString, OrderIsLengthThenLex) {
  auto a = BitString::from_string("11");
  auto b = BitString::from_string("000");
  auto c = BitString::from_string("001");
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
}

TEST(BitString, SubstrAndAppend) {
  auto b = BitString::from_string("110010");
  EXPECT_EQ(b.substr(2, 3).to_string(), "001");
  auto c = b.substr(0, 2);
  c.append(BitString::from_string("01"));
  EXPECT_EQ(c.to_string(), "1101");
  EXPECT_THROW(b.substr(5, 3), WidthError);
}

TEST(Helpers, CeilLog2) {
  EXPECT_EQ(ceil_log2(1), 0u);
  EXPECT_EQ(ceil_log2(2), 1u);
  EXPECT_EQ(ceil_log2(12), 4u);
  EXPECT_EQ(ceil_log2(1366), 11u);
  EXPECT_EQ(ceil_log2(1024), 10u);
}

TEST(SelfDelim, SinglePartHasTwoBitHeader) {
  auto e = sd_encode({BitString{}});
  EXPECT_EQ(e.to_string(), "01");
  auto parts = sd_decode(e);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_TRUE(parts[0].empty());
}

TEST(SelfDelim, TwoPartLength) {
  for (std::size_t len2 : {0u, 1u, 5u, 17u, 100u}) {
    BitString x1 = BitString::from_string("1011"), x2(len2);
    auto e = sd_encode({x1, x2});
    std::size_t field = BitString::binary(len2).size();
    EXPECT_EQ(e.size(), x1.size() + len2 + 2 * field + 4);
    EXPECT_LE(2 * field, 2 * ceil_log2(len2 + 1) + 2);
  }
}

TEST(SelfDelim, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    std::vector<BitString> parts(1 + rng() % 5);
    for (auto& p : parts) {
      std::size_t len = rng() % 40;
      for (std::size_t i = 0; i < len; ++i) p.push_back(rng() & 1);
    }
    EXPECT_EQ(sd_decode(sd_encode(parts)), parts);
  }
}

TEST(SelfDelim, MalformedHeaders) {
  EXPECT_THROW(sd_decode(BitString::from_string("10")), DecodeError);
  EXPECT_THROW(sd_decode(BitString::from_string("0")), DecodeError);
  EXPECT_THROW(sd_decode(BitString::from_string("11")), DecodeError);
  // declares a 3-bit part but only one payload bit follows
  EXPECT_THROW(sd_decode(BitString::from_string("111101" "01" "1")), DecodeError);
  EXPECT_THROW(sd_encode(std::span<const BitString>{}), WidthError);
}
