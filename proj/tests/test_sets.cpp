#include <gtest/gtest.h>

#include "kdist/sets.hpp"

using namespace kdist;

namespace {

BitString bs(const char* s) { return BitString::from_string(s); }

// even number of 1s and ends in 0 (or empty): states (parity, last bit 0?)
SetSpec even_ones_zero_suffix() {
  Dfa d;
  d.start = 0;
  // 0: even, last not 0 (start)   1: even, last 0
  // 2: odd,  last not 0           3: odd,  last 0
  d.next = {{1, 2}, {1, 2}, {3, 0}, {3, 0}};
  d.accepting = {false, true, false, false};
  return SetSpec(d);
}

std::uint64_t choose(unsigned n, unsigned k) {
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(Member, PopcountMod3) {
  auto s = SetSpec::popcount_mod(3);
  EXPECT_TRUE(member(s, bs("000000000000")));
  EXPECT_FALSE(member(s, bs("100000000000")));
  EXPECT_TRUE(member(s, bs("100000000011")));
}

TEST(Member, DfaRunByHand) {
  auto s = even_ones_zero_suffix();
  EXPECT_TRUE(member(s, bs("110")));
  EXPECT_FALSE(member(s, bs("100")));
  EXPECT_FALSE(member(s, bs("011")));
  EXPECT_FALSE(member(s, bs("")));
}

TEST(Member, IntegerPathAgreesWithBitString) {
  auto s = even_ones_zero_suffix();
  for (std::uint64_t v = 0; v < 256; ++v)
    EXPECT_EQ(member(s, v, 8), member(s, BitString::from_uint(v, 8))) << v;
}

TEST(Member, NpWithoutBudgetIsConfigError) {
  auto s = SetSpec::np_verifier("composite", std::nullopt);
  EXPECT_THROW(member(s, bs("1001")), ConfigError);
}

TEST(NpMember, CompositeFoundByWitnessSweep) {
  auto s = SetSpec::np_verifier("composite", 4);
  NpSearchStats st;
  EXPECT_TRUE(np_member(s, bs("1001"), 4, &st));  // 9 = 3 · 3
  EXPECT_LE(st.candidates, 1u << 5);
  EXPECT_FALSE(np_member(s, bs("0111"), 4));  // 7 is prime
  EXPECT_FALSE(np_member(s, bs("0001"), 4));
}

TEST(NpMember, ZeroBudgetHasOnlyEmptyWitness) {
  auto s = SetSpec::np_verifier("composite", 4);
  NpSearchStats st;
  EXPECT_FALSE(np_member(s, bs("1001"), 0, &st));
  EXPECT_EQ(st.candidates, 1u);
}

TEST(NpMember, BudgetAboveWmaxRejected) {
  auto s = SetSpec::np_verifier("composite", 3);
  EXPECT_THROW(np_member(s, bs("1001"), 4), ConfigError);
}

TEST(NpMember, DeterministicFamilyUsesEmptyWitness) {
  auto s = SetSpec::popcount_mod(3);
  NpSearchStats st;
  EXPECT_TRUE(np_member(s, bs("111"), 0, &st));
  EXPECT_EQ(st.candidates, 1u);
  EXPECT_FALSE(np_member(s, bs("110"), 2));
}

TEST(NpMember, AgreesWithReferenceDecider) {
  auto s = SetSpec::np_verifier("composite", 8);
  for (std::uint64_t v = 0; v < 256; ++v) {
    auto y = BitString::from_uint(v, 8);
    EXPECT_EQ(np_member(s, y, 8), decide_directly(s, y)) << v;
  }
}

TEST(Enumerate, SmallCases) {
  auto p = enumerate(SetSpec::popcount_mod(3), 2);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], bs("00"));
  auto e = enumerate(SetSpec::explicit_list({bs("10"), bs("01")}), 2);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0], bs("01"));
  EXPECT_EQ(e[1], bs("10"));
}

TEST(Enumerate, PopcountMod3N12) {
  auto v = enumerate_values(SetSpec::popcount_mod(3), 12);
  std::uint64_t expect = 0;
  for (unsigned k = 0; k <= 12; k += 3) expect += choose(12, k);
  EXPECT_EQ(expect, 1366u);
  EXPECT_EQ(v.size(), 1366u);
  EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
}

TEST(Enumerate, CeilingEnforced) {
  EXPECT_THROW(enumerate_values(SetSpec::popcount_mod(3), 25), CeilingError);
  EXPECT_THROW(enumerate_values(SetSpec::popcount_mod(3), 10, 8), CeilingError);
}

TEST(Enumerate, ExplicitListIgnoresOtherLengths) {
  auto s = SetSpec::explicit_list({bs("1"), bs("01"), bs("110")});
  EXPECT_EQ(enumerate(s, 2).size(), 1u);
}

TEST(Slice, Demo1Shape) {
  SetSlice s(SetSpec::popcount_mod(3), 12);
  EXPECT_EQ(s.cardinality(), 1366u);
  EXPECT_EQ(s.k(), 11u);
  EXPECT_EQ(s.r(), 4u);
}

TEST(Slice, SingletonHasKZero) {
  SetSlice s(SetSpec::explicit_list({bs("10110011")}), 8);
  EXPECT_EQ(s.k(), 0u);
  EXPECT_EQ(s.r(), 3u);
}

TEST(Slice, FullCube) {
  SetSlice s(SetSpec::popcount_mod(1), 4);
  EXPECT_EQ(s.cardinality(), 16u);
  EXPECT_EQ(s.k(), 4u);
  EXPECT_EQ(s.r(), 2u);
}

TEST(Slice, EmptyIsConfigError) {
  EXPECT_THROW(SetSlice(SetSpec::explicit_list({bs("1")}), 3), ConfigError);
}

TEST(Slice, IndexOf) {
  SetSlice s(SetSpec::popcount_mod(3), 12);
  for (std::size_t i = 0; i < s.members().size(); i += 97)
    EXPECT_EQ(s.index_of(s.members()[i]), i);
  EXPECT_THROW(s.index_of(1), ConfigError);
  EXPECT_TRUE(s.contains(7));
  EXPECT_FALSE(s.contains(3));
}

TEST(SetSpecText, RoundTripsAllFamilies) {
  std::vector<SetSpec> specs = {SetSpec::popcount_mod(5), even_ones_zero_suffix(),
                                SetSpec::explicit_list({bs("11"), bs("01")}),
                                SetSpec::np_verifier("composite", 6)};
  for (const auto& s : specs) {
    auto back = SetSpec::parse(s.to_text());
    EXPECT_EQ(back.to_text(), s.to_text());
    EXPECT_EQ(back.digest(), s.digest());
  }
}

TEST(SetSpecText, ParseWithComments) {
  auto s = SetSpec::parse("# demo\nfamily popcount-mod  # trailing\n\nmodulus 3\n");
  EXPECT_EQ(s.family_name(), "popcount-mod");
  EXPECT_EQ(s.digest(), SetSpec::popcount_mod(3).digest());
}

TEST(SetSpecText, Errors) {
  EXPECT_THROW(SetSpec::parse("family popcount-mod\n"), ConfigError);
  EXPECT_THROW(SetSpec::parse("family nope\n"), ConfigError);
  EXPECT_THROW(SetSpec::parse("family popcount-mod\nmodulus 0\n"), ConfigError);
  EXPECT_THROW(SetSpec::parse("colour blue\n"), ConfigError);
  EXPECT_THROW(SetSpec::parse("family dfa\nstates 2\nrow 0 0 1\naccept 0\n"),
               ConfigError);  // state 1 has no row
  EXPECT_THROW(SetSpec::parse("family np-verifier\nverifier sat\n"), ConfigError);
  EXPECT_THROW(SetSpec::load("/nonexistent/spec"), ConfigError);
}

TEST(SetSpecText, DigestSeparatesSpecs) {
  EXPECT_NE(SetSpec::popcount_mod(3).digest(), SetSpec::popcount_mod(4).digest());
}
