#include <gtest/gtest.h>

#include <functional>
#include <sstream>

#include "kdist/circuits.hpp"
#include "kdist/suite.hpp"

using namespace kdist;

namespace {

// Recursive evaluation straight from the gate list.
bool eval_by_recursion(const Circuit& c, const std::vector<std::uint8_t>& in) {
  std::function<bool(std::uint32_t)> val = [&](std::uint32_t id) -> bool {
    if (id < c.arity()) return in[id];
    auto g = id - c.arity();
    auto f = c.fanin(g);
    switch (c.kind(g)) {
      case GateKind::kAnd:
        return std::all_of(f.begin(), f.end(), val);
      case GateKind::kOr:
        return std::any_of(f.begin(), f.end(), val);
      case GateKind::kNot:
        return !val(f[0]);
    }
    return false;
  };
  return val(c.output());
}

std::vector<std::uint8_t> with_ones(std::size_t L, std::size_t w,
                                    std::mt19937_64& rng) {
  std::vector<std::uint8_t> v(L, 0);
  std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(w), 1);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace

TEST(Circuit, AndOr) {
  CircuitBuilder b(2);
  std::uint32_t in[] = {0, 1};
  auto a = b.add_and(in);
  auto c = std::move(b).build(a);
  EXPECT_TRUE(c.eval(BitString::from_string("11")));
  EXPECT_FALSE(c.eval(BitString::from_string("10")));
  EXPECT_EQ(c.depth(), 1u);

  CircuitBuilder b2(3);
  std::uint32_t in3[] = {0, 1, 2};
  auto o = b2.add_or(in3);
  auto c2 = std::move(b2).build(o);
  EXPECT_FALSE(c2.eval(BitString::from_string("000")));
  EXPECT_TRUE(c2.eval(BitString::from_string("010")));
}

TEST(Circuit, NotIsFreeForDepth) {
  CircuitBuilder b(2);
  auto n0 = b.add_not(0);
  std::uint32_t f[] = {n0, 1};
  auto a = b.add_and(f);
  auto out = b.add_not(a);
  auto c = std::move(b).build(out);
  EXPECT_EQ(c.depth(), 1u);
  EXPECT_TRUE(c.eval(BitString::from_string("11")));
  EXPECT_FALSE(c.eval(BitString::from_string("01")));
}

TEST(Circuit, BuilderRejectsBadWiring) {
  CircuitBuilder b(2);
  std::uint32_t later[] = {5};
  EXPECT_THROW(b.add_or(later), ConfigError);
  std::uint32_t two[] = {0, 1};
  EXPECT_THROW(b.add(GateKind::kNot, two), ConfigError);
  EXPECT_THROW(std::move(b).build(9), ConfigError);
}

TEST(Circuit, WidthChecked) {
  CircuitBuilder b(2);
  std::uint32_t in[] = {0, 1};
  auto c = std::move(b).build(b.add_and(in));
  EXPECT_THROW(c.eval(BitString::from_string("1")), WidthError);
}

TEST(Circuit, FileRoundTrip) {
  GadgetParams p{12, 3, 8, 4, 20, 5};
  auto c = build_counting_gadget(p);
  std::stringstream buf;
  write_circuit(buf, c);
  auto back = read_circuit(buf);
  EXPECT_EQ(back.gate_count(), c.gate_count());
  EXPECT_EQ(back.depth(), c.depth());
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto in = with_ones(12, rng() % 13, rng);
    EXPECT_EQ(back.eval(in), c.eval(in));
  }
  std::stringstream bad("kdist-circuit 1\ninputs 2\ngate 2 XOR 0 1\noutput 2\n");
  EXPECT_THROW(read_circuit(bad), DecodeError);
  std::stringstream cyc("kdist-circuit 1\ninputs 2\ngate 2 AND 0 3\noutput 2\n");
  EXPECT_THROW(read_circuit(cyc), DecodeError);
}

TEST(Gadget, ImpossibleHighIsConstantOne) {
  GadgetParams p{4, 4, 5, 1, 1, 0};
  ASSERT_TRUE(p.trivially_accepting());
  auto c = build_counting_gadget(p);
  for (std::uint64_t v = 0; v < 16; ++v)
    EXPECT_TRUE(c.eval(BitString::from_uint(v, 4)));
}

TEST(Gadget, DepthThreeAndMatchesRecursion) {
  GadgetParams p{20, 4, 12, 5, 60, 9};
  auto c = build_counting_gadget(p);
  EXPECT_EQ(c.depth(), 3u);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    auto in = with_ones(20, rng() % 21, rng);
    EXPECT_EQ(c.eval(in), eval_by_recursion(c, in));
  }
}

TEST(Gadget, AllOnesRejected) {
  GadgetParams p{20, 4, 12, 5, 3, 9};
  auto c = build_counting_gadget(p);
  EXPECT_FALSE(c.eval(std::vector<std::uint8_t>(20, 1)));
}

TEST(Gadget, AcceptSideExactExhaustive) {
  // and_width = low + 1 disjoint buckets cannot all be hit by <= low ones
  GadgetParams p{12, 3, 8, 4, 40, 77};
  auto c = build_counting_gadget(p);
  for (std::uint64_t v = 0; v < 4096; ++v)
    if (std::popcount(v) <= 3) EXPECT_TRUE(c.eval(BitString::from_uint(v, 12))) << v;
}

TEST(Gadget, CoverProbabilityBruteForce) {
  const std::uint64_t L = 8, q = 3;
  for (std::uint64_t w = 0; w <= L; ++w) {
    std::uint64_t hit = 0, total = 0;
    for (std::uint64_t v = 0; v < 256; ++v) {
      if (static_cast<std::uint64_t>(std::popcount(v)) != w) continue;
      ++total;
      // buckets {0,1,2}, {3,4,5}, {6,7}
      bool all = (v & 0x07) && (v & 0x38) && (v & 0xC0);
      hit += all;
    }
    EXPECT_NEAR(static_cast<double>(cover_probability(L, q, w)),
                double(hit) / double(total), 1e-9)
        << w;
  }
}

TEST(Gadget, SpecExampleL160IsInfeasible) {
  // μ = 10: low = 70, high = 80; the cover probability is far too small
  auto cal = calibrate_gadget(160, 70, 80, 200, 1);
  EXPECT_FALSE(cal.feasible);
  EXPECT_LT(static_cast<double>(cal.cover_probability_at_high), 1e-10);
  auto g = make_certified_gadget(160, 70, 80, 200, 1);
  EXPECT_FALSE(g.ok);
  EXPECT_NE(g.reason.find("calibration failed"), std::string::npos);
}

TEST(Gadget, CertifyCatchesConstantOne) {
  CircuitBuilder b(10);
  auto c = std::move(b).build(b.add_not(b.add_or({})));
  auto rep = certify_gadget(c, 3, 6, 50, 1);
  EXPECT_FALSE(rep.pass);
  ASSERT_TRUE(rep.counterexample.has_value());
  EXPECT_GE(rep.counterexample->ones, 6u);
  EXPECT_EQ(rep.counterexample->input.popcount(), rep.counterexample->ones);
}

TEST(Gadget, ProductionGadgetCertifiesAndRevalidates) {
  SetSlice s(gadget1_spec(), 4);
  auto th = counting_thresholds(s);
  EXPECT_EQ(th.input_len, 36u);
  EXPECT_EQ(th.low, 16u);
  EXPECT_EQ(th.high, 19u);
  auto g = make_certified_gadget(th.input_len, th.low, th.high, 200, 3);
  ASSERT_TRUE(g.ok) << g.reason;
  EXPECT_EQ(g.certification.checked, 200u);
  EXPECT_TRUE(certify_gadget(g.circuit, th.low, th.high, 200, 12345).pass);
}

TEST(Gadget, StratifiedCountsHitEdges) {
  std::mt19937_64 rng(1);
  auto w = stratified_counts(36, 16, 19, 40, rng);
  ASSERT_EQ(w.size(), 40u);
  for (auto e : {0u, 16u, 19u, 36u})
    EXPECT_NE(std::find(w.begin(), w.end(), e), w.end()) << e;
  for (auto x : w) EXPECT_TRUE(x <= 16 || x >= 19) << x;
}

TEST(BuildG, KZeroIsSingleGadgetCopy) {
  SetSlice s(SetSpec::explicit_list({BitString::from_string("101")}), 3);
  auto th = counting_thresholds(s);
  GadgetParams p{th.input_len, th.low, th.high, 1, 1, 0};
  auto G = build_G(s, p);
  EXPECT_EQ(G.kind(G.output() - G.arity()), GateKind::kNot);
  std::vector<std::uint8_t> in(G.arity(), 0);
  EXPECT_TRUE(G.eval(in));
}

TEST(BuildG, SandwichOnHandBuiltTables) {
  SetSlice s(gadget1_spec(), 4);
  auto th = counting_thresholds(s);
  auto g = make_certified_gadget(th.input_len, th.low, th.high, 200, 1);
  ASSERT_TRUE(g.ok);
  auto G = build_G(s, g.calibration.params);
  EXPECT_EQ(G.depth(), 5u);
  EXPECT_EQ(G.arity(), shape_of(s).bit_length());
  auto shape = shape_of(s);

  // 7-balanced: spread members' cells evenly over 16 outputs
  std::vector<std::uint32_t> even(shape.cells());
  for (std::uint64_t c = 0; c < even.size(); ++c)
    even[c] = static_cast<std::uint32_t>(c % 16);
  auto t1 = ExtractorTable::from_entries(shape, even);
  ASSERT_TRUE(check_balance(t1, s, 7).balanced);
  EXPECT_TRUE(G.eval(serialize_table(t1)));

  // constant table: one z carries every cell, far above 8μ
  auto t2 = constant_table(shape, 6);
  ASSERT_GE(check_balance(t2, s, 8).max_load, 8 * 3u);
  EXPECT_FALSE(G.eval(serialize_table(t2)));
}

TEST(BuildG, SerializationLayout) {
  TableShape shape{2, 1, 3};
  std::vector<std::uint32_t> e = {1, 2, 3, 4, 5, 6, 7, 0};
  auto bits = serialize_table(ExtractorTable::from_entries(shape, e));
  ASSERT_EQ(bits.size(), 24u);
  // cell (u=0, v=1) = 2 = 010 at bits 3..5
  EXPECT_EQ(bits[3], 0);
  EXPECT_EQ(bits[4], 1);
  EXPECT_EQ(bits[5], 0);
}

TEST(BuildG, Demo1AboveCeiling) {
  SetSlice s(SetSpec::popcount_mod(3), 12);
  auto th = counting_thresholds(s);
  GadgetParams p{th.input_len, th.low, th.high, th.low + 1, 1000, 0};
  EXPECT_THROW(build_G(s, p), CeilingError);
}
