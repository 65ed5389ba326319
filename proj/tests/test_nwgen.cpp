#include <gtest/gtest.h>

#include "kdist/circuits.hpp"
#include "kdist/nwgen.hpp"

using namespace kdist;

TEST(Greedy, DisjointSingletons) {
  auto d = greedy_design(4, 1, 0, 4);
  ASSERT_EQ(d.size(), 4u);
  for (std::uint32_t i = 0; i < 4; ++i)
    EXPECT_EQ(d.positions(i), std::vector<std::uint32_t>{i});
}

TEST(Greedy, TriplesOnNinePoints) {
  // plain lex greedy stalls at 8; backing up finds all 12 lines of AG(2,3)
  auto d = greedy_design(9, 3, 1, 12);
  ASSERT_EQ(d.size(), 12u);
  auto a = audit_design(d);
  EXPECT_TRUE(a.sizes_ok);
  EXPECT_LE(a.max_intersection, 1u);
  EXPECT_THROW(greedy_design(9, 3, 1, 13), DesignError);
}

TEST(Greedy, ImpossibleReportsProgress) {
  try {
    greedy_design(2, 2, 0, 2);
    FAIL() << "expected DesignError";
  } catch (const DesignError& e) {
    EXPECT_EQ(e.achieved, 1u);
  }
  EXPECT_THROW(greedy_design(65, 3, 1, 2), CeilingError);
}

TEST(Polynomial, IntersectionsBounded) {
  auto d = polynomial_design(6, 2, 300);
  EXPECT_EQ(d.prime(), 7u);  // 7^3 = 343 >= 300
  EXPECT_EQ(d.universe(), 42u);
  auto a = audit_design(d);
  EXPECT_TRUE(a.sizes_ok);
  EXPECT_LE(a.max_intersection, 2u);
  EXPECT_THROW(Design::polynomial(5, 3, 1, 26), DesignError);
  EXPECT_THROW(Design::polynomial(5, 6, 1, 2), ConfigError);
}

TEST(Polynomial, Demo1Defaults) {
  auto p = default_nw_params({12, 4, 11});
  EXPECT_EQ(p.N_tilde, 720896u);
  EXPECT_EQ(p.design.set_size(), 20u);
  EXPECT_EQ(p.design.intersection_bound(), 5u);
  EXPECT_EQ(p.design.prime(), 23u);
  EXPECT_EQ(p.n_tilde, 460u);
}

TEST(NwBit, ParityExample) {
  // s = 1011, set {0, 2}: 1 xor 1 = 0
  auto d = Design::explicit_sets(4, 2, 1, {{0, 2}, {1, 3}});
  NwParams p;
  p.shape = {1, 0, 1};
  p.N_tilde = 2;
  p.n_tilde = 4;
  p.design = d;
  auto s = BitString::from_string("1011");
  EXPECT_FALSE(nw_bit(p, 0, s));
  EXPECT_TRUE(nw_bit(p, 1, s));
  EXPECT_THROW(nw_bit(p, 2, s), WidthError);
  EXPECT_THROW(nw_bit(p, 0, BitString::from_string("101")), WidthError);
}

TEST(NwBit, ZeroSeedGivesZero) {
  auto p = default_nw_params({6, 3, 4});
  BitString z(p.n_tilde);
  for (std::uint64_t i = 0; i < p.N_tilde; i += 13) EXPECT_FALSE(nw_bit(p, i, z));
}

TEST(NwTable, TrivialDesignTwoEntries) {
  auto p = make_nw_params({1, 0, 1}, Design::explicit_sets(2, 1, 0, {{0}, {1}}));
  auto s = BitString::from_string("10");
  auto t = nw_table(p, s);
  EXPECT_EQ(t(0, 0), nw_bit(p, 0, s));
  EXPECT_EQ(t(1, 0), nw_bit(p, 1, s));
}

TEST(NwTable, EvaluatorMatchesDirectBits) {
  for (TableShape shape : {TableShape{5, 3, 4}, TableShape{7, 3, 6}}) {
    auto p = default_nw_params(shape);
    std::mt19937_64 rng(shape.n);
    auto s = random_bits(p.n_tilde, rng);
    auto all = nw_output(p, s);
    for (std::uint64_t i = 0; i < p.N_tilde; ++i)
      ASSERT_EQ(all[i], nw_bit(p, i, s)) << i;
  }
}

TEST(NwTable, Demo1SpotCheck) {
  auto p = default_nw_params({12, 4, 11});
  std::mt19937_64 rng(5);
  auto s = random_bits(p.n_tilde, rng);
  auto t = nw_table(p, s);
  for (int i = 0; i < 100; ++i) {
    std::uint64_t u = rng() % 4096, v = rng() % 16;
    std::uint32_t w = 0;
    for (unsigned j = 0; j < 11; ++j)
      w = (w << 1) | nw_bit(p, (u * 16 + v) * 11 + j, s);
    EXPECT_EQ(t(u, v), w);
  }
  EXPECT_EQ(t.entries().size(), 65536u);
}

TEST(NwTable, OneBitChangesTable) {
  auto p = default_nw_params({6, 3, 4});
  std::mt19937_64 rng(9);
  auto s = random_bits(p.n_tilde, rng);
  auto s2 = s;
  s2.flip(0);
  EXPECT_NE(nw_table(p, s).entries(), nw_table(p, s2).entries());
}

TEST(NwTable, ExplicitDesignEvaluator) {
  auto d = greedy_design(9, 3, 1, 12);
  auto p = make_nw_params({1, 1, 3}, d);
  std::mt19937_64 rng(4);
  auto s = random_bits(9, rng);
  auto all = nw_output(p, s);
  for (std::uint64_t i = 0; i < 12; ++i) EXPECT_EQ(all[i], nw_bit(p, i, s));
}

TEST(Fooling, ConstantCircuitHasZeroGap) {
  auto p = default_nw_params({4, 2, 3});
  CircuitBuilder b(static_cast<std::uint32_t>(p.N_tilde));
  auto G = std::move(b).build(b.add_not(b.add_or({})));
  auto rep = fooling_gap(G, p, 100, 100, 1);
  EXPECT_EQ(rep.gap, 0.0);
}

TEST(Fooling, FirstBitIsUnbiased) {
  auto p = default_nw_params({4, 2, 3});
  CircuitBuilder b(static_cast<std::uint32_t>(p.N_tilde));
  std::uint32_t first[] = {0};
  auto G = std::move(b).build(b.add_or(first));
  auto rep = fooling_gap(G, p, 4000, 4000, 2);
  EXPECT_NEAR(rep.p_generator, 0.5, 0.05);
  EXPECT_NEAR(rep.p_uniform, 0.5, 0.05);
  EXPECT_LT(rep.gap, 0.08);
}

TEST(Fooling, ExhaustiveSeeds) {
  auto p = make_nw_params({1, 0, 1}, Design::explicit_sets(3, 2, 1, {{0, 1}, {1, 2}}));
  CircuitBuilder b(2);
  std::uint32_t first[] = {0};
  auto G = std::move(b).build(b.add_or(first));
  auto rep = fooling_gap(G, p, 0, 100, 3);
  EXPECT_TRUE(rep.seeds_exhaustive);
  EXPECT_EQ(rep.seed_samples, 8u);
  EXPECT_DOUBLE_EQ(rep.p_generator, 0.5);
  EXPECT_THROW(fooling_gap(G, p, 10, 0, 3), ConfigError);
}
