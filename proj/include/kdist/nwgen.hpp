#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kdist/balance.hpp"
#include "kdist/bits.hpp"
#include "kdist/circuits.hpp"

namespace kdist {

/// m subsets of the seed positions [0, universe), each of size set_size,
/// pairwise intersections at most intersection_bound.
///
/// Two representations: an explicit list (from greedy_design), or the
/// polynomial construction where set i is {(a, f_i(a)) : a < set_size}
/// for the i-th polynomial f_i of degree <= intersection_bound over F_q,
/// flattened to position a·q + f_i(a). Distinct polynomials agree on at
/// most `degree` points, which is the intersection bound.
class Design {
 public:
  static Design explicit_sets(std::uint64_t universe, unsigned set_size,
                              unsigned intersection_bound,
                              std::vector<std::vector<std::uint32_t>> sets) {
    Design d;
    d.universe_ = universe;
    d.set_size_ = set_size;
    d.intersection_ = intersection_bound;
    d.m_ = sets.size();
    d.sets_ = std::move(sets);
    return d;
  }

  static Design polynomial(std::uint32_t q, unsigned set_size, unsigned degree,
                           std::uint64_t m) {
    if (set_size > q) throw ConfigError("polynomial design needs set_size <= q");
    if (set_size <= degree)
      throw ConfigError("polynomial design needs set_size > degree");
    long double capacity = std::pow(static_cast<long double>(q), degree + 1);
    if (capacity < static_cast<long double>(m))
      throw DesignError("q^(degree+1) < m: not enough polynomials", 0);
    Design d;
    d.q_ = q;
    d.universe_ = std::uint64_t{set_size} * q;
    d.set_size_ = set_size;
    d.intersection_ = degree;
    d.m_ = m;
    return d;
  }

  bool is_polynomial() const { return q_ != 0; }
  std::uint32_t prime() const { return q_; }
  std::uint64_t universe() const { return universe_; }
  std::uint64_t size() const { return m_; }
  unsigned set_size() const { return set_size_; }
  unsigned intersection_bound() const { return intersection_; }

  /// Sorted 0-based positions of set i.
  void positions(std::uint64_t i, std::vector<std::uint32_t>& out) const {
    if (i >= m_) throw WidthError("design set index out of range");
    out.clear();
    if (!is_polynomial()) {
      out = sets_[i];
      return;
    }
    std::uint32_t coeff[64];
    unsigned deg = 0;
    for (std::uint64_t x = i; deg <= intersection_; ++deg, x /= q_)
      coeff[deg] = static_cast<std::uint32_t>(x % q_);
    for (std::uint32_t a = 0; a < set_size_; ++a) {
      std::uint64_t f = 0;
      for (unsigned t = deg; t-- > 0;) f = (f * a + coeff[t]) % q_;
      out.push_back(static_cast<std::uint32_t>(a * q_ + f));
    }
  }

  std::vector<std::uint32_t> positions(std::uint64_t i) const {
    std::vector<std::uint32_t> out;
    positions(i, out);
    return out;
  }

  std::string to_text() const {
    std::ostringstream out;
    if (is_polynomial()) {
      out << "design polynomial q=" << q_ << " set_size=" << set_size_
          << " degree=" << intersection_ << " m=" << m_
          << " universe=" << universe_ << "\n";
    } else {
      out << "design explicit universe=" << universe_
          << " set_size=" << set_size_ << " intersection=" << intersection_
          << " m=" << m_ << "\n";
      for (const auto& s : sets_) {
        out << "set";
        for (auto x : s) out << " " << x;
        out << "\n";
      }
    }
    return out.str();
  }

 private:
  std::uint32_t q_ = 0;
  std::uint64_t universe_ = 0, m_ = 0;
  unsigned set_size_ = 0, intersection_ = 0;
  std::vector<std::vector<std::uint32_t>> sets_;
};

/// Max pairwise intersection over all pairs, and whether all sets have the
/// declared size. Quadratic; meant for tests and small designs.
struct DesignAudit {
  bool sizes_ok = true;
  unsigned max_intersection = 0;
  bool ok(const Design& d) const {
    return sizes_ok && max_intersection <= d.intersection_bound();
  }
};

inline DesignAudit audit_design(const Design& d) {
  DesignAudit a;
  std::vector<std::vector<std::uint32_t>> sets(d.size());
  for (std::uint64_t i = 0; i < d.size(); ++i) {
    d.positions(i, sets[i]);
    if (sets[i].size() != d.set_size()) a.sizes_ok = false;
    for (auto x : sets[i])
      if (x >= d.universe()) a.sizes_ok = false;
  }
  std::vector<std::uint32_t> tmp;
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      tmp.clear();
      std::set_intersection(sets[i].begin(), sets[i].end(), sets[j].begin(),
                            sets[j].end(), std::back_inserter(tmp));
      a.max_intersection =
          std::max(a.max_intersection, static_cast<unsigned>(tmp.size()));
    }
  return a;
}

/// Greedy design: scan d_s-subsets of [l] in lexicographic order and keep
/// each one meeting every kept set in at most c_int points. Plain greedy
/// is the first path tried; when it stalls short of m the search backs
/// up one set and resumes the scan after it, within candidate_ceiling
/// visits. Deterministic either way.
inline Design greedy_design(unsigned l, unsigned d_s, unsigned c_int,
                            std::uint64_t m,
                            std::uint64_t candidate_ceiling = 50'000'000) {
  if (l > 64) throw CeilingError("greedy design limited to l <= 64");
  if (d_s > l) throw DesignError("set size exceeds universe", 0);
  if (d_s == 0) throw DesignError("empty sets cannot form a design", 0);
  struct Cursor {
    std::vector<unsigned> comb;
    bool valid = true;
  };
  auto advance = [&](Cursor& c) {
    int i = static_cast<int>(d_s) - 1;
    while (i >= 0 && c.comb[i] == l - d_s + static_cast<unsigned>(i)) --i;
    if (i < 0) {
      c.valid = false;
      return;
    }
    ++c.comb[i];
    for (unsigned j = static_cast<unsigned>(i) + 1; j < d_s; ++j)
      c.comb[j] = c.comb[j - 1] + 1;
  };
  Cursor cur;
  cur.comb.resize(d_s);
  for (unsigned i = 0; i < d_s; ++i) cur.comb[i] = i;
  std::vector<std::uint64_t> kept;
  std::vector<Cursor> resume;  // scan position after each kept set
  std::uint64_t visited = 0, best = 0;
  while (kept.size() < m) {
    bool found = false;
    while (cur.valid) {
      if (++visited > candidate_ceiling)
        throw DesignError("greedy design exceeded its candidate budget; best " +
                              std::to_string(best) + " of " +
                              std::to_string(m) + " sets",
                          best);
      std::uint64_t mask = 0;
      for (auto c : cur.comb) mask |= std::uint64_t{1} << c;
      advance(cur);
      bool ok = std::all_of(kept.begin(), kept.end(), [&](std::uint64_t k) {
        return static_cast<unsigned>(std::popcount(k & mask)) <= c_int;
      });
      if (ok) {
        kept.push_back(mask);
        resume.push_back(cur);
        best = std::max<std::uint64_t>(best, kept.size());
        found = true;
        break;
      }
    }
    if (found) continue;
    if (kept.empty()) break;
    kept.pop_back();
    cur = resume.back();
    resume.pop_back();
  }
  if (kept.size() < m)
    throw DesignError("greedy design exhausted after " + std::to_string(best) +
                          " of " + std::to_string(m) + " sets",
                      best);
  std::vector<std::vector<std::uint32_t>> sets;
  for (auto mask : kept) {
    std::vector<std::uint32_t> s;
    for (unsigned b = 0; b < l; ++b)
      if ((mask >> b) & 1U) s.push_back(b);
    sets.push_back(std::move(s));
  }
  return Design::explicit_sets(l, d_s, c_int, std::move(sets));
}

/// Polynomial design with the smallest prime q >= d_s such that
/// q^(c_int+1) >= m.
inline Design polynomial_design(unsigned d_s, unsigned c_int, std::uint64_t m) {
  std::uint32_t q = std::max(d_s, 2U);
  auto enough = [&](std::uint32_t p) {
    return std::pow(static_cast<long double>(p), c_int + 1) >=
           static_cast<long double>(m);
  };
  while (!detail::is_prime_u64(q) || !enough(q)) ++q;
  return Design::polynomial(q, d_s, c_int, m);
}

struct NwParams {
  TableShape shape;
  std::uint64_t n_tilde = 0;  // seed length
  std::uint64_t N_tilde = 0;  // output length = 2^n · 2^r · k
  Design design;
  std::string hard_predicate = "parity";

  std::string to_text() const {
    std::ostringstream out;
    out << "nw n=" << shape.n << " r=" << shape.r << " k=" << shape.k
        << " n_tilde=" << n_tilde << " N_tilde=" << N_tilde
        << " predicate=" << hard_predicate << "\n"
        << design.to_text();
    return out.str();
  }
};

inline NwParams make_nw_params(TableShape shape, Design design) {
  NwParams p;
  p.shape = shape;
  p.N_tilde = shape.bit_length();
  if (design.size() != p.N_tilde)
    throw ConfigError("design has " + std::to_string(design.size()) +
                      " sets but the table needs N_tilde = " +
                      std::to_string(p.N_tilde));
  p.n_tilde = design.universe();
  p.design = std::move(design);
  return p;
}

/// d_s = ⌈log2 Ñ⌉, c_int = ⌈log2 d_s⌉, polynomial design.
inline NwParams default_nw_params(TableShape shape) {
  std::uint64_t N = shape.bit_length();
  if (N == 0) {
    // k = 0: the table carries no bits; a one-position design keeps the
    // seed nonempty.
    NwParams p;
    p.shape = shape;
    p.design = Design::explicit_sets(1, 1, 0, {});
    p.n_tilde = 1;
    return p;
  }
  unsigned d_s = std::max(1U, ceil_log2(N));
  unsigned c_int = ceil_log2(d_s);
  return make_nw_params(shape, polynomial_design(d_s, c_int, N));
}

inline void check_seed(const NwParams& p, const BitString& s) {
  if (s.size() != p.n_tilde)
    throw WidthError("NW seed has " + std::to_string(s.size()) +
                     " bits, expected " + std::to_string(p.n_tilde));
}

/// Output bit i: parity of the seed restricted to design set i.
inline bool nw_bit(const NwParams& p, std::uint64_t i, const BitString& s) {
  check_seed(p, s);
  if (i >= p.N_tilde) throw WidthError("NW output index out of range");
  bool bit = false;
  for (auto pos : p.design.positions(i)) bit ^= s[pos];
  return bit;
}

/// Bulk evaluation of NW output ranges. For polynomial designs with q <= 64
/// a block of q consecutive indices shares every coefficient but the
/// constant term, so the block is one XOR of rotated q-bit seed rows.
class NwEvaluator {
 public:
  NwEvaluator(NwParams p, const BitString& seed)
      : p_(std::move(p)), seed_(seed) {
    check_seed(p_, seed_);
    const auto& d = p_.design;
    if (d.is_polynomial() && d.prime() <= 64) {
      q_ = d.prime();
      mask_ = q_ == 64 ? ~0ULL : (1ULL << q_) - 1;
      rows_.assign(d.set_size(), 0);
      for (unsigned a = 0; a < d.set_size(); ++a)
        for (std::uint32_t b = 0; b < q_; ++b)
          if (seed_[std::uint64_t{a} * q_ + b]) rows_[a] |= 1ULL << b;
      powers_.assign(std::size_t{d.set_size()} * (d.intersection_bound() + 1), 0);
      for (unsigned a = 0; a < d.set_size(); ++a) {
        std::uint64_t v = 1;
        for (unsigned t = 0; t <= d.intersection_bound(); ++t) {
          powers_[a * (d.intersection_bound() + 1) + t] = v;
          v = v * a % q_;
        }
      }
    }
  }

  const NwParams& params() const { return p_; }
  const BitString& seed() const { return seed_; }

  void bits(std::uint64_t start, std::uint64_t count, std::uint8_t* out) const {
    if (start + count > p_.N_tilde) throw WidthError("NW range out of bounds");
    if (q_ == 0) {
      std::vector<std::uint32_t> pos;
      for (std::uint64_t i = 0; i < count; ++i) {
        p_.design.positions(start + i, pos);
        bool bit = false;
        for (auto x : pos) bit ^= seed_[x];
        out[i] = bit;
      }
      return;
    }
    const unsigned deg = p_.design.intersection_bound();
    const unsigned ds = p_.design.set_size();
    std::uint64_t i = start;
    const std::uint64_t end = start + count;
    std::uint32_t coeff[64];
    while (i < end) {
      std::uint64_t high = i / q_;
      std::uint64_t x = high;
      for (unsigned t = 1; t <= deg; ++t, x /= q_)
        coeff[t] = static_cast<std::uint32_t>(x % q_);
      std::uint64_t word = 0;
      for (unsigned a = 0; a < ds; ++a) {
        const std::uint64_t* pw = &powers_[a * (deg + 1)];
        std::uint64_t g = 0;
        for (unsigned t = 1; t <= deg; ++t) g += coeff[t] * pw[t];
        g %= q_;
        word ^= rotate(rows_[a], static_cast<unsigned>(g));
      }
      std::uint64_t d0 = i - high * q_;
      std::uint64_t block_end = std::min(end, (high + 1) * q_);
      for (; i < block_end; ++i, ++d0) out[i - start] = (word >> d0) & 1U;
    }
  }

  /// Fills one table row: entries (u, v) for all v, k bits each, MSB first.
  void row(std::uint64_t u, std::span<std::uint32_t> out) const {
    const auto& s = p_.shape;
    const std::uint64_t width = s.columns() * s.k;
    thread_local std::vector<std::uint8_t> buf;
    buf.resize(width);
    bits(u * width, width, buf.data());
    for (std::uint64_t v = 0; v < s.columns(); ++v) {
      std::uint32_t e = 0;
      for (unsigned j = 0; j < s.k; ++j) e = (e << 1) | buf[v * s.k + j];
      out[v] = e;
    }
  }

 private:
  // Bit b of the result is bit (b + g) mod q of x.
  std::uint64_t rotate(std::uint64_t x, unsigned g) const {
    if (g == 0) return x;
    return ((x >> g) | (x << (q_ - g))) & mask_;
  }

  NwParams p_;
  BitString seed_;
  std::uint32_t q_ = 0;
  std::uint64_t mask_ = 0;
  std::vector<std::uint64_t> rows_;
  std::vector<std::uint64_t> powers_;
};

/// NW-gen(s) viewed as the table of E; generated row by row on demand.
inline ExtractorTable nw_table(const NwParams& p, const BitString& s) {
  if (p.N_tilde != p.shape.bit_length())
    throw ConfigError("N_tilde inconsistent with (n, r, k)");
  auto eval = std::make_shared<const NwEvaluator>(p, s);
  return ExtractorTable::from_rows(
      p.shape, "nw(" + s.to_hex() + ")",
      [eval](std::uint64_t u, std::span<std::uint32_t> row) {
        eval->row(u, row);
      });
}

/// All Ñ output bits.
inline std::vector<std::uint8_t> nw_output(const NwParams& p,
                                           const BitString& s) {
  NwEvaluator eval(p, s);
  std::vector<std::uint8_t> out(p.N_tilde);
  eval.bits(0, p.N_tilde, out.data());
  return out;
}

inline BitString random_bits(std::size_t length, std::mt19937_64& rng) {
  BitString out(length);
  for (std::size_t i = 0; i < length; ++i) out.set(i, rng() >> 63);
  return out;
}

struct FoolingReport {
  std::uint64_t seed_samples = 0;
  bool seeds_exhaustive = false;
  std::uint64_t input_samples = 0;
  double p_generator = 0;
  double p_uniform = 0;
  double gap = 0;

  std::string to_text() const {
    std::ostringstream out;
    out << std::setprecision(17) << "fooling seeds=" << seed_samples
        << (seeds_exhaustive ? " (exhaustive)" : "")
        << " inputs=" << input_samples << " p_nw=" << p_generator
        << " p_uniform=" << p_uniform << " gap=" << gap;
    return out.str();
  }
};

/// |Prob_s[G(NW-gen(s)) = 1] − Prob_y[G(y) = 1]| by sampling; seed_samples
/// = 0 sweeps every seed (n_tilde <= 20).
inline FoolingReport fooling_gap(const Circuit& G, const NwParams& p,
                                 std::uint64_t seed_samples,
                                 std::uint64_t input_samples,
                                 std::uint64_t rng_seed) {
  if (G.arity() != p.N_tilde)
    throw WidthError("circuit arity must equal N_tilde");
  if (input_samples == 0) throw ConfigError("fooling_gap needs input samples");
  FoolingReport rep;
  std::mt19937_64 rng(splitmix64(rng_seed));
  std::vector<std::uint8_t> scratch;
  std::uint64_t hits = 0;
  if (seed_samples == 0) {
    if (p.n_tilde > 20) throw CeilingError("exhaustive seed sweep above 20 bits");
    rep.seeds_exhaustive = true;
    rep.seed_samples = std::uint64_t{1} << p.n_tilde;
    for (std::uint64_t s = 0; s < rep.seed_samples; ++s)
      hits += G.eval(nw_output(p, BitString::from_uint(s, p.n_tilde)), scratch);
  } else {
    rep.seed_samples = seed_samples;
    for (std::uint64_t t = 0; t < seed_samples; ++t)
      hits += G.eval(nw_output(p, random_bits(p.n_tilde, rng)), scratch);
  }
  rep.p_generator = static_cast<double>(hits) / static_cast<double>(rep.seed_samples);
  rep.input_samples = input_samples;
  std::uint64_t uhits = 0;
  std::vector<std::uint8_t> y(p.N_tilde);
  for (std::uint64_t t = 0; t < input_samples; ++t) {
    for (auto& b : y) b = rng() >> 63;
    uhits += G.eval(y, scratch);
  }
  rep.p_uniform = static_cast<double>(uhits) / static_cast<double>(input_samples);
  rep.gap = std::abs(rep.p_generator - rep.p_uniform);
  return rep;
}

}  // namespace kdist
