#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kdist/balance.hpp"
#include "kdist/bfl.hpp"
#include "kdist/bits.hpp"
#include "kdist/circuits.hpp"
#include "kdist/nwgen.hpp"
#include "kdist/pipeline.hpp"
#include "kdist/sets.hpp"
#include "kdist/stage2.hpp"

namespace kdist {

// Fixed instances used by the acceptance run.

inline SetSpec demo1_spec() { return SetSpec::popcount_mod(3); }

/// Binary value divisible by 5, read most significant bit first.
inline SetSpec dfa_mod5_spec() {
  Dfa d;
  d.start = 0;
  for (unsigned s = 0; s < 5; ++s)
    d.next.push_back({(2 * s) % 5, (2 * s + 1) % 5});
  d.accepting = {true, false, false, false, false};
  return SetSpec(std::move(d));
}

inline SetSpec random_explicit_spec(unsigned n, std::uint64_t size,
                                    std::uint64_t seed) {
  if (n > 24) throw CeilingError("random explicit set limited to n <= 24");
  const std::uint64_t total = std::uint64_t{1} << n;
  if (size > total) throw ConfigError("explicit set larger than {0,1}^n");
  std::vector<std::uint64_t> all(total);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(splitmix64(seed));
  // partial Fisher-Yates
  for (std::uint64_t i = 0; i < size; ++i)
    std::swap(all[i], all[i + rng() % (total - i)]);
  all.resize(size);
  std::sort(all.begin(), all.end());
  std::vector<BitString> members;
  members.reserve(size);
  for (auto v : all) members.push_back(BitString::from_uint(v, n));
  return SetSpec::explicit_list(std::move(members));
}

/// Smallest instance where an explicit counting circuit certifies:
/// 9 strings of length 4, so k = 4, r = 2, L = 36.
inline SetSpec gadget1_spec() {
  std::vector<BitString> m;
  for (const char* s : {"0000", "0011", "0101", "0110", "1001", "1010",
                        "1100", "1111", "0111"})
    m.push_back(BitString::from_string(s));
  std::sort(m.begin(), m.end());
  return SetSpec::explicit_list(std::move(m));
}

struct SuiteConfig {
  std::uint64_t seed = 1;
  double delta = 8;
  std::uint64_t e2e_samples = 50;      // criterion 1
  std::uint64_t length_samples = 16;   // per (family, n), criterion 2
  std::vector<unsigned> length_ns = {8, 12, 16, 20};
  std::uint64_t claim1_trials = 500;   // criterion 3
  std::uint64_t gadget_tables = 200;   // criterion 4
  std::uint64_t bfl_pairs = 100;       // criterion 6
  std::uint64_t density_seeds = 200;   // criterion 7
  std::uint64_t fooling_samples = 200; // criterion 8
  std::set<int> only;                  // empty = all

  void validate() const {
    if (e2e_samples == 0 || length_samples == 0 || claim1_trials == 0 ||
        gadget_tables == 0 || bfl_pairs == 0 || density_seeds == 0 ||
        fooling_samples == 0)
      throw ConfigError("suite trial counts must be positive");
    if (length_ns.empty()) throw ConfigError("suite needs at least one n");
    for (int c : only)
      if (c < 1 || c > 9) throw ConfigError("criteria are numbered 1..9");
  }
  bool wants(int c) const { return only.empty() || only.count(c) > 0; }
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::vector<std::string> details;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::vector<CriterionResult> criteria;

  bool pass() const {
    return std::all_of(criteria.begin(), criteria.end(),
                       [](const auto& c) { return c.pass; });
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "kdist-suite 1 seed=" << seed << "\n";
    for (const auto& c : criteria) {
      for (const auto& d : c.details) out << "  c" << c.id << " " << d << "\n";
      out << "criterion " << c.id << " " << c.name << " "
          << (c.pass ? "PASS" : "FAIL") << "\n";
    }
    out << "suite " << (pass() ? "PASS" : "FAIL") << "\n";
    return out.str();
  }
};

namespace detail {

inline std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

inline std::vector<std::uint64_t> sample_members(const SetSlice& s,
                                                 std::uint64_t count,
                                                 std::uint64_t seed) {
  std::vector<std::uint64_t> m = s.members();
  std::mt19937_64 rng(splitmix64(seed));
  std::shuffle(m.begin(), m.end(), rng);
  if (m.size() > count) m.resize(count);
  std::sort(m.begin(), m.end());
  return m;
}

// Criteria 1 and 9 share one sweep.
struct SweepResult {
  CertifiedSigma cert;
  std::uint64_t calls = 0;
  std::uint64_t violations = 0;
  std::uint64_t query_violations = 0;
  std::uint64_t max_bits = 0;
};

inline SweepResult demo1_sweep(const SuiteConfig& cfg) {
  Scheme scheme = make_scheme(demo1_spec(), 12, cfg.delta);
  SweepResult res;
  res.cert = find_sigma(scheme.h, scheme.nw, scheme.slice, cfg.delta);
  Codec codec(scheme, res.cert);
  const unsigned n = scheme.slice.n();
  for (auto x : sample_members(scheme.slice, cfg.e2e_samples, cfg.seed)) {
    auto rec = codec.compress(BitString::from_uint(x, n), Mode::kOracle);
    res.max_bits = std::max(res.max_bits, rec.total_bits);
    for (std::uint64_t y = 0; y < (std::uint64_t{1} << n); ++y) {
      DistinguishStats st;
      bool acc = distinguish(BitString::from_uint(y, n), rec, scheme,
                             Mode::kOracle, &st);
      ++res.calls;
      if (acc != (y == x)) ++res.violations;
      if (st.oracle_queries != 1) ++res.query_violations;
    }
  }
  return res;
}

inline CriterionResult criterion_length(const SuiteConfig& cfg) {
  CriterionResult c{2, "length_bound", false, {}};
  struct Family {
    std::string name;
    std::function<SetSpec(unsigned)> make;
  };
  std::vector<Family> families = {
      {"popcount-mod-3", [](unsigned) { return demo1_spec(); }},
      {"dfa-mod-5", [](unsigned) { return dfa_mod5_spec(); }},
      {"explicit-random",
       [&](unsigned n) {
         return random_explicit_spec(n, (std::uint64_t{1} << n) / 10 + 1,
                                     cfg.seed + n);
       }},
  };
  std::vector<double> xs, ys;
  bool within = true;
  std::int64_t c0 = INT64_MIN;
  for (const auto& fam : families)
    for (unsigned n : cfg.length_ns) {
      Scheme scheme = make_scheme(fam.make(n), n, cfg.delta);
      auto cert = find_sigma(scheme.h, scheme.nw, scheme.slice, cfg.delta);
      Codec codec(scheme, cert);
      std::uint64_t worst = 0;
      unsigned fallback_records = 0;
      for (auto x : sample_members(scheme.slice, cfg.length_samples,
                                   cfg.seed ^ (n * 977ULL))) {
        auto rec = codec.compress(BitString::from_uint(x, n), Mode::kOracle);
        auto a = length_audit(rec, scheme.slice);
        if (rec.fallback) {
          ++fallback_records;
          continue;
        }
        worst = std::max(worst, rec.total_bits);
        xs.push_back(a.log_n);
        ys.push_back(static_cast<double>(a.overhead));
        c0 = std::max<std::int64_t>(
            c0, a.overhead - std::int64_t{kOverheadPerLogN} * a.log_n);
        if (!a.within(kOverheadPerLogN, kOverheadConstant)) within = false;
      }
      c.details.push_back(
          "family=" + fam.name + " n=" + std::to_string(n) +
          " card=" + std::to_string(scheme.slice.cardinality()) +
          " k=" + std::to_string(scheme.slice.k()) +
          " sigma_bits=" + std::to_string(scheme.h.sigma_bits) +
          " worst_total_bits=" + std::to_string(worst) +
          " bound=" +
          std::to_string(scheme.slice.k() +
                         kOverheadPerLogN * ceil_log2(n) + kOverheadConstant) +
          " fallback_records=" + std::to_string(fallback_records));
    }
  // least squares of overhead on ⌈log2 n⌉
  double slope = 0, intercept = 0, max_resid = 0;
  if (!xs.empty()) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= ys.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    slope = sxx > 0 ? sxy / sxx : 0;
    intercept = my - slope * mx;
    for (std::size_t i = 0; i < xs.size(); ++i)
      max_resid = std::max(max_resid,
                           std::abs(ys[i] - (intercept + slope * xs[i])));
  }
  constexpr double kMaxSlope = 8, kMaxResidual = 12;
  bool regression_ok = slope <= kMaxSlope && max_resid <= kMaxResidual;
  c.details.push_back("records=" + std::to_string(xs.size()) +
                      " C0=" + std::to_string(xs.empty() ? 0 : c0) +
                      " slope=" + fmt(slope) + " intercept=" + fmt(intercept) +
                      " max_residual=" + fmt(max_resid));
  c.pass = !xs.empty() && within && c0 <= std::int64_t{kOverheadConstant} &&
           regression_ok;
  return c;
}

inline CriterionResult criterion_claim1(const SuiteConfig& cfg) {
  CriterionResult c{3, "random_table_balance", false, {}};
  SetSlice s(SetSpec::popcount_mod(2), 10);
  auto res = mc_claim1(s, cfg.claim1_trials, cfg.seed);
  c.details.push_back("card=" + std::to_string(s.cardinality()) +
                      " k=" + std::to_string(s.k()) +
                      " r=" + std::to_string(s.r()) +
                      " trials=" + std::to_string(res.trials) +
                      " balanced=" + std::to_string(res.balanced) +
                      " fraction=" + fmt(res.fraction));
  c.pass = s.cardinality() == 512 && s.k() == 9 && s.r() == 4 &&
           res.fraction >= 0.95;
  return c;
}

struct Gadget1 {
  SetSlice slice;
  CountingThresholds th;
  CertifiedGadget gadget;
  std::optional<Circuit> G;
};

inline Gadget1 make_gadget1(const SuiteConfig& cfg) {
  SetSlice s(gadget1_spec(), 4);
  auto th = counting_thresholds(s);
  auto g = make_certified_gadget(th.input_len, th.low, th.high,
                                 cfg.gadget_tables, cfg.seed);
  Gadget1 out{std::move(s), th, std::move(g), std::nullopt};
  if (out.gadget.ok) out.G = build_G(out.slice, out.gadget.calibration.params);
  return out;
}

inline CriterionResult criterion_sandwich(const SuiteConfig& cfg,
                                          const Gadget1& g1) {
  CriterionResult c{4, "gadget_sandwich", false, {}};
  c.details.push_back("gadget L=" + std::to_string(g1.th.input_len) +
                      " low=" + std::to_string(g1.th.low) +
                      " high=" + std::to_string(g1.th.high) +
                      " or_width=" +
                      std::to_string(g1.gadget.calibration.params.or_width) +
                      " and_width=" +
                      std::to_string(g1.gadget.calibration.params.and_width) +
                      " attempts=" + std::to_string(g1.gadget.attempts));
  if (!g1.gadget.ok || !g1.G) {
    c.details.push_back("gadget not certified: " + g1.gadget.reason);
    return c;
  }
  c.details.push_back(g1.gadget.certification.to_text());
  c.details.push_back("G gates=" + std::to_string(g1.G->gate_count()) +
                      " depth=" + std::to_string(g1.G->depth()));
  const auto& s = g1.slice;
  const TableShape shape = shape_of(s);
  const std::uint64_t K = shape.outputs();
  const std::uint64_t b7 = balance_bound(s.cardinality(), s.r(), s.k(), 7);
  const std::uint64_t b8 = balance_bound(s.cardinality(), s.r(), s.k(), 8);
  const std::uint64_t L = g1.th.input_len;
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x54ab1e5ULL));
  std::uint64_t violations = 0, g_one = 0, seven = 0, eight = 0;
  std::vector<std::uint8_t> scratch;
  // Planted loads: the edges b7, b7+1 .. b8+1 first, then spread over 0..L.
  std::vector<std::uint64_t> planted;
  for (std::uint64_t w = b7; w <= b8 + 1 && w <= L; ++w) planted.push_back(w);
  for (std::uint64_t i = 0; planted.size() < cfg.gadget_tables; ++i)
    planted.push_back((i * (L + 1)) / cfg.gadget_tables +
                      rng() % std::max<std::uint64_t>(1, (L + 1) / cfg.gadget_tables));
  planted.resize(cfg.gadget_tables);
  for (auto w : planted) {
    w = std::min(w, L);
    std::vector<std::uint32_t> entries(shape.cells());
    for (auto& e : entries) e = static_cast<std::uint32_t>(rng() % K);
    // member cells: w get z, the rest anything else
    std::vector<std::uint64_t> cells;
    for (auto u : s.members())
      for (std::uint64_t v = 0; v < shape.columns(); ++v)
        cells.push_back(u * shape.columns() + v);
    std::shuffle(cells.begin(), cells.end(), rng);
    auto z = static_cast<std::uint32_t>(rng() % K);
    for (std::uint64_t i = 0; i < cells.size(); ++i)
      entries[cells[i]] = i < w ? z
                                : static_cast<std::uint32_t>(
                                      (z + 1 + rng() % (K - 1)) % K);
    auto table = ExtractorTable::from_entries(shape, entries, "planted");
    auto rep = check_balance(table, s, 8);
    bool out = g1.G->eval(serialize_table(table), scratch);
    g_one += out;
    bool is7 = rep.max_load <= b7, is8 = rep.max_load <= b8;
    seven += is7;
    eight += is8;
    if ((out && !is8) || (is7 && !out)) ++violations;
  }
  c.details.push_back("tables=" + std::to_string(planted.size()) +
                      " G_one=" + std::to_string(g_one) +
                      " seven_balanced=" + std::to_string(seven) +
                      " eight_balanced=" + std::to_string(eight) +
                      " violations=" + std::to_string(violations));
  c.pass = violations == 0;
  return c;
}

inline CriterionResult criterion_chernoff() {
  CriterionResult c{5, "chernoff_form", false, {}};
  std::vector<double> grid = {4, 5, 6, 7, 8, 9, 10};
  bool all = true;
  for (const auto& ch : verify_chernoff_form(grid)) {
    c.details.push_back("delta=" + fmt(ch.delta) +
                        " log_textbook=" + fmt(ch.log_textbook) +
                        " log_simplified=" + fmt(ch.log_simplified) +
                        " pass=" + (ch.pass ? "true" : "false"));
    all = all && ch.pass;
  }
  double union_bound = chernoff_tail({6, 16}) * 512;
  c.details.push_back("union_bound=" + fmt(union_bound));
  c.pass = all && union_bound < 0.01;
  return c;
}

inline CriterionResult criterion_bfl(const SuiteConfig& cfg) {
  CriterionResult c{6, "bfl_uniqueness", false, {}};
  const std::uint64_t sizes[] = {16, 64, 256, 1024};
  const unsigned ns[] = {8, 16};
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0xbf1ULL));
  std::uint64_t unique = 0, bits_ok = 0, index_ok = 0, worst_bits = 0,
                worst_index = 0;
  for (std::uint64_t t = 0; t < cfg.bfl_pairs; ++t) {
    unsigned n = ns[(t / 4) % 2];
    // {0,1}^8 has only 256 strings; the 1024 size runs at n = 16 only
    std::uint64_t size = sizes[t % 4];
    if (size > (std::uint64_t{1} << n)) n = 16;
    std::set<std::uint64_t> picked;
    while (picked.size() < size) picked.insert(rng() % (std::uint64_t{1} << n));
    std::vector<std::uint64_t> S(picked.begin(), picked.end());
    std::uint64_t x = S[rng() % S.size()];
    auto tag = make_tag(x, S, n);
    std::uint64_t accepts = 0;
    bool x_accepted = false;
    for (std::uint64_t y = 0; y < (std::uint64_t{1} << n); ++y)
      if (picked.count(y) && residue_matches(tag, BitString::from_uint(y, n))) {
        ++accepts;
        x_accepted |= (y == x);
      }
    unique += (accepts == 1 && x_accepted);
    auto bits = tag_bits(tag);
    double limit = 2 * std::log2(double(size)) + 4 * std::log2(double(n)) + 16;
    bits_ok += bits <= limit;
    index_ok += tag.prime_index <= n * size + 1;
    worst_bits = std::max<std::uint64_t>(worst_bits, bits);
    worst_index = std::max(worst_index, tag.prime_index);
  }
  c.details.push_back("pairs=" + std::to_string(cfg.bfl_pairs) +
                      " unique=" + std::to_string(unique) +
                      " tag_bits_ok=" + std::to_string(bits_ok) +
                      " index_ok=" + std::to_string(index_ok) +
                      " worst_tag_bits=" + std::to_string(worst_bits) +
                      " worst_prime_index=" + std::to_string(worst_index));
  c.pass = unique == cfg.bfl_pairs && bits_ok == cfg.bfl_pairs &&
           index_ok == cfg.bfl_pairs;
  return c;
}

inline CriterionResult criterion_density(const SuiteConfig& cfg) {
  CriterionResult c{7, "seed_density", false, {}};
  Scheme demo = make_scheme(demo1_spec(), 12, cfg.delta);
  auto st = sample_T_density(demo.nw, demo.slice, cfg.density_seeds, cfg.seed,
                             cfg.delta);
  c.details.push_back("T_density sampled=" + std::to_string(st.total_sampled) +
                      " good=" + std::to_string(st.good) +
                      " fraction=" + fmt(st.fraction));
  struct Fam {
    std::string name;
    SetSpec spec;
  };
  std::vector<Fam> fams = {
      {"popcount-mod-3", demo1_spec()},
      {"dfa-mod-5", dfa_mod5_spec()},
      {"explicit-random", random_explicit_spec(12, 4096 / 10 + 1, cfg.seed)},
  };
  unsigned certified = 0;
  bool all_valid = true;
  for (const auto& f : fams) {
    Scheme scheme = make_scheme(f.spec, 12, cfg.delta);
    std::string line = "find_sigma family=" + f.name;
    try {
      auto cert = find_sigma(scheme.h, scheme.nw, scheme.slice, cfg.delta);
      // re-derive the report independently of find_sigma
      bool valid = check_balance(nw_table(scheme.nw, cert.s), scheme.slice,
                                 cfg.delta)
                       .balanced &&
                   (cert.fallback || h_expand(scheme.h, cert.sigma) == cert.s);
      all_valid = all_valid && valid;
      certified += cert.certified;
      line += std::string(" certified=") + (cert.certified ? "true" : "false") +
              " fallback=" + (cert.fallback ? "true" : "false") +
              " sigmas_tried=" + std::to_string(cert.sigmas_tried) +
              " valid=" + (valid ? "true" : "false") + " " +
              cert.report.to_text();
    } catch (const CertificationError& e) {
      all_valid = false;
      line += std::string(" error=") + e.what();
    }
    c.details.push_back(line);
  }
  c.pass = st.fraction >= 0.5 && all_valid && certified > 0;
  return c;
}

inline CriterionResult criterion_fooling(const SuiteConfig& cfg,
                                         const Gadget1& g1) {
  CriterionResult c{8, "fooling_gap", false, {}};
  if (!g1.G) {
    c.details.push_back("no certified counting circuit: " + g1.gadget.reason);
    return c;
  }
  auto p = default_nw_params(shape_of(g1.slice));
  auto rep = fooling_gap(*g1.G, p, cfg.fooling_samples, cfg.fooling_samples,
                         cfg.seed);
  c.details.push_back("n_tilde=" + std::to_string(p.n_tilde) +
                      " N_tilde=" + std::to_string(p.N_tilde) + " " +
                      rep.to_text());
  c.pass = rep.gap <= 0.25;
  return c;
}

}  // namespace detail

/// Runs the selected acceptance criteria. Everything is a function of the
/// config, so equal configs give byte-identical reports.
inline SuiteReport run_suite(const SuiteConfig& cfg,
                             const std::function<void(const CriterionResult&)>&
                                 on_result = nullptr) {
  cfg.validate();
  SuiteReport rep;
  rep.seed = cfg.seed;
  auto emit = [&](CriterionResult c) {
    if (on_result) on_result(c);
    rep.criteria.push_back(std::move(c));
  };
  if (cfg.wants(1) || cfg.wants(9)) {
    auto sw = detail::demo1_sweep(cfg);
    std::string head = std::string("sigma_certified=") +
                       (sw.cert.certified ? "true" : "false") +
                       " fallback=" + (sw.cert.fallback ? "true" : "false") +
                       " " + sw.cert.report.to_text();
    if (cfg.wants(1))
      emit({1, "end_to_end_uniqueness", sw.violations == 0 && sw.calls > 0,
            {head, "samples=" + std::to_string(cfg.e2e_samples) +
                       " calls=" + std::to_string(sw.calls) +
                       " violations=" + std::to_string(sw.violations) +
                       " max_total_bits=" + std::to_string(sw.max_bits)}});
    if (cfg.wants(9))
      emit({9, "single_oracle_query", sw.query_violations == 0 && sw.calls > 0,
            {"calls=" + std::to_string(sw.calls) +
             " calls_not_one_query=" + std::to_string(sw.query_violations)}});
  }
  if (cfg.wants(2)) emit(detail::criterion_length(cfg));
  if (cfg.wants(3)) emit(detail::criterion_claim1(cfg));
  if (cfg.wants(4) || cfg.wants(8)) {
    auto g1 = detail::make_gadget1(cfg);
    if (cfg.wants(4)) emit(detail::criterion_sandwich(cfg, g1));
    if (cfg.wants(8)) emit(detail::criterion_fooling(cfg, g1));
  }
  if (cfg.wants(5)) emit(detail::criterion_chernoff());
  if (cfg.wants(6)) emit(detail::criterion_bfl(cfg));
  if (cfg.wants(7)) emit(detail::criterion_density(cfg));
  std::sort(rep.criteria.begin(), rep.criteria.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return rep;
}

}  // namespace kdist
