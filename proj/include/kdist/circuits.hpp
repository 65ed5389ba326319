#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kdist/balance.hpp"
#include "kdist/bits.hpp"
#include "kdist/sets.hpp"

namespace kdist {

enum class GateKind : std::uint8_t { kAnd, kOr, kNot };

inline std::string_view gate_name(GateKind k) {
  switch (k) {
    case GateKind::kAnd: return "AND";
    case GateKind::kOr: return "OR";
    case GateKind::kNot: return "NOT";
  }
  return "?";
}

/// Unbounded fan-in AND/OR/NOT network. Ids [0, arity) are inputs; gate g
/// has id arity + g and may only read smaller ids, so the gate list is a
/// topological order.
///
/// Depth counts AND/OR gates on the longest input-to-output path; NOT gates
/// are free, as in the usual constant-depth circuit convention.
class Circuit {
 public:
  std::uint32_t arity() const { return arity_; }
  std::size_t gate_count() const { return kinds_.size(); }
  std::size_t wire_count() const { return fanin_.size(); }
  std::uint32_t output() const { return output_; }
  unsigned depth() const { return depth_; }

  GateKind kind(std::size_t gate) const { return kinds_.at(gate); }
  std::span<const std::uint32_t> fanin(std::size_t gate) const {
    return std::span(fanin_).subspan(offsets_.at(gate),
                                     offsets_.at(gate + 1) - offsets_[gate]);
  }

  /// `scratch` is reused across calls to avoid reallocation.
  bool eval(std::span<const std::uint8_t> input,
            std::vector<std::uint8_t>& scratch) const {
    if (input.size() != arity_)
      throw WidthError("circuit input length " + std::to_string(input.size()) +
                       " != arity " + std::to_string(arity_));
    scratch.resize(arity_ + kinds_.size());
    std::copy(input.begin(), input.end(), scratch.begin());
    for (std::size_t g = 0; g < kinds_.size(); ++g) {
      const std::uint32_t* first = fanin_.data() + offsets_[g];
      const std::uint32_t* last = fanin_.data() + offsets_[g + 1];
      std::uint8_t v = 0;
      switch (kinds_[g]) {
        case GateKind::kAnd:
          v = 1;
          for (auto* p = first; p != last; ++p)
            if (!scratch[*p]) {
              v = 0;
              break;
            }
          break;
        case GateKind::kOr:
          for (auto* p = first; p != last; ++p)
            if (scratch[*p]) {
              v = 1;
              break;
            }
          break;
        case GateKind::kNot:
          v = !scratch[*first];
          break;
      }
      scratch[arity_ + g] = v;
    }
    return scratch[output_] != 0;
  }

  bool eval(std::span<const std::uint8_t> input) const {
    std::vector<std::uint8_t> scratch;
    return eval(input, scratch);
  }

  bool eval(const BitString& input) const {
    std::vector<std::uint8_t> bits(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) bits[i] = input[i];
    return eval(bits);
  }

 private:
  friend class CircuitBuilder;
  std::uint32_t arity_ = 0;
  std::vector<GateKind> kinds_;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<std::uint32_t> fanin_;
  std::vector<std::uint16_t> level_;  // per id
  std::uint32_t output_ = 0;
  unsigned depth_ = 0;
};

class CircuitBuilder {
 public:
  explicit CircuitBuilder(std::uint32_t arity) {
    c_.arity_ = arity;
    c_.level_.assign(arity, 0);
  }

  std::uint32_t next_id() const {
    return c_.arity_ + static_cast<std::uint32_t>(c_.kinds_.size());
  }

  std::uint32_t add(GateKind kind, std::span<const std::uint32_t> fanin) {
    const std::uint32_t id = next_id();
    if (kind == GateKind::kNot && fanin.size() != 1)
      throw ConfigError("NOT gate needs fan-in 1");
    std::uint16_t level = 0;
    for (auto f : fanin) {
      if (f >= id) throw ConfigError("gate reads a later id (cycle)");
      level = std::max(level, c_.level_[f]);
    }
    if (kind != GateKind::kNot) ++level;
    c_.kinds_.push_back(kind);
    c_.fanin_.insert(c_.fanin_.end(), fanin.begin(), fanin.end());
    c_.offsets_.push_back(static_cast<std::uint32_t>(c_.fanin_.size()));
    c_.level_.push_back(level);
    return id;
  }

  std::uint32_t add_and(std::span<const std::uint32_t> f) {
    return add(GateKind::kAnd, f);
  }
  std::uint32_t add_or(std::span<const std::uint32_t> f) {
    return add(GateKind::kOr, f);
  }
  std::uint32_t add_not(std::uint32_t f) {
    return add(GateKind::kNot, std::span(&f, 1));
  }

  std::size_t gate_count() const { return c_.kinds_.size(); }
  std::size_t wire_count() const { return c_.fanin_.size(); }

  Circuit build(std::uint32_t output) && {
    if (output >= next_id()) throw ConfigError("circuit output id undefined");
    c_.output_ = output;
    c_.depth_ = c_.level_[output];
    return std::move(c_);
  }

 private:
  Circuit c_;
};

// Line-oriented gate list:
//   kdist-circuit 1 / inputs <n> / gate <id> <AND|OR|NOT> <ids...> / output <id>
inline void write_circuit(std::ostream& out, const Circuit& c) {
  out << "kdist-circuit 1\ninputs " << c.arity() << "\n";
  for (std::size_t g = 0; g < c.gate_count(); ++g) {
    out << "gate " << c.arity() + g << " " << gate_name(c.kind(g));
    for (auto f : c.fanin(g)) out << " " << f;
    out << "\n";
  }
  out << "output " << c.output() << "\n";
}

inline Circuit read_circuit(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "kdist-circuit 1")
    throw DecodeError("not a kdist circuit file");
  std::optional<CircuitBuilder> b;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string key;
    if (!(f >> key)) continue;
    if (key == "inputs") {
      std::uint32_t n;
      if (!(f >> n)) throw DecodeError("bad inputs line");
      b.emplace(n);
    } else if (key == "gate") {
      if (!b) throw DecodeError("gate before inputs line");
      std::uint32_t id;
      std::string kind;
      if (!(f >> id >> kind) || id != b->next_id())
        throw DecodeError("gate ids must be consecutive");
      std::vector<std::uint32_t> fanin;
      std::uint32_t x;
      while (f >> x) fanin.push_back(x);
      GateKind k;
      if (kind == "AND")
        k = GateKind::kAnd;
      else if (kind == "OR")
        k = GateKind::kOr;
      else if (kind == "NOT")
        k = GateKind::kNot;
      else
        throw DecodeError("unknown gate kind " + kind);
      try {
        b->add(k, fanin);
      } catch (const ConfigError& e) {
        throw DecodeError(e.what());
      }
    } else if (key == "output") {
      std::uint32_t out;
      if (!b || !(f >> out)) throw DecodeError("bad output line");
      try {
        return std::move(*b).build(out);
      } catch (const ConfigError& e) {
        throw DecodeError(e.what());
      }
    } else {
      throw DecodeError("unknown circuit line '" + key + "'");
    }
  }
  throw DecodeError("circuit file has no output line");
}

/// Approximate-threshold gadget: output 1 when the ones-count is at most
/// low_threshold, 0 when it is at least high_threshold.
///
/// Layout: NOT( OR over or_width partitions of AND over and_width bucket
/// ORs ), each partition a seeded random split of the L positions into
/// disjoint buckets. With and_width > low_threshold an accepted input can
/// never light every bucket, so the accept side is exact; the reject side
/// holds with the probability calibrate_gadget targets.
struct GadgetParams {
  std::uint64_t input_len = 0;
  std::uint64_t low_threshold = 0;
  std::uint64_t high_threshold = 1;
  std::uint64_t and_width = 1;
  std::uint64_t or_width = 1;
  std::uint64_t rng_seed = 0;

  bool trivially_accepting() const {
    return high_threshold > input_len || low_threshold >= input_len;
  }

  void validate() const {
    if (low_threshold >= high_threshold)
      throw ConfigError("gadget needs low_threshold < high_threshold");
    if (and_width < 1 || or_width < 1)
      throw ConfigError("gadget widths must be >= 1");
    if (!trivially_accepting() && and_width > input_len)
      throw ConfigError("gadget and_width exceeds input length");
  }
};

inline std::uint32_t emit_counting_gadget(
    CircuitBuilder& b, std::span<const std::uint32_t> inputs,
    const GadgetParams& p) {
  p.validate();
  if (inputs.size() != p.input_len)
    throw WidthError("gadget input count != input_len");
  if (p.trivially_accepting()) {
    // No input reaches high_threshold: NOT(OR()) is constant 1.
    return b.add_not(b.add_or({}));
  }
  const std::size_t L = inputs.size();
  const std::size_t q = p.and_width;
  std::mt19937_64 rng(splitmix64(p.rng_seed));
  std::vector<std::uint32_t> perm(L), bucket, ands(p.or_width), ors(q);
  for (std::uint64_t m = 0; m < p.or_width; ++m) {
    std::iota(perm.begin(), perm.end(), 0U);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < q; ++j) {
      std::size_t size = L / q + (j < L % q ? 1 : 0);
      bucket.clear();
      for (std::size_t t = 0; t < size; ++t) bucket.push_back(inputs[perm[pos++]]);
      ors[j] = b.add_or(bucket);
    }
    ands[m] = b.add_and(ors);
  }
  return b.add_not(b.add_or(ands));
}

inline Circuit build_counting_gadget(const GadgetParams& p) {
  CircuitBuilder b(static_cast<std::uint32_t>(p.input_len));
  std::vector<std::uint32_t> in(p.input_len);
  std::iota(in.begin(), in.end(), 0U);
  auto out = emit_counting_gadget(b, in, p);
  return std::move(b).build(out);
}

/// Probability that w ones placed uniformly among L positions hit all q
/// buckets of an even partition (sizes ⌊L/q⌋ or ⌈L/q⌉). Exact count by
/// dynamic programming over buckets.
inline long double cover_probability(std::uint64_t L, std::uint64_t q,
                                     std::uint64_t w) {
  if (q == 0 || q > L || w > L) return 0;
  if (w < q) return 0;
  auto lchoose = [](std::uint64_t a, std::uint64_t b) {
    return std::lgamma(static_cast<long double>(a) + 1) -
           std::lgamma(static_cast<long double>(b) + 1) -
           std::lgamma(static_cast<long double>(a - b) + 1);
  };
  // ways[c]: ways to place c ones so every bucket so far is hit, scaled by
  // 1/C(L, w) in log space at the end.
  std::vector<long double> ways(w + 1, 0), next(w + 1);
  ways[0] = 1;
  for (std::uint64_t j = 0; j < q; ++j) {
    std::uint64_t size = L / q + (j < L % q ? 1 : 0);
    std::fill(next.begin(), next.end(), 0);
    for (std::uint64_t c = 0; c <= w; ++c) {
      if (ways[c] == 0) continue;
      for (std::uint64_t t = 1; t <= size && c + t <= w; ++t)
        next[c + t] += ways[c] * std::exp(lchoose(size, t));
    }
    ways.swap(next);
  }
  if (ways[w] <= 0) return 0;
  return std::exp(std::log(ways[w]) - lchoose(L, w));
}

struct GadgetCalibration {
  GadgetParams params;
  long double cover_probability_at_high = 1;
  std::uint64_t wires = 0;
  bool feasible = false;
  std::string reason;
};

inline constexpr std::uint64_t kDefaultGadgetWireCeiling = 20'000'000;

/// Picks and_width = low+1 and the smallest or_width for which each
/// validation input at the high edge escapes rejection with probability
/// at most 1/(1000·validation_count).
inline GadgetCalibration calibrate_gadget(
    std::uint64_t L, std::uint64_t low, std::uint64_t high,
    std::uint64_t validation_count, std::uint64_t rng_seed,
    std::uint64_t wire_ceiling = kDefaultGadgetWireCeiling) {
  GadgetCalibration cal;
  cal.params = {L, low, high, 1, 1, rng_seed};
  if (low >= high) throw ConfigError("gadget needs low < high");
  if (cal.params.trivially_accepting()) {
    cal.feasible = true;
    cal.reason = "high threshold unreachable; constant-1 gadget";
    return cal;
  }
  cal.params.and_width = low + 1;
  long double p = cover_probability(L, low + 1, high);
  cal.cover_probability_at_high = p;
  if (p <= 0) {
    cal.reason = "cover probability underflows at the high threshold";
    return cal;
  }
  long double target =
      std::log(static_cast<long double>(std::max<std::uint64_t>(validation_count, 1)) * 1000);
  long double m = std::ceil(target / -std::log1p(-std::min(p, 0.999999L)));
  long double wires = m * static_cast<long double>(L + low + 2);
  if (wires > static_cast<long double>(wire_ceiling)) {
    std::ostringstream why;
    why << "needs ~" << static_cast<double>(m) << " partitions ("
        << static_cast<double>(wires) << " wires) above the ceiling "
        << wire_ceiling << "; cover probability "
        << static_cast<double>(p);
    cal.reason = why.str();
    return cal;
  }
  cal.params.or_width = static_cast<std::uint64_t>(m);
  cal.wires = static_cast<std::uint64_t>(wires);
  cal.feasible = true;
  return cal;
}

struct GadgetCounterexample {
  std::uint64_t ones = 0;
  bool output = false;
  BitString input;
};

struct GadgetCertification {
  bool pass = false;
  std::uint64_t checked = 0;
  std::uint64_t accept_side = 0;
  std::uint64_t reject_side = 0;
  std::optional<GadgetCounterexample> counterexample;

  std::string to_text() const {
    std::ostringstream out;
    out << "gadget_certification pass=" << (pass ? "true" : "false")
        << " checked=" << checked << " accept_side=" << accept_side
        << " reject_side=" << reject_side;
    if (counterexample)
      out << " counterexample_ones=" << counterexample->ones
          << " counterexample_output=" << counterexample->output;
    return out.str();
  }
};

/// Ones-counts at which validation inputs are drawn: both edges and the
/// extremes always, the rest spread over equal-width strata of each side.
inline std::vector<std::uint64_t> stratified_counts(std::uint64_t L,
                                                    std::uint64_t low,
                                                    std::uint64_t high,
                                                    std::uint64_t count,
                                                    std::mt19937_64& rng) {
  std::vector<std::uint64_t> out;
  const bool reject_side = high <= L;
  const std::uint64_t lo_acc = 0, hi_acc = std::min(low, L);
  auto draw = [&](std::uint64_t a, std::uint64_t b, std::uint64_t strata,
                  std::uint64_t i) {
    std::uint64_t width = b - a + 1;
    std::uint64_t s = i % strata;
    std::uint64_t s0 = a + width * s / strata;
    std::uint64_t s1 = a + width * (s + 1) / strata;
    if (s1 <= s0) s1 = s0 + 1;
    return s0 + rng() % (s1 - s0);
  };
  for (auto w : {hi_acc, lo_acc}) out.push_back(w);
  if (reject_side)
    for (auto w : {high, L}) out.push_back(w);
  constexpr std::uint64_t kStrata = 8;
  for (std::uint64_t i = 0; out.size() < count; ++i) {
    if (!reject_side || i % 2 == 0)
      out.push_back(draw(lo_acc, hi_acc, kStrata, i / 2));
    else
      out.push_back(draw(high, L, kStrata, i / 2));
  }
  out.resize(std::max<std::uint64_t>(count, 0));
  return out;
}

/// Validation over stratified random inputs: any acceptance at >= high or
/// rejection at <= low fails, with the offending input as witness.
inline GadgetCertification certify_gadget(const Circuit& c, std::uint64_t low,
                                          std::uint64_t high,
                                          std::uint64_t validation_count,
                                          std::uint64_t rng_seed) {
  const std::uint64_t L = c.arity();
  std::mt19937_64 rng(splitmix64(rng_seed ^ 0x6a09e667f3bcc908ULL));
  GadgetCertification rep;
  std::vector<std::uint8_t> input(L), scratch;
  std::vector<std::uint32_t> perm(L);
  for (auto w : stratified_counts(L, low, high, validation_count, rng)) {
    std::iota(perm.begin(), perm.end(), 0U);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::fill(input.begin(), input.end(), 0);
    for (std::uint64_t t = 0; t < w; ++t) input[perm[t]] = 1;
    bool out = c.eval(input, scratch);
    ++rep.checked;
    bool violation = false;
    if (w <= low) {
      ++rep.accept_side;
      violation = !out;
    } else if (w >= high) {
      ++rep.reject_side;
      violation = out;
    }
    if (violation && !rep.counterexample) {
      GadgetCounterexample ce;
      ce.ones = w;
      ce.output = out;
      for (auto b : input) ce.input.push_back(b);
      rep.counterexample = ce;
    }
  }
  rep.pass = !rep.counterexample;
  return rep;
}

struct CertifiedGadget {
  GadgetCalibration calibration;
  GadgetCertification certification;
  Circuit circuit;
  unsigned attempts = 0;
  bool ok = false;
  std::string reason;
};

/// Calibrate, build, certify; failed randomness is redrawn up to
/// `attempts` times. Failure is reported in the result, never hidden.
inline CertifiedGadget make_certified_gadget(
    std::uint64_t L, std::uint64_t low, std::uint64_t high,
    std::uint64_t validation_count, std::uint64_t rng_seed,
    unsigned attempts = 8,
    std::uint64_t wire_ceiling = kDefaultGadgetWireCeiling) {
  CertifiedGadget out;
  out.calibration =
      calibrate_gadget(L, low, high, validation_count, rng_seed, wire_ceiling);
  if (!out.calibration.feasible) {
    out.reason = "calibration failed: " + out.calibration.reason;
    return out;
  }
  for (unsigned a = 0; a < attempts; ++a) {
    out.attempts = a + 1;
    out.calibration.params.rng_seed = splitmix64(rng_seed + a);
    out.circuit = build_counting_gadget(out.calibration.params);
    out.certification = certify_gadget(out.circuit, low, high,
                                       validation_count,
                                       splitmix64(rng_seed ^ (a + 0x51ULL)));
    if (out.certification.pass) {
      out.ok = true;
      return out;
    }
  }
  out.reason = "certification failed after " + std::to_string(attempts) +
               " redraws";
  return out;
}

struct CountingThresholds {
  std::uint64_t input_len = 0;
  std::uint64_t low = 0;   // accept when load <= ⌈7μ⌉
  std::uint64_t high = 0;  // reject when load >= ⌈8μ⌉ + 1
};

inline CountingThresholds counting_thresholds(const SetSlice& s) {
  return {s.cardinality() << s.r(),
          balance_bound(s.cardinality(), s.r(), s.k(), 7),
          balance_bound(s.cardinality(), s.r(), s.k(), 8) + 1};
}

inline constexpr std::uint64_t kDefaultCircuitGateCeiling = 20'000'000;
inline constexpr std::uint64_t kDefaultCircuitWireCeiling = 100'000'000;

/// The counting circuit over the full row-major table serialization (bit j
/// of cell (u,v) at index (u·2^r + v)·k + j, j = 0 the most significant).
/// For each z a selector layer forms x_z over B^=n × {0,1}^r, a gadget copy
/// runs on x_z, and an AND joins the copies.
inline Circuit build_G(const SetSlice& slice, const GadgetParams& gadget,
                       std::uint64_t gate_ceiling = kDefaultCircuitGateCeiling,
                       std::uint64_t wire_ceiling = kDefaultCircuitWireCeiling) {
  const TableShape shape = shape_of(slice);
  const auto th = counting_thresholds(slice);
  if (gadget.input_len != th.input_len)
    throw ConfigError("gadget input length must be |B^=n|·2^r");
  const std::uint64_t K = shape.outputs();
  const std::uint64_t L = th.input_len;
  const std::uint64_t gadget_gates =
      gadget.trivially_accepting() ? 2 : gadget.or_width * (gadget.and_width + 1) + 2;
  const std::uint64_t gadget_wires =
      gadget.trivially_accepting() ? 1 : gadget.or_width * (L + gadget.and_width) + 1;
  const std::uint64_t gates = K * (L + gadget_gates) + L * shape.k + 1;
  const std::uint64_t wires = K * (L * shape.k + gadget_wires) + K;
  if (gates > gate_ceiling || wires > wire_ceiling || shape.bit_length() > UINT32_MAX)
    throw CeilingError("counting circuit needs ~" + std::to_string(gates) +
                       " gates / " + std::to_string(wires) +
                       " wires for 2^k = " + std::to_string(K) + " copies");
  CircuitBuilder b(static_cast<std::uint32_t>(shape.bit_length()));
  std::vector<std::uint32_t> negated(shape.bit_length(), UINT32_MAX);
  auto literal = [&](std::uint64_t pos, bool positive) -> std::uint32_t {
    if (positive) return static_cast<std::uint32_t>(pos);
    if (negated[pos] == UINT32_MAX)
      negated[pos] = b.add_not(static_cast<std::uint32_t>(pos));
    return negated[pos];
  };
  std::vector<std::uint32_t> copies, x_z(L), lits(shape.k);
  for (std::uint64_t z = 0; z < K; ++z) {
    std::size_t idx = 0;
    for (auto u : slice.members())
      for (std::uint64_t v = 0; v < shape.columns(); ++v) {
        std::uint64_t base = (u * shape.columns() + v) * shape.k;
        for (unsigned j = 0; j < shape.k; ++j)
          lits[j] = literal(base + j, (z >> (shape.k - 1 - j)) & 1U);
        x_z[idx++] = b.add_and(lits);
      }
    copies.push_back(emit_counting_gadget(b, x_z, gadget));
  }
  std::uint32_t out = copies.size() == 1 ? copies[0] : b.add_and(copies);
  return std::move(b).build(out);
}

/// Row-major bit serialization of a table (the input G reads).
inline std::vector<std::uint8_t> serialize_table(const ExtractorTable& t) {
  const auto& s = t.shape();
  std::vector<std::uint8_t> bits(s.bit_length());
  auto entries = t.entries();
  for (std::uint64_t c = 0; c < entries.size(); ++c)
    for (unsigned j = 0; j < s.k; ++j)
      bits[c * s.k + j] = (entries[c] >> (s.k - 1 - j)) & 1U;
  return bits;
}

}  // namespace kdist
