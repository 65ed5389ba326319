#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kdist/bits.hpp"
#include "kdist/sets.hpp"

namespace kdist {

/// Bit widths of E : {0,1}^n × {0,1}^r → {0,1}^k.
struct TableShape {
  unsigned n = 0, r = 0, k = 0;

  std::uint64_t rows() const { return std::uint64_t{1} << n; }
  std::uint64_t columns() const { return std::uint64_t{1} << r; }
  std::uint64_t outputs() const { return std::uint64_t{1} << k; }
  std::uint64_t cells() const { return rows() * columns(); }
  /// Length of the row-major bit serialization (Ñ).
  std::uint64_t bit_length() const { return cells() * k; }

  friend bool operator==(const TableShape&, const TableShape&) = default;
};

inline TableShape shape_of(const SetSlice& s) { return {s.n(), s.r(), s.k()}; }

/// The extractor table. Either dense (every entry stored) or row-generated;
/// both are immutable and deterministic.
class ExtractorTable {
 public:
  using RowFn =
      std::function<void(std::uint64_t u, std::span<std::uint32_t> row)>;

  static ExtractorTable from_entries(TableShape shape,
                                     std::vector<std::uint32_t> entries,
                                     std::string provenance = "explicit") {
    check_shape(shape);
    if (entries.size() != shape.cells())
      throw WidthError("entry count must be 2^(n+r)");
    for (auto e : entries)
      if (shape.k < 32 && (e >> shape.k) != 0)
        throw WidthError("table entry wider than k bits");
    ExtractorTable t;
    t.shape_ = shape;
    t.provenance_ = std::move(provenance);
    t.dense_ = std::make_shared<const std::vector<std::uint32_t>>(
        std::move(entries));
    return t;
  }

  static ExtractorTable from_rows(TableShape shape, std::string provenance,
                                  RowFn fn) {
    check_shape(shape);
    ExtractorTable t;
    t.shape_ = shape;
    t.provenance_ = std::move(provenance);
    t.row_fn_ = std::move(fn);
    return t;
  }

  const TableShape& shape() const { return shape_; }
  const std::string& provenance() const { return provenance_; }

  void row(std::uint64_t u, std::span<std::uint32_t> out) const {
    if (u >= shape_.rows()) throw WidthError("row index wider than n bits");
    if (out.size() != shape_.columns())
      throw WidthError("row buffer must hold 2^r entries");
    if (dense_) {
      auto first = dense_->begin() +
                   static_cast<std::ptrdiff_t>(u * shape_.columns());
      std::copy(first, first + static_cast<std::ptrdiff_t>(out.size()),
                out.begin());
    } else {
      row_fn_(u, out);
    }
  }

  std::uint32_t operator()(std::uint64_t u, std::uint64_t v) const {
    if (v >= shape_.columns()) throw WidthError("column index wider than r");
    if (dense_) {
      if (u >= shape_.rows()) throw WidthError("row index wider than n bits");
      return (*dense_)[u * shape_.columns() + v];
    }
    std::vector<std::uint32_t> buf(shape_.columns());
    row(u, buf);
    return buf[v];
  }

  /// Dense copy of all 2^(n+r) entries, row-major.
  std::vector<std::uint32_t> entries() const {
    if (dense_) return *dense_;
    std::vector<std::uint32_t> out(shape_.cells());
    for (std::uint64_t u = 0; u < shape_.rows(); ++u)
      row(u, std::span(out).subspan(u * shape_.columns(), shape_.columns()));
    return out;
  }

 private:
  static void check_shape(const TableShape& s) {
    if (s.k > 31) throw CeilingError("k above 31 bits");
    if (s.n + s.r > 40) throw CeilingError("n + r above 40 bits");
  }

  TableShape shape_;
  std::string provenance_;
  std::shared_ptr<const std::vector<std::uint32_t>> dense_;
  RowFn row_fn_;
};

inline std::uint32_t eval_e(const ExtractorTable& table, std::uint64_t u,
                            std::uint64_t v) {
  return table(u, v);
}

inline BitString eval_e(const ExtractorTable& table, const BitString& u,
                        const BitString& v) {
  const auto& s = table.shape();
  if (u.size() != s.n || v.size() != s.r)
    throw WidthError("eval_e: argument widths do not match the table");
  return BitString::from_uint(table(u.to_uint(), v.to_uint()), s.k);
}

/// Constant table, every cell mapped to `value`.
inline ExtractorTable constant_table(TableShape shape, std::uint32_t value = 0) {
  return ExtractorTable::from_entries(
      shape, std::vector<std::uint32_t>(shape.cells(), value), "explicit");
}

/// Uniformly random table drawn from a seeded mt19937_64 stream.
inline ExtractorTable random_table(TableShape shape, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::vector<std::uint32_t> entries(shape.cells());
  for (auto& e : entries)
    e = shape.k == 0 ? 0 : static_cast<std::uint32_t>(rng() >> (64 - shape.k));
  return ExtractorTable::from_entries(shape, std::move(entries),
                                      "random(" + std::to_string(seed) + ")");
}

/// Rows of the table restricted to B^=n: cells[i * 2^r + v] = E(member_i, v).
struct SliceCells {
  std::uint64_t columns = 1;
  std::vector<std::uint32_t> cells;
};

inline void check_widths(const ExtractorTable& table, const SetSlice& slice) {
  if (table.shape() != shape_of(slice))
    throw WidthError("table widths do not match the slice");
}

inline SliceCells materialize(const ExtractorTable& table,
                              const SetSlice& slice) {
  check_widths(table, slice);
  SliceCells out;
  out.columns = table.shape().columns();
  out.cells.resize(slice.cardinality() * out.columns);
  for (std::size_t i = 0; i < slice.members().size(); ++i)
    table.row(slice.members()[i],
              std::span(out.cells).subspan(i * out.columns, out.columns));
  return out;
}

/// Load of every z over B^=n × {0,1}^r.
inline std::vector<std::uint64_t> loads(const SliceCells& cells, unsigned k) {
  std::vector<std::uint64_t> out(std::uint64_t{1} << k, 0);
  for (auto z : cells.cells) ++out[z];
  return out;
}

inline std::uint64_t preimage_load(const ExtractorTable& table,
                                   const SetSlice& slice, std::uint32_t z) {
  check_widths(table, slice);
  if (table.shape().k < 32 && (z >> table.shape().k) != 0)
    throw WidthError("z wider than k bits");
  std::uint64_t count = 0;
  for (auto c : materialize(table, slice).cells) count += (c == z);
  return count;
}

/// ⌈Δ · |B^=n| · 2^r / 2^k⌉, exact when Δ is integral.
inline std::uint64_t balance_bound(std::uint64_t cardinality, unsigned r,
                                   unsigned k, double delta) {
  if (delta == std::floor(delta) && delta >= 0 && delta < 1e6) {
    unsigned __int128 num = static_cast<unsigned __int128>(delta) *
                            cardinality * (std::uint64_t{1} << r);
    unsigned __int128 den = std::uint64_t{1} << k;
    return static_cast<std::uint64_t>((num + den - 1) / den);
  }
  long double v = static_cast<long double>(delta) * cardinality *
                  std::ldexp(1.0L, static_cast<int>(r) - static_cast<int>(k));
  return static_cast<std::uint64_t>(std::ceil(v));
}

struct BalanceReport {
  double delta = 0;
  double mu = 0;
  std::uint64_t bound = 0;
  std::uint64_t max_load = 0;
  std::uint32_t argmax_z = 0;
  unsigned k = 0;
  bool balanced = false;

  std::string to_text() const {
    std::ostringstream out;
    out << std::setprecision(17) << "balance delta=" << delta << " mu=" << mu
        << " bound=" << bound << " max_load=" << max_load
        << " argmax_z=" << BitString::from_uint(argmax_z, k).to_string()
        << " k=" << k << " balanced=" << (balanced ? "true" : "false");
    return out.str();
  }

  static BalanceReport parse(const std::string& line) {
    std::istringstream in(line);
    std::string word;
    in >> word;
    if (word != "balance") throw DecodeError("not a balance record");
    std::map<std::string, std::string> kv;
    while (in >> word) {
      auto eq = word.find('=');
      if (eq == std::string::npos) throw DecodeError("bad balance field");
      kv[word.substr(0, eq)] = word.substr(eq + 1);
    }
    try {
      BalanceReport r;
      r.delta = std::stod(kv.at("delta"));
      r.mu = std::stod(kv.at("mu"));
      r.bound = std::stoull(kv.at("bound"));
      r.max_load = std::stoull(kv.at("max_load"));
      r.k = static_cast<unsigned>(std::stoul(kv.at("k")));
      auto z = kv.at("argmax_z");
      r.argmax_z = static_cast<std::uint32_t>(
          z.empty() ? 0 : BitString::from_string(z).to_uint());
      r.balanced = kv.at("balanced") == "true";
      return r;
    } catch (const std::out_of_range&) {
      throw DecodeError("balance record is missing a field");
    } catch (const std::invalid_argument&) {
      throw DecodeError("balance record has a malformed number");
    }
  }
};

inline BalanceReport balance_from_loads(std::span<const std::uint64_t> load,
                                        const SetSlice& slice, double delta) {
  BalanceReport rep;
  rep.delta = delta;
  rep.k = slice.k();
  rep.mu = static_cast<double>(slice.cardinality()) *
           std::ldexp(1.0, static_cast<int>(slice.r()) -
                               static_cast<int>(slice.k()));
  rep.bound = balance_bound(slice.cardinality(), slice.r(), slice.k(), delta);
  for (std::size_t z = 0; z < load.size(); ++z)
    if (load[z] > rep.max_load) {
      rep.max_load = load[z];
      rep.argmax_z = static_cast<std::uint32_t>(z);
    }
  rep.balanced = rep.max_load <= rep.bound;
  return rep;
}

/// Exact Δ-balance check by enumeration of B^=n × {0,1}^r.
inline BalanceReport check_balance(const ExtractorTable& table,
                                   const SetSlice& slice, double delta) {
  auto cells = materialize(table, slice);
  auto load = loads(cells, slice.k());
  return balance_from_loads(load, slice, delta);
}

struct Claim1Result {
  std::uint64_t trials = 0;
  std::uint64_t balanced = 0;
  double fraction = 0;
};

using TableFactory =
    std::function<ExtractorTable(TableShape, std::uint64_t seed)>;

/// Fraction of random tables that are 7-balanced on the slice. Trial t uses
/// the seed splitmix64(rng_seed + t), so runs replay exactly.
inline Claim1Result mc_claim1(const SetSlice& slice, std::uint64_t trials,
                              std::uint64_t rng_seed,
                              const TableFactory& factory = random_table,
                              double delta = 7) {
  if (trials == 0) throw ConfigError("mc_claim1 needs at least one trial");
  Claim1Result res;
  res.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto table = factory(shape_of(slice), splitmix64(rng_seed + t));
    if (check_balance(table, slice, delta).balanced) ++res.balanced;
  }
  res.fraction = static_cast<double>(res.balanced) / static_cast<double>(trials);
  return res;
}

struct ChernoffParams {
  double delta_excess = 0;  // Δ in Prob[X ≥ (1+Δ)μ]
  double mu = 0;
};

/// e^(−Δ·ln(Δ/3)·μ), clamped to 1; vacuous (1) for Δ ≤ 3 or μ ≤ 0.
inline double chernoff_tail(const ChernoffParams& p) {
  if (p.delta_excess <= 3 || p.mu <= 0) return 1.0;
  double v = std::exp(-p.delta_excess * std::log(p.delta_excess / 3) * p.mu);
  return std::min(v, 1.0);
}

struct ChernoffCheck {
  double delta = 0;
  double log_textbook = 0;  // ln(e^Δ / (1+Δ)^(1+Δ))
  double log_simplified = 0;  // −Δ·ln(Δ/3)
  bool pass = false;
};

/// Confirms e^Δ/(1+Δ)^(1+Δ) < e^(−Δ ln(Δ/3)) at each grid point (in logs).
inline std::vector<ChernoffCheck> verify_chernoff_form(
    std::span<const double> grid) {
  std::vector<ChernoffCheck> out;
  for (double d : grid) {
    ChernoffCheck c;
    c.delta = d;
    c.log_textbook = d - (1 + d) * std::log1p(d);
    c.log_simplified = -d * std::log(d / 3);
    c.pass = d > 3 && c.log_textbook < c.log_simplified;
    out.push_back(c);
  }
  return out;
}

// Table file: a header (n, r, k, provenance) then the row-major payload,
// each entry k bits MSB first, as "<bits>:<hex>".
inline void write_table(std::ostream& out, const ExtractorTable& table) {
  const auto& s = table.shape();
  BitString payload;
  for (auto e : table.entries()) payload.append(BitString::from_uint(e, s.k));
  out << "kdist-table 1\nn " << s.n << "\nr " << s.r << "\nk " << s.k
      << "\nprovenance " << table.provenance() << "\npayload "
      << payload.to_hex() << "\n";
}

inline ExtractorTable read_table(std::istream& in) {
  std::string key, value;
  std::map<std::string, std::string> kv;
  std::string header;
  if (!std::getline(in, header) || header != "kdist-table 1")
    throw DecodeError("not a kdist table file");
  while (in >> key >> value) kv[key] = value;
  try {
    TableShape s{static_cast<unsigned>(std::stoul(kv.at("n"))),
                 static_cast<unsigned>(std::stoul(kv.at("r"))),
                 static_cast<unsigned>(std::stoul(kv.at("k")))};
    auto payload = BitString::from_hex(kv.at("payload"));
    if (payload.size() != s.bit_length())
      throw DecodeError("table payload length mismatch");
    std::vector<std::uint32_t> entries(s.cells());
    for (std::uint64_t c = 0; c < s.cells(); ++c) {
      std::uint32_t e = 0;
      for (unsigned j = 0; j < s.k; ++j) e = (e << 1) | payload[c * s.k + j];
      entries[c] = e;
    }
    return ExtractorTable::from_entries(s, std::move(entries),
                                        kv.at("provenance"));
  } catch (const std::out_of_range&) {
    throw DecodeError("table file is missing a header field");
  } catch (const std::invalid_argument&) {
    throw DecodeError("table file has a malformed number");
  }
}

}  // namespace kdist
