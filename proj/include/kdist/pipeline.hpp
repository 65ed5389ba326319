#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kdist/balance.hpp"
#include "kdist/bfl.hpp"
#include "kdist/bits.hpp"
#include "kdist/nwgen.hpp"
#include "kdist/selfdelim.hpp"
#include "kdist/sets.hpp"
#include "kdist/stage2.hpp"

namespace kdist {

/// How a distinguisher decides y ∈ B^=n: one oracle query, the direct
/// predicate, or a witness search.
enum class Mode { kOracle, kPtime, kNp };

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kOracle: return "oracle";
    case Mode::kPtime: return "ptime";
    case Mode::kNp: return "np";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "oracle") return Mode::kOracle;
  if (s == "ptime") return Mode::kPtime;
  if (s == "np") return Mode::kNp;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

/// Public configuration shared by compressor and distinguisher. None of it
/// is counted in a record's length.
struct Scheme {
  SetSlice slice;
  NwParams nw;
  HGenSpec h;
  double delta = 8;
};

inline Scheme make_scheme(const SetSpec& spec, unsigned n, double delta = 8,
                          std::optional<HGenSpec> h = std::nullopt,
                          std::optional<std::size_t> sigma_bits = std::nullopt) {
  SetSlice s(spec, n);
  NwParams nw = default_nw_params(shape_of(s));
  HGenSpec gen;
  if (h) {
    gen = *h;
    if (gen.output_bits == 0) gen.output_bits = nw.n_tilde;
    if (sigma_bits) gen.sigma_bits = *sigma_bits;
  } else {
    gen = stream_h(sigma_bits.value_or(default_sigma_bits(nw.n_tilde)),
                   nw.n_tilde);
  }
  return Scheme{std::move(s), std::move(nw), std::move(gen), delta};
}

struct ColliderSet {
  std::uint32_t z = 0;
  std::vector<std::uint64_t> members;
};

/// U = {u ∈ B^=n : ∃v E(u,v) = z}, from precomputed slice rows.
inline ColliderSet compute_U(const SliceCells& cells, const SetSlice& slice,
                             std::uint32_t z, double delta) {
  ColliderSet U;
  U.z = z;
  for (std::size_t i = 0; i < slice.members().size(); ++i)
    for (std::uint64_t v = 0; v < cells.columns; ++v)
      if (cells.cells[i * cells.columns + v] == z) {
        U.members.push_back(slice.members()[i]);
        break;
      }
  auto bound = balance_bound(slice.cardinality(), slice.r(), slice.k(), delta);
  if (U.members.size() > bound)
    throw CertificationError("collider set of size " +
                             std::to_string(U.members.size()) +
                             " exceeds the balance bound " +
                             std::to_string(bound));
  return U;
}

inline ColliderSet compute_U(const ExtractorTable& table, const SetSlice& slice,
                             std::uint32_t z, double delta) {
  return compute_U(materialize(table, slice), slice, z, delta);
}

/// C·⌈log2 n⌉ + C_0 is the additive budget over k.
inline constexpr unsigned kOverheadPerLogN = 8;
inline constexpr unsigned kOverheadConstant = 64;

struct CompressedRecord {
  int version = 1;
  unsigned n = 0, r = 0, k = 0;
  std::uint64_t set_spec_hash = 0;
  BitString sigma;  // the NW seed itself when fallback
  bool fallback = false;
  BitString z;
  BflTag tag;
  Mode mode = Mode::kOracle;
  BitString payload;  // sd_encode([z, sigma, bin j, bin residue])
  std::uint64_t total_bits = 0;
};

inline BitString record_payload(const BitString& z, const BitString& sigma,
                                const BflTag& tag) {
  return sd_encode({z, sigma, BitString::binary(tag.prime_index),
                    BitString::binary(tag.residue)});
}

/// Compressor bound to one certified seed; caches E restricted to B^=n.
class Codec {
 public:
  Codec(const Scheme& scheme, CertifiedSigma cert)
      : scheme_(&scheme), cert_(std::move(cert)) {
    if (!cert_.certified && !cert_.fallback)
      throw CertificationError("seed is neither certified nor a fallback");
    table_ = nw_table(scheme.nw, cert_.s);
    cells_ = materialize(*table_, scheme.slice);
  }

  const ExtractorTable& table() const { return *table_; }
  const SliceCells& cells() const { return cells_; }
  const CertifiedSigma& cert() const { return cert_; }

  ColliderSet colliders(std::uint32_t z) const {
    return compute_U(cells_, scheme_->slice, z, scheme_->delta);
  }

  CompressedRecord compress(const BitString& x, Mode mode) const {
    const auto& slice = scheme_->slice;
    if (x.size() != slice.n()) throw WidthError("x must have n bits");
    const std::uint64_t xv = x.to_uint();
    const std::size_t idx = slice.index_of(xv);  // throws for x ∉ B^=n
    CompressedRecord rec;
    rec.n = slice.n();
    rec.r = slice.r();
    rec.k = slice.k();
    rec.set_spec_hash = slice.spec().digest();
    rec.mode = mode;
    rec.fallback = cert_.fallback;
    rec.sigma = cert_.fallback ? cert_.s : cert_.sigma;
    const std::uint32_t zv = cells_.cells[idx * cells_.columns];  // v = 0^r
    rec.z = BitString::from_uint(zv, slice.k());
    auto U = colliders(zv);
    rec.tag = make_tag(xv, U.members, slice.n());
    rec.payload = record_payload(rec.z, rec.sigma, rec.tag);
    rec.total_bits = rec.payload.size();
    return rec;
  }

 private:
  const Scheme* scheme_;
  CertifiedSigma cert_;
  std::optional<ExtractorTable> table_;
  SliceCells cells_;
};

inline CompressedRecord compress(const BitString& x, const Scheme& scheme,
                                 const CertifiedSigma& cert, Mode mode) {
  return Codec(scheme, cert).compress(x, mode);
}

struct DistinguishStats {
  std::uint64_t oracle_queries = 0;
  std::uint64_t witness_candidates = 0;
};

inline void check_record(const CompressedRecord& rec, const Scheme& scheme) {
  const auto& s = scheme.slice;
  if (rec.set_spec_hash != s.spec().digest())
    throw ConfigError("record was made for a different set (spec hash mismatch)");
  if (rec.n != s.n() || rec.r != s.r() || rec.k != s.k())
    throw ConfigError("record widths do not match the slice");
  if (rec.z.size() != s.k()) throw WidthError("record z is not k bits");
}

/// Seed the record's E is built from.
inline BitString record_seed(const CompressedRecord& rec, const Scheme& scheme) {
  return rec.fallback ? rec.sigma : h_expand(scheme.h, rec.sigma);
}

namespace detail {

inline bool z_reachable(const BitString& y, const CompressedRecord& rec,
                        const Scheme& scheme) {
  NwEvaluator eval(scheme.nw, record_seed(rec, scheme));
  std::vector<std::uint32_t> row(scheme.nw.shape.columns());
  eval.row(y.to_uint(), row);
  const auto z = static_cast<std::uint32_t>(rec.z.to_uint());
  for (auto e : row)  // v ascending from 0^r
    if (e == z) return true;
  return false;
}

}  // namespace detail

/// The distinguisher: reject y ∉ B^=n; reject if no column v gives
/// E(y, v) = z; reject if the prime fingerprint differs; else accept.
/// Oracle mode issues exactly one membership query.
inline bool distinguish(const BitString& y, const CompressedRecord& rec,
                        const Scheme& scheme, Mode mode,
                        DistinguishStats* stats = nullptr) {
  check_record(rec, scheme);
  const auto& slice = scheme.slice;
  if (y.size() != slice.n()) throw WidthError("y must have n bits");
  bool in_B = false;
  switch (mode) {
    case Mode::kOracle:
      if (stats) ++stats->oracle_queries;
      in_B = slice.contains(y.to_uint());
      break;
    case Mode::kPtime:
      in_B = decide_directly(slice.spec(), y);
      break;
    case Mode::kNp: {
      std::size_t budget = 0;
      if (const auto* np = std::get_if<NpFamily>(&slice.spec().family())) {
        if (!np->w_max)
          throw ConfigError("np mode needs a configured witness budget");
        budget = *np->w_max;
      }
      NpSearchStats st;
      in_B = np_member(slice.spec(), y, budget, &st);
      if (stats) stats->witness_candidates += st.candidates;
      break;
    }
  }
  if (!in_B) return false;
  if (!detail::z_reachable(y, rec, scheme)) return false;
  return residue_matches(rec.tag, y);
}

/// NP mode with the witness supplied: the verifier runs once on (y, w).
inline bool distinguish_with_witness(const BitString& y, const BitString& w,
                                     const CompressedRecord& rec,
                                     const Scheme& scheme) {
  check_record(rec, scheme);
  if (y.size() != scheme.slice.n()) throw WidthError("y must have n bits");
  const auto* np = std::get_if<NpFamily>(&scheme.slice.spec().family());
  bool in_B = np ? detail::find_verifier(np->verifier).verify(y, w)
                 : (w.empty() && member(scheme.slice.spec(), y));
  if (!in_B) return false;
  if (!detail::z_reachable(y, rec, scheme)) return false;
  return residue_matches(rec.tag, y);
}

/// z = E(x, 0^r) from x and σ alone, generating only the k needed bits.
inline BitString recompute_z(const BitString& x, const Scheme& scheme,
                             const CertifiedSigma& cert) {
  const auto& nw = scheme.nw;
  if (x.size() != nw.shape.n) throw WidthError("x must have n bits");
  BitString s = cert.fallback ? cert.s : h_expand(scheme.h, cert.sigma);
  const std::uint64_t base = x.to_uint() * nw.shape.columns() * nw.shape.k;
  BitString z;
  for (unsigned j = 0; j < nw.shape.k; ++j) z.push_back(nw_bit(nw, base + j, s));
  return z;
}

struct LengthAudit {
  std::uint64_t total_bits = 0;
  unsigned k = 0;
  unsigned log_n = 0;
  std::int64_t overhead = 0;
  bool fallback = false;

  bool within(unsigned per_log_n, unsigned constant) const {
    return total_bits <= k + std::uint64_t{per_log_n} * log_n + constant;
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "length total_bits=" << total_bits << " k=" << k
        << " log_n=" << log_n << " overhead=" << overhead
        << " fallback=" << (fallback ? "true" : "false");
    return out.str();
  }
};

inline LengthAudit length_audit(const CompressedRecord& rec,
                                const SetSlice& slice) {
  LengthAudit a;
  a.total_bits = rec.total_bits;
  a.k = slice.k();
  a.log_n = ceil_log2(slice.n());
  a.overhead = static_cast<std::int64_t>(rec.total_bits) - slice.k();
  a.fallback = rec.fallback;
  return a;
}

// Record envelope: version, widths, mode, spec hash and the payload as
// "<bits>:<hex>". The payload alone defines total_bits.
inline void write_record(std::ostream& out, const CompressedRecord& rec) {
  out << "kdist-record " << rec.version << "\nn " << rec.n << "\nr " << rec.r
      << "\nk " << rec.k << "\nmode " << mode_name(rec.mode)
      << "\nset_spec_hash " << std::hex << std::setw(16) << std::setfill('0')
      << rec.set_spec_hash << std::dec << std::setfill(' ')
      << "\nfallback " << (rec.fallback ? 1 : 0) << "\npayload "
      << rec.payload.to_hex() << "\n";
}

inline CompressedRecord read_record(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != "kdist-record 1")
    throw DecodeError("not a kdist record (or unsupported version)");
  std::map<std::string, std::string> kv;
  std::string key, value;
  while (in >> key >> value) kv[key] = value;
  CompressedRecord rec;
  try {
    rec.n = static_cast<unsigned>(std::stoul(kv.at("n")));
    rec.r = static_cast<unsigned>(std::stoul(kv.at("r")));
    rec.k = static_cast<unsigned>(std::stoul(kv.at("k")));
    rec.mode = parse_mode(kv.at("mode"));
    rec.set_spec_hash = std::stoull(kv.at("set_spec_hash"), nullptr, 16);
    rec.fallback = kv.at("fallback") == "1";
    rec.payload = BitString::from_hex(kv.at("payload"));
  } catch (const std::out_of_range&) {
    throw DecodeError("record is missing a field");
  } catch (const std::invalid_argument&) {
    throw DecodeError("record has a malformed number");
  } catch (const ConfigError& e) {
    throw DecodeError(e.what());
  }
  auto parts = sd_decode(rec.payload);
  if (parts.size() != 4) throw DecodeError("record payload must have 4 parts");
  if (parts[0].size() != rec.k) throw DecodeError("record z is not k bits");
  rec.z = parts[0];
  rec.sigma = parts[1];
  rec.tag = decode_tag(sd_encode({parts[2], parts[3]}));
  rec.total_bits = rec.payload.size();
  return rec;
}

// Certificate file: the CertifiedSigma plus the public configuration it was
// certified against, with the full balance report for audit.
inline void write_certificate(std::ostream& out, const CertifiedSigma& c,
                              const Scheme& scheme) {
  out << "kdist-certificate 1\n"
      << "set_spec_hash " << std::hex << std::setw(16) << std::setfill('0')
      << scheme.slice.spec().digest() << std::dec << std::setfill(' ') << "\n"
      << "h_digest " << std::hex << std::setw(16) << std::setfill('0')
      << scheme.h.digest() << std::dec << std::setfill(' ') << "\n"
      << "n " << scheme.slice.n() << "\nk " << scheme.slice.k() << "\nr "
      << scheme.slice.r() << "\nsigma " << (c.fallback ? "-" : c.sigma.to_string())
      << "\nseed " << c.s.to_hex() << "\ncertified " << (c.certified ? 1 : 0)
      << "\nfallback " << (c.fallback ? 1 : 0) << "\n"
      << c.report.to_text() << "\n";
}

inline CertifiedSigma read_certificate(std::istream& in, const Scheme& scheme) {
  std::string line;
  if (!std::getline(in, line) || line != "kdist-certificate 1")
    throw DecodeError("not a kdist certificate");
  std::map<std::string, std::string> kv;
  std::string balance;
  while (std::getline(in, line)) {
    if (line.rfind("balance ", 0) == 0) {
      balance = line;
      continue;
    }
    std::istringstream f(line);
    std::string key, value;
    if (f >> key >> value) kv[key] = value;
  }
  CertifiedSigma c;
  try {
    if (std::stoull(kv.at("set_spec_hash"), nullptr, 16) !=
        scheme.slice.spec().digest())
      throw ConfigError("certificate was made for a different set");
    if (std::stoull(kv.at("h_digest"), nullptr, 16) != scheme.h.digest())
      throw ConfigError("certificate was made for a different H");
    if (std::stoul(kv.at("n")) != scheme.slice.n())
      throw ConfigError("certificate was made for a different n");
    c.certified = kv.at("certified") == "1";
    c.fallback = kv.at("fallback") == "1";
    if (!c.fallback) c.sigma = BitString::from_string(kv.at("sigma"));
    c.s = BitString::from_hex(kv.at("seed"));
  } catch (const std::out_of_range&) {
    throw DecodeError("certificate is missing a field");
  } catch (const std::invalid_argument&) {
    throw DecodeError("certificate has a malformed number");
  }
  if (balance.empty()) throw DecodeError("certificate lacks its balance report");
  c.report = BalanceReport::parse(balance);
  if (!c.fallback && h_expand(scheme.h, c.sigma) != c.s)
    throw DecodeError("certificate seed does not match H(sigma)");
  return c;
}

}  // namespace kdist
