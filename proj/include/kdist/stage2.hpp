#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kdist/balance.hpp"
#include "kdist/bits.hpp"
#include "kdist/nwgen.hpp"
#include "kdist/sets.hpp"

namespace kdist {

/// Toy stand-in for the seed-stretching generator H : {0,1}^sigma_bits →
/// {0,1}^output_bits.
struct HGenSpec {
  enum class Kind { kLfsr, kStream, kLookup };

  Kind kind = Kind::kStream;
  std::size_t sigma_bits = 0;
  std::size_t output_bits = 0;
  std::vector<unsigned> taps;                // lfsr: state positions XORed
  std::uint64_t key = 0;                     // stream
  std::map<BitString, BitString> table;      // lookup

  static std::string_view kind_name(Kind k) {
    switch (k) {
      case Kind::kLfsr: return "lfsr";
      case Kind::kStream: return "stream";
      case Kind::kLookup: return "lookup";
    }
    return "?";
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "kind " << kind_name(kind) << "\nsigma_bits " << sigma_bits
        << "\noutput_bits " << output_bits << "\n";
    if (kind == Kind::kLfsr) {
      out << "taps";
      for (auto t : taps) out << " " << t;
      out << "\n";
    } else if (kind == Kind::kStream) {
      out << "key " << key << "\n";
    } else {
      for (const auto& [s, v] : table)
        out << "entry " << s.to_string() << " " << v.to_string() << "\n";
    }
    return out.str();
  }

  std::uint64_t digest() const { return fnv1a64(to_text()); }

  static HGenSpec parse(std::string_view text) {
    HGenSpec h;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_kind = false;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      std::istringstream f(line);
      std::string key;
      if (!(f >> key)) continue;
      if (key == "kind") {
        std::string k;
        f >> k;
        if (k == "lfsr")
          h.kind = Kind::kLfsr;
        else if (k == "stream")
          h.kind = Kind::kStream;
        else if (k == "lookup")
          h.kind = Kind::kLookup;
        else
          throw ConfigError("h spec: unknown kind '" + k + "'");
        have_kind = true;
      } else if (key == "sigma_bits") {
        if (!(f >> h.sigma_bits)) throw ConfigError("h spec: bad sigma_bits");
      } else if (key == "output_bits") {
        if (!(f >> h.output_bits)) throw ConfigError("h spec: bad output_bits");
      } else if (key == "taps") {
        unsigned t;
        while (f >> t) h.taps.push_back(t);
      } else if (key == "key") {
        if (!(f >> h.key)) throw ConfigError("h spec: bad key");
      } else if (key == "entry") {
        std::string s, v;
        f >> s >> v;
        h.table[BitString::from_string(s)] = BitString::from_string(v);
      } else {
        throw ConfigError("h spec: unknown key '" + key + "'");
      }
    }
    if (!have_kind) throw ConfigError("h spec: missing kind");
    return h;
  }

  static HGenSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open h spec '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }
};

/// ⌈c · log2 ñ⌉, the advice length for seed length ñ.
inline std::size_t default_sigma_bits(std::uint64_t n_tilde, double c = 2) {
  if (n_tilde <= 1) return 1;
  return static_cast<std::size_t>(
      std::ceil(c * std::log2(static_cast<double>(n_tilde)) - 1e-9));
}

inline HGenSpec stream_h(std::size_t sigma_bits, std::size_t output_bits,
                         std::uint64_t key = 0x4b44495354ULL) {
  HGenSpec h;
  h.kind = HGenSpec::Kind::kStream;
  h.sigma_bits = sigma_bits;
  h.output_bits = output_bits;
  h.key = key;
  return h;
}

inline BitString h_expand(const HGenSpec& h, const BitString& sigma) {
  if (sigma.size() != h.sigma_bits)
    throw WidthError("sigma has " + std::to_string(sigma.size()) +
                     " bits, H expects " + std::to_string(h.sigma_bits));
  BitString out;
  switch (h.kind) {
    case HGenSpec::Kind::kLookup: {
      auto it = h.table.find(sigma);
      if (it == h.table.end())
        throw ConfigError("lookup H has no entry for sigma " +
                          sigma.to_string());
      out = it->second;
      break;
    }
    case HGenSpec::Kind::kLfsr: {
      // Fibonacci register: emit state[0], shift left, feed back the XOR of
      // the tapped positions.
      BitString state = sigma;
      for (std::size_t i = 0; i < h.output_bits; ++i) {
        if (state.empty()) {
          out.push_back(false);
          continue;
        }
        out.push_back(state[0]);
        bool fb = false;
        for (auto t : h.taps) {
          if (t >= state.size()) throw ConfigError("lfsr tap out of range");
          fb ^= state[t];
        }
        for (std::size_t j = 0; j + 1 < state.size(); ++j)
          state.set(j, state[j + 1]);
        state.set(state.size() - 1, fb);
      }
      break;
    }
    case HGenSpec::Kind::kStream: {
      std::uint64_t s = splitmix64(h.key);
      for (std::size_t i = 0; i < sigma.size(); ++i)
        s = splitmix64(s ^ (std::uint64_t{sigma[i]} + 2 * i + 1));
      s = splitmix64(s ^ sigma.size());
      std::mt19937_64 rng(s);
      out = random_bits(h.output_bits, rng);
      break;
    }
  }
  if (out.size() != h.output_bits)
    throw WidthError("H produced " + std::to_string(out.size()) +
                     " bits, expected " + std::to_string(h.output_bits));
  return out;
}

/// s ∈ T iff NW-gen(s) is Δ-balanced on the slice (decided exactly).
inline bool in_T(const BitString& s, const NwParams& p, const SetSlice& slice,
                 double delta = 8) {
  return check_balance(nw_table(p, s), slice, delta).balanced;
}

struct GoodSeedStats {
  std::uint64_t total_sampled = 0;
  std::uint64_t good = 0;
  double fraction = 0;
};

inline GoodSeedStats sample_T_density(const NwParams& p, const SetSlice& slice,
                                      std::uint64_t sample,
                                      std::uint64_t rng_seed,
                                      double delta = 8) {
  if (sample == 0) throw ConfigError("sample_T_density needs sample >= 1");
  std::mt19937_64 rng(splitmix64(rng_seed));
  GoodSeedStats st;
  st.total_sampled = sample;
  for (std::uint64_t t = 0; t < sample; ++t)
    st.good += in_T(random_bits(p.n_tilde, rng), p, slice, delta);
  st.fraction = static_cast<double>(st.good) / static_cast<double>(sample);
  return st;
}

struct CertifiedSigma {
  BitString sigma;  // empty when fallback
  BitString s;      // NW seed, H(sigma) unless fallback
  BalanceReport report;
  bool certified = false;
  bool fallback = false;
  std::uint64_t sigmas_tried = 0;
};

struct SigmaSearchOptions {
  std::size_t sigma_ceiling = 20;
  std::uint64_t fallback_budget = 1000;
  std::uint64_t fallback_seed = 0x5eed;
};

/// First σ in lexicographic order with NW-gen(H(σ)) Δ-balanced. If no σ
/// works, NW seeds are sampled directly (flagged as fallback); exhausting
/// that budget throws CertificationError.
inline CertifiedSigma find_sigma(const HGenSpec& h, const NwParams& p,
                                 const SetSlice& slice, double delta = 8,
                                 const SigmaSearchOptions& opt = {}) {
  if (h.sigma_bits > opt.sigma_ceiling)
    throw CeilingError("sigma_bits " + std::to_string(h.sigma_bits) +
                       " above the enumeration ceiling " +
                       std::to_string(opt.sigma_ceiling));
  if (h.output_bits != p.n_tilde)
    throw ConfigError("H output length " + std::to_string(h.output_bits) +
                      " != NW seed length " + std::to_string(p.n_tilde));
  CertifiedSigma out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << h.sigma_bits); ++v) {
    auto sigma = BitString::from_uint(v, h.sigma_bits);
    auto s = h_expand(h, sigma);
    auto rep = check_balance(nw_table(p, s), slice, delta);
    ++out.sigmas_tried;
    if (rep.balanced) {
      out.sigma = sigma;
      out.s = s;
      out.report = rep;
      out.certified = true;
      return out;
    }
  }
  std::mt19937_64 rng(splitmix64(opt.fallback_seed));
  for (std::uint64_t t = 0; t < opt.fallback_budget; ++t) {
    auto s = random_bits(p.n_tilde, rng);
    auto rep = check_balance(nw_table(p, s), slice, delta);
    if (rep.balanced) {
      out.s = s;
      out.report = rep;
      out.fallback = true;
      return out;
    }
  }
  throw CertificationError("no good sigma and fallback exhausted after " +
                           std::to_string(opt.fallback_budget) + " seeds");
}

}  // namespace kdist
