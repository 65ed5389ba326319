#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kdist/bits.hpp"

namespace kdist {

inline constexpr unsigned kDefaultEnumerationCeiling = 24;

struct PopcountMod {
  unsigned modulus = 1;
};

/// Deterministic automaton over {0,1}; next[state][bit].
struct Dfa {
  unsigned start = 0;
  std::vector<std::array<unsigned, 2>> next;
  std::vector<bool> accepting;
};

struct ExplicitList {
  std::vector<BitString> members;  // sorted, unique
};

/// Membership is existence of a witness the named verifier accepts.
struct NpFamily {
  std::string verifier;
  std::optional<std::size_t> w_max;
};

namespace detail {

inline bool is_prime_u64(std::uint64_t v) {
  if (v < 2) return false;
  for (std::uint64_t d = 2; d * d <= v; ++d)
    if (v % d == 0) return false;
  return true;
}

struct VerifierDef {
  std::string_view name;
  bool (*verify)(const BitString& y, const BitString& w);
  bool (*reference)(const BitString& y);  // direct decider, may be null
};

inline bool composite_verify(const BitString& y, const BitString& w) {
  if (w.empty() || w.size() > 64 || y.size() > 64) return false;
  std::uint64_t factor = w.to_uint();
  std::uint64_t value = y.to_uint();
  return factor > 1 && factor < value && value % factor == 0;
}

inline bool composite_reference(const BitString& y) {
  std::uint64_t value = y.to_uint();
  return value >= 4 && !is_prime_u64(value);
}

inline constexpr VerifierDef kVerifiers[] = {
    {"composite", &composite_verify, &composite_reference},
};

inline const VerifierDef& find_verifier(std::string_view name) {
  for (const auto& v : kVerifiers)
    if (v.name == name) return v;
  throw ConfigError("unknown np verifier '" + std::string(name) + "'");
}

}  // namespace detail

/// A decidable set family B ⊆ {0,1}^*.
class SetSpec {
 public:
  using Family = std::variant<PopcountMod, Dfa, ExplicitList, NpFamily>;

  explicit SetSpec(Family family) : family_(std::move(family)) { validate(); }

  static SetSpec popcount_mod(unsigned modulus) {
    return SetSpec(PopcountMod{modulus});
  }
  static SetSpec explicit_list(std::vector<BitString> members) {
    return SetSpec(ExplicitList{std::move(members)});
  }
  static SetSpec np_verifier(std::string name,
                             std::optional<std::size_t> w_max) {
    return SetSpec(NpFamily{std::move(name), w_max});
  }

  /// Text form:
  ///   family popcount-mod | dfa | explicit-list | np-verifier
  ///   modulus <m>
  ///   alphabet 01 / states <q> / start <s> / row <state> <on0> <on1> / accept <s...>
  ///   member <bits>
  ///   verifier <name> / w_max <len>
  /// Blank lines and '#' comments are ignored.
  static SetSpec parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line, family;
    std::optional<unsigned> modulus, states;
    unsigned start = 0;
    std::vector<std::array<unsigned, 3>> rows;
    std::vector<unsigned> accept;
    std::vector<BitString> members;
    std::string verifier;
    std::optional<std::size_t> w_max;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      std::istringstream fields(line);
      std::string key;
      if (!(fields >> key)) continue;
      auto need_uint = [&](const char* what) {
        long long v = -1;
        if (!(fields >> v) || v < 0)
          throw ConfigError(std::string("set spec: bad value for ") + what);
        return static_cast<unsigned long long>(v);
      };
      if (key == "family") {
        fields >> family;
      } else if (key == "modulus") {
        modulus = static_cast<unsigned>(need_uint("modulus"));
      } else if (key == "alphabet") {
        std::string a;
        fields >> a;
        if (a != "01") throw ConfigError("set spec: dfa alphabet must be 01");
      } else if (key == "states") {
        states = static_cast<unsigned>(need_uint("states"));
      } else if (key == "start") {
        start = static_cast<unsigned>(need_uint("start"));
      } else if (key == "row") {
        std::array<unsigned, 3> r{};
        for (auto& x : r) x = static_cast<unsigned>(need_uint("row"));
        rows.push_back(r);
      } else if (key == "accept") {
        long long s;
        while (fields >> s) {
          if (s < 0) throw ConfigError("set spec: negative accepting state");
          accept.push_back(static_cast<unsigned>(s));
        }
      } else if (key == "member") {
        std::string bits;
        fields >> bits;
        members.push_back(BitString::from_string(bits));
      } else if (key == "verifier") {
        fields >> verifier;
      } else if (key == "w_max") {
        w_max = need_uint("w_max");
      } else {
        throw ConfigError("set spec: unknown key '" + key + "'");
      }
    }
    if (family == "popcount-mod") {
      if (!modulus) throw ConfigError("set spec: popcount-mod needs modulus");
      return popcount_mod(*modulus);
    }
    if (family == "dfa") {
      if (!states) throw ConfigError("set spec: dfa needs states");
      Dfa d;
      d.start = start;
      d.next.assign(*states, {~0U, ~0U});
      d.accepting.assign(*states, false);
      for (auto [s, a, b] : rows) {
        if (s >= *states) throw ConfigError("set spec: dfa row out of range");
        d.next[s] = {a, b};
      }
      for (auto s : accept) {
        if (s >= *states) throw ConfigError("set spec: accept out of range");
        d.accepting[s] = true;
      }
      return SetSpec(std::move(d));
    }
    if (family == "explicit-list") return explicit_list(std::move(members));
    if (family == "np-verifier") return np_verifier(verifier, w_max);
    throw ConfigError("set spec: unknown family '" + family + "'");
  }

  static SetSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open set spec '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  const Family& family() const { return family_; }

  std::string_view family_name() const {
    return std::visit(
        [](const auto& f) -> std::string_view {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PopcountMod>) return "popcount-mod";
          if constexpr (std::is_same_v<T, Dfa>) return "dfa";
          if constexpr (std::is_same_v<T, ExplicitList>)
            return "explicit-list";
          if constexpr (std::is_same_v<T, NpFamily>) return "np-verifier";
        },
        family_);
  }

  bool is_np() const { return std::holds_alternative<NpFamily>(family_); }

  /// Canonical text; parse(to_text()) reproduces the spec.
  std::string to_text() const {
    std::ostringstream out;
    out << "family " << family_name() << "\n";
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PopcountMod>) {
            out << "modulus " << f.modulus << "\n";
          } else if constexpr (std::is_same_v<T, Dfa>) {
            out << "alphabet 01\nstates " << f.next.size() << "\nstart "
                << f.start << "\n";
            for (std::size_t s = 0; s < f.next.size(); ++s)
              out << "row " << s << " " << f.next[s][0] << " " << f.next[s][1]
                  << "\n";
            out << "accept";
            for (std::size_t s = 0; s < f.accepting.size(); ++s)
              if (f.accepting[s]) out << " " << s;
            out << "\n";
          } else if constexpr (std::is_same_v<T, ExplicitList>) {
            for (const auto& m : f.members)
              out << "member " << m.to_string() << "\n";
          } else {
            out << "verifier " << f.verifier << "\n";
            if (f.w_max) out << "w_max " << *f.w_max << "\n";
          }
        },
        family_);
    return out.str();
  }

  std::uint64_t digest() const { return fnv1a64(to_text()); }

 private:
  void validate() {
    std::visit(
        [](auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PopcountMod>) {
            if (f.modulus == 0) throw ConfigError("popcount modulus must be >= 1");
          } else if constexpr (std::is_same_v<T, Dfa>) {
            if (f.next.empty()) throw ConfigError("dfa has no states");
            if (f.start >= f.next.size())
              throw ConfigError("dfa start state out of range");
            if (f.accepting.size() != f.next.size())
              throw ConfigError("dfa accepting list size mismatch");
            for (const auto& row : f.next)
              for (auto t : row)
                if (t >= f.next.size())
                  throw ConfigError("dfa transition table incomplete");
          } else if constexpr (std::is_same_v<T, ExplicitList>) {
            std::sort(f.members.begin(), f.members.end());
            f.members.erase(std::unique(f.members.begin(), f.members.end()),
                            f.members.end());
          } else {
            (void)detail::find_verifier(f.verifier);
          }
        },
        family_);
  }

  Family family_;
};

struct NpSearchStats {
  std::uint64_t candidates = 0;
};

/// Witness search: true iff some w with |w| <= budget makes the verifier
/// accept (y, w). Witnesses are visited by length, then lexicographically.
/// Deterministic families are viewed as verifiers accepting only w = λ.
inline bool np_member(const SetSpec& spec, const BitString& y,
                      std::size_t budget, NpSearchStats* stats = nullptr);

inline bool member(const SetSpec& spec, const BitString& x) {
  return std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PopcountMod>) {
          return x.popcount() % f.modulus == 0;
        } else if constexpr (std::is_same_v<T, Dfa>) {
          unsigned s = f.start;
          for (std::size_t i = 0; i < x.size(); ++i) s = f.next[s][x[i]];
          return f.accepting[s];
        } else if constexpr (std::is_same_v<T, ExplicitList>) {
          return std::binary_search(f.members.begin(), f.members.end(), x);
        } else {
          if (!f.w_max)
            throw ConfigError("np-verifier membership needs a witness budget");
          return np_member(spec, x, *f.w_max);
        }
      },
      spec.family());
}

inline bool member(const SetSpec& spec, std::uint64_t value, unsigned n) {
  if (const auto* p = std::get_if<PopcountMod>(&spec.family()))
    return std::popcount(value) % p->modulus == 0;
  if (const auto* d = std::get_if<Dfa>(&spec.family())) {
    unsigned s = d->start;
    for (unsigned i = n; i-- > 0;) s = d->next[s][(value >> i) & 1U];
    return d->accepting[s];
  }
  return member(spec, BitString::from_uint(value, n));
}

inline bool np_member(const SetSpec& spec, const BitString& y,
                      std::size_t budget, NpSearchStats* stats) {
  const auto* np = std::get_if<NpFamily>(&spec.family());
  if (np && np->w_max && budget > *np->w_max)
    throw ConfigError("witness budget " + std::to_string(budget) +
                      " exceeds configured w_max " +
                      std::to_string(*np->w_max));
  if (budget >= 63) throw CeilingError("witness budget too large to sweep");
  auto accepts = [&](const BitString& w) {
    if (np) return detail::find_verifier(np->verifier).verify(y, w);
    return w.empty() && member(spec, y);
  };
  for (std::size_t len = 0; len <= budget; ++len) {
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
      if (stats) ++stats->candidates;
      if (accepts(BitString::from_uint(v, len))) return true;
    }
  }
  return false;
}

/// Direct polynomial-time decision. NP families answer through their
/// reference decider when one exists.
inline bool decide_directly(const SetSpec& spec, const BitString& y) {
  if (const auto* np = std::get_if<NpFamily>(&spec.family())) {
    const auto& def = detail::find_verifier(np->verifier);
    if (!def.reference)
      throw ConfigError("verifier '" + np->verifier +
                        "' has no direct decider");
    return def.reference(y);
  }
  return member(spec, y);
}

/// Members of B^=n as integers (index-0 bit most significant), ascending.
inline std::vector<std::uint64_t> enumerate_values(
    const SetSpec& spec, unsigned n,
    unsigned ceiling = kDefaultEnumerationCeiling) {
  if (n > ceiling)
    throw CeilingError("n = " + std::to_string(n) +
                       " exceeds the enumeration ceiling " +
                       std::to_string(ceiling));
  std::vector<std::uint64_t> out;
  if (const auto* list = std::get_if<ExplicitList>(&spec.family())) {
    for (const auto& m : list->members)
      if (m.size() == n) out.push_back(m.to_uint());
    return out;  // members are sorted, so values ascend
  }
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v)
    if (member(spec, v, n)) out.push_back(v);
  return out;
}

inline std::vector<BitString> enumerate(
    const SetSpec& spec, unsigned n,
    unsigned ceiling = kDefaultEnumerationCeiling) {
  std::vector<BitString> out;
  for (auto v : enumerate_values(spec, n, ceiling))
    out.push_back(BitString::from_uint(v, n));
  return out;
}

/// The length-n slice B^=n with k = ⌈log2 |B^=n|⌉ and r = ⌈log2 n⌉.
class SetSlice {
 public:
  SetSlice(SetSpec spec, unsigned n,
           unsigned ceiling = kDefaultEnumerationCeiling)
      : spec_(std::move(spec)), n_(n) {
    if (n_ > 63) throw CeilingError("slice length above 63 bits");
    members_ = enumerate_values(spec_, n_, ceiling);
    if (members_.empty())
      throw ConfigError("B^=" + std::to_string(n_) +
                        " is empty: no string to compress");
    k_ = ceil_log2(members_.size());
    r_ = ceil_log2(n_);
    if (k_ > 31) throw CeilingError("k above 31 bits");
  }

  const SetSpec& spec() const { return spec_; }
  unsigned n() const { return n_; }
  unsigned k() const { return k_; }
  unsigned r() const { return r_; }
  std::uint64_t cardinality() const { return members_.size(); }
  const std::vector<std::uint64_t>& members() const { return members_; }

  bool contains(std::uint64_t value) const {
    return std::binary_search(members_.begin(), members_.end(), value);
  }
  std::size_t index_of(std::uint64_t value) const {
    auto it = std::lower_bound(members_.begin(), members_.end(), value);
    if (it == members_.end() || *it != value)
      throw ConfigError("string is not a member of B^=n");
    return static_cast<std::size_t>(it - members_.begin());
  }

 private:
  SetSpec spec_;
  unsigned n_ = 0, k_ = 0, r_ = 0;
  std::vector<std::uint64_t> members_;
};

inline SetSlice slice(const SetSpec& spec, unsigned n,
                      unsigned ceiling = kDefaultEnumerationCeiling) {
  return SetSlice(spec, n, ceiling);
}

}  // namespace kdist
