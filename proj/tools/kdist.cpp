// kdist: certify / compress / distinguish / suite.
//
// Exit codes: 0 ok (distinguish: ACCEPT), 1 REJECT or suite failure,
// 2 config error, 3 design failure, 4 fallback exhausted, 5 decode error,
// 6 other pipeline error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "kdist/pipeline.hpp"
#include "kdist/suite.hpp"

namespace {

using namespace kdist;

struct Common {
  std::string set_path;
  unsigned n = 0;
  double delta = 8;
  std::string h_path;
  std::size_t sigma_bits = 0;
  std::string design = "polynomial";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--set", c.set_path, "set spec file")->required();
  cmd->add_option("--n", c.n, "string length")->required();
  cmd->add_option("--delta", c.delta, "balance parameter")->capture_default_str();
  cmd->add_option("--h-spec", c.h_path, "H generator spec (default: stream)");
  cmd->add_option("--sigma-bits", c.sigma_bits, "advice length (0 = default)");
  cmd->add_option("--design", c.design, "NW design: polynomial | greedy")
      ->check(CLI::IsMember({"polynomial", "greedy"}))
      ->capture_default_str();
}

// Greedy over universes l = d_s, 2d_s, ... up to 64.
NwParams greedy_params(TableShape shape) {
  std::uint64_t N = shape.bit_length();
  unsigned d_s = std::max(1U, ceil_log2(N));
  unsigned c_int = ceil_log2(d_s);
  std::uint64_t best = 0;
  for (unsigned l = d_s; l <= 64; l += d_s) {
    try {
      return make_nw_params(shape, greedy_design(l, d_s, c_int, N));
    } catch (const DesignError& e) {
      best = std::max(best, e.achieved);
    }
  }
  throw DesignError("greedy design: no universe l <= 64 holds " +
                        std::to_string(N) + " sets (best " +
                        std::to_string(best) + ")",
                    best);
}

Scheme load_scheme(const Common& c) {
  auto spec = SetSpec::load(c.set_path);
  std::optional<HGenSpec> h;
  if (!c.h_path.empty()) h = HGenSpec::load(c.h_path);
  std::optional<std::size_t> sb;
  if (c.sigma_bits) sb = c.sigma_bits;
  Scheme s = make_scheme(spec, c.n, c.delta, h, sb);
  if (c.design == "greedy") {
    s.nw = greedy_params(shape_of(s.slice));
    // H must stretch to the greedy seed length
    if (!h)
      s.h = stream_h(sb.value_or(default_sigma_bits(s.nw.n_tilde)), s.nw.n_tilde);
    else if (h->output_bits == 0)
      s.h.output_bits = s.nw.n_tilde;
  }
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

int cmd_certify(const Common& c, const std::string& out_path) {
  Scheme scheme = load_scheme(c);
  auto cert = find_sigma(scheme.h, scheme.nw, scheme.slice, scheme.delta);
  std::ostringstream text;
  write_certificate(text, cert, scheme);
  if (out_path.empty())
    std::cout << text.str();
  else
    open_out(out_path) << text.str();
  std::cerr << "k=" << scheme.slice.k() << " r=" << scheme.slice.r()
            << " n_tilde=" << scheme.nw.n_tilde
            << " sigma_bits=" << scheme.h.sigma_bits
            << " sigmas_tried=" << cert.sigmas_tried << "\n";
  if (cert.fallback)
    std::cerr << "warning: no sigma gave a balanced table; recorded a "
                 "fallback NW seed (records will be longer)\n";
  return 0;
}

int cmd_compress(const Common& c, const std::string& cert_path,
                 const std::string& x, Mode mode, const std::string& out_path) {
  Scheme scheme = load_scheme(c);
  auto in = open_in(cert_path);
  auto cert = read_certificate(in, scheme);
  auto rec = compress(BitString::from_string(x), scheme, cert, mode);
  std::ostringstream text;
  write_record(text, rec);
  if (out_path.empty())
    std::cout << text.str();
  else
    open_out(out_path) << text.str();
  std::cerr << length_audit(rec, scheme.slice).to_text() << "\n";
  return 0;
}

int cmd_distinguish(const Common& c, const std::string& record_path,
                    const std::string& y, Mode mode,
                    const std::optional<std::string>& witness) {
  Scheme scheme = load_scheme(c);
  auto in = open_in(record_path);
  auto rec = read_record(in);
  auto ys = BitString::from_string(y);
  DistinguishStats st;
  bool ok = witness ? distinguish_with_witness(
                          ys, BitString::from_string(*witness), rec, scheme)
                    : distinguish(ys, rec, scheme, mode, &st);
  std::cout << (ok ? "ACCEPT" : "REJECT") << "\n";
  if (mode == Mode::kOracle && !witness)
    std::cerr << "oracle_queries=" << st.oracle_queries << "\n";
  return ok ? 0 : 1;
}

int cmd_suite(const SuiteConfig& cfg, const std::string& out_path) {
  auto rep = run_suite(cfg);
  auto text = rep.to_text();
  std::cout << text;
  if (!out_path.empty()) open_out(out_path) << text;
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kdist: compression of set members with a one-query distinguisher"};
  app.require_subcommand(1);

  Common common;
  std::string out_path, cert_path, record_path, x, y, mode_text = "oracle";
  std::optional<std::string> witness;

  auto* certify = app.add_subcommand("certify", "find a sigma whose NW table is balanced");
  add_common(certify, common);
  certify->add_option("--out", out_path, "certificate file (default stdout)");

  auto* comp = app.add_subcommand("compress", "compress x in B^=n");
  add_common(comp, common);
  comp->add_option("--cert", cert_path, "certificate from certify")->required();
  comp->add_option("--x", x, "string to compress")->required();
  comp->add_option("--mode", mode_text, "oracle | ptime | np")->capture_default_str();
  comp->add_option("--out", out_path, "record file (default stdout)");

  auto* dist = app.add_subcommand("distinguish", "accept iff y is the compressed string");
  add_common(dist, common);
  dist->add_option("--record", record_path, "record from compress")->required();
  dist->add_option("--y", y, "candidate string")->required();
  dist->add_option("--mode", mode_text, "oracle | ptime | np")->capture_default_str();
  dist->add_option("--witness", witness, "np mode: witness for y");

  SuiteConfig suite_cfg;
  std::vector<int> only;
  auto* suite = app.add_subcommand("suite", "run the acceptance criteria");
  suite->add_option("--seed", suite_cfg.seed)->capture_default_str();
  suite->add_option("--delta", suite_cfg.delta)->capture_default_str();
  suite->add_option("--trials", suite_cfg.claim1_trials,
                    "random tables for the 7-balance check")
      ->capture_default_str();
  suite->add_option("--only", only, "criterion numbers to run");
  suite->add_option("--out", out_path, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*certify) return cmd_certify(common, out_path);
    if (*comp) return cmd_compress(common, cert_path, x, parse_mode(mode_text), out_path);
    if (*dist)
      return cmd_distinguish(common, record_path, y, parse_mode(mode_text), witness);
    if (*suite) {
      suite_cfg.only.insert(only.begin(), only.end());
      return cmd_suite(suite_cfg, out_path);
    }
  } catch (const DesignError& e) {
    std::cerr << "design error: " << e.what() << "\n";
    return 3;
  } catch (const CertificationError& e) {
    std::cerr << "certification error: " << e.what() << "\n";
    return 4;
  } catch (const DecodeError& e) {
    std::cerr << "decode error: " << e.what() << "\n";
    return 5;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const WidthError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CeilingError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  }
  return 0;
}
