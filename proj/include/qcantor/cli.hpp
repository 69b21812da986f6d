#pragma once

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcantor/basis.hpp"
#include "qcantor/errors.hpp"
#include "qcantor/moran.hpp"
#include "qcantor/numeric.hpp"
#include "qcantor/pattern.hpp"
#include "qcantor/sequences.hpp"
#include "qcantor/stats.hpp"
#include "qcantor/version.hpp"
#include "qcantor/witness.hpp"

namespace qcantor::cli {

// ---------------------------------------------------------------- parsing

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw config_error(what + ": expected a non-negative integer, got '" + s + "'");
  return std::stoull(s);
}

inline std::vector<std::uint64_t> parse_checkpoints(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_u64(trim(part), "checkpoints"));
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    if (out[i] >= out[i + 1])
      throw config_error("checkpoints: not strictly increasing at pair " + std::to_string(out[i]) +
                         "," + std::to_string(out[i + 1]));
  if (out.empty() || out.front() < 1) throw config_error("checkpoints: must start at >= 1");
  return out;
}

inline const char* kKnownBaseRules = "succ, pow2, logrule, const:<int>, list:<a,b,...>";

inline BasicSequence parse_basic_sequence(const std::string& spec) {
  if (spec == "succ") return BasicSequence::successor();
  if (spec == "pow2") return BasicSequence::power_of_two();
  if (spec == "logrule") return BasicSequence::floor_log();
  if (spec.rfind("const:", 0) == 0) return BasicSequence::constant(parse_int(spec.substr(6)));
  if (spec.rfind("list:", 0) == 0) {
    std::vector<BigInt> vals;
    for (const auto& p : split(spec.substr(5), ',')) vals.push_back(parse_int(trim(p)));
    return BasicSequence::explicit_list(std::move(vals));
  }
  throw config_error("unknown base rule '" + spec + "' (known: " + kKnownBaseRules + ")");
}

inline const char* kKnownSeqRules =
    "const:<int>, ident, pow2, floorlog:<c>, floorloglog:<shift>,<c>, ratio-pow:<ell>";

inline NamedSeq parse_named_seq(const std::string& spec) {
  if (spec == "ident") return rules::identity();
  if (spec == "pow2") return rules::pow2();
  if (spec.rfind("const:", 0) == 0) return rules::constant(parse_int(spec.substr(6)));
  if (spec.rfind("floorlog:", 0) == 0)
    return rules::floor_log_plus(std::stoll(spec.substr(9)));
  if (spec.rfind("floorloglog:", 0) == 0) {
    auto parts = split(spec.substr(12), ',');
    if (parts.size() != 2) throw config_error("floorloglog takes <shift>,<c>");
    return rules::floor_log_log_plus(std::stoll(parts[0]), std::stoll(parts[1]));
  }
  throw config_error("unknown sequence rule '" + spec + "' (known: " + std::string(kKnownSeqRules) + ")");
}

inline IntegerSequence parse_integer_sequence(const std::string& spec) {
  if (spec == "squares") return IntegerSequence::squares();
  if (spec == "naturals") return IntegerSequence::naturals();
  if (spec == "evens") return IntegerSequence::evens();
  if (spec.rfind("list:", 0) == 0) {
    std::vector<BigInt> vals;
    for (const auto& p : split(spec.substr(5), ',')) vals.push_back(parse_int(trim(p)));
    return IntegerSequence::from_list(std::move(vals));
  }
  throw config_error("unknown set rule '" + spec + "' (known: squares, naturals, evens, list:<a,b,...>)");
}

inline Block parse_block(const std::string& spec) {
  std::vector<BigInt> digits;
  for (const auto& p : split(spec, ',')) digits.push_back(parse_int(trim(p)));
  return Block(std::move(digits));
}

// --------------------------------------------------------------- RunConfig

struct RunConfig {
  std::string command;
  std::map<std::string, std::string> kv;

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw config_error("missing required key '" + key + "'");
    return it->second;
  }
  std::optional<std::string> find(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& dflt) const {
    auto v = find(key);
    return v ? *v : dflt;
  }
};

inline const std::map<std::string, std::set<std::string>>& command_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"expand", {"format", "raw", "x", "q", "n", "digits"}},
      {"probe",
       {"format", "raw", "what", "q", "k", "checkpoints", "window", "pattern", "alpha", "beta",
        "s", "t", "upsilon", "depth", "iset"}},
      {"stats",
       {"format", "raw", "source", "q", "n", "seed", "metrics", "x", "prec", "forbid-zero"}},
      {"moran", {"format", "raw", "nk", "ck", "delta", "depth", "pattern", "iset", "alpha", "beta",
                 "s", "t", "upsilon"}},
      {"construct",
       {"format", "raw", "witness", "q", "pattern", "alpha", "beta", "s", "t", "upsilon", "iset",
        "forced", "set", "seed", "horizon", "checkpoints", "chooser", "source", "prec",
        "cap-tail", "cap-nu", "cap-upsilon"}},
  };
  return keys;
}

// Flat key-value text: one `key = value` per line, '#' comments. Collects
// every violation into a single error.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    if (key == "command") {
      cfg.command = value;
    } else if (cfg.kv.count(key)) {
      problems.push_back("duplicate key '" + key + "'");
    } else {
      cfg.kv[key] = value;
    }
  }
  if (cfg.command.empty()) {
    problems.push_back("missing 'command' (one of expand, probe, stats, moran, construct)");
  } else if (!command_keys().count(cfg.command)) {
    problems.push_back("unknown command '" + cfg.command + "'");
  } else {
    const auto& known = command_keys().at(cfg.command);
    for (const auto& [k, v] : cfg.kv)
      if (!known.count(k)) problems.push_back("unknown key '" + k + "' for command " + cfg.command);
  }
  if (!problems.empty()) {
    std::string msg = "config:";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw config_error(msg);
  }
  return cfg;
}

inline std::string render_config(const RunConfig& cfg) {
  std::string out = "command = " + cfg.command + "\n";
  for (const auto& [k, v] : cfg.kv) out += k + " = " + v + "\n";
  return out;
}

// -------------------------------------------------------------- ResultTable

enum class ColType { Exact, Float, Int, Text };

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> header;  // ordered echo
  std::vector<std::string> columns;
  std::vector<ColType> types;
  std::vector<std::vector<std::string>> rows;
};

inline std::string render_double(double v) {
  if (std::isnan(v)) return "undef";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string render_exact(const BigRat& v, bool raw) {
  return raw ? rational_string(v) : decimal_string(v, 12);
}

inline void table_header(ResultTable& t, const RunConfig& cfg) {
  t.header.emplace_back("version", kVersion);
  t.header.emplace_back("command", cfg.command);
  for (const auto& [k, v] : cfg.kv) t.header.emplace_back("config." + k, v);
}

inline void finish_columns(ResultTable& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    const char* ty = "text";
    switch (t.types[i]) {
      case ColType::Exact: ty = "exact-rational(12sig,half-even)"; break;
      case ColType::Float: ty = "floating"; break;
      case ColType::Int: ty = "integer"; break;
      case ColType::Text: ty = "text"; break;
    }
    t.header.emplace_back("column." + t.columns[i], ty);
  }
}

inline std::string csv_quote(const std::string& s) {
  bool needs = s.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

inline void emit_csv(const ResultTable& t, std::ostream& os) {
  for (const auto& [k, v] : t.header) os << "# " << k << " = " << v << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << csv_quote(t.columns[i]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_quote(row[i]);
    os << "\n";
  }
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline void emit_jsonl(const ResultTable& t, std::ostream& os) {
  os << "{\"meta\":{";
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) os << ",";
    os << "\"" << json_escape(t.header[i].first) << "\":\"" << json_escape(t.header[i].second)
       << "\"";
  }
  os << "}}\n";
  for (const auto& row : t.rows) {
    os << "{";
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
      if (i) os << ",";
      os << "\"" << json_escape(t.columns[i]) << "\":\"" << json_escape(row[i]) << "\"";
    }
    os << "}\n";
  }
}

inline void emit(const ResultTable& t, const RunConfig& cfg, std::ostream& os) {
  std::string fmt = cfg.get_or("format", "csv");
  if (fmt == "csv") emit_csv(t, os);
  else if (fmt == "jsonl") emit_jsonl(t, os);
  else throw config_error("unknown format '" + fmt + "' (known: csv, jsonl)");
}

// ----------------------------------------------------------- pattern setup

inline std::array<NamedSeq, 5> pattern_rules_from(const RunConfig& cfg) {
  if (auto preset = cfg.find("pattern")) {
    if (*preset == "example1") return example_one_rules();
    if (preset->rfind("example2:", 0) == 0)
      return example_two_rules(parse_u64(preset->substr(9), "example2 ell"));
    throw config_error("unknown pattern preset '" + *preset +
                       "' (known: example1, example2:<ell>, or give alpha/beta/s/t/upsilon)");
  }
  NamedSeq t_rule;
  std::string t_spec = cfg.get("t");
  NamedSeq alpha = parse_named_seq(cfg.get("alpha"));
  NamedSeq beta = parse_named_seq(cfg.get("beta"));
  NamedSeq s = parse_named_seq(cfg.get("s"));
  if (t_spec.rfind("ratio-pow:", 0) == 0) {
    std::uint64_t ell = parse_u64(t_spec.substr(10), "ratio-pow ell");
    t_rule = NamedSeq{t_spec, [a = alpha.fn, b = beta.fn, sf = s.fn, ell](std::uint64_t n) {
                        BigInt p = boost::multiprecision::pow(b(n), static_cast<unsigned>(ell + 1));
                        BigInt q = boost::multiprecision::pow(a(n), static_cast<unsigned>(ell + 1));
                        return floor_div(p * sf(n), q);
                      }};
  } else {
    t_rule = parse_named_seq(t_spec);
  }
  return {alpha, beta, s, t_rule, parse_named_seq(cfg.get("upsilon"))};
}

inline std::function<DigitSet(std::uint64_t)> digit_sets_from(const RunConfig& cfg,
                                                              const NamedSeq& alpha,
                                                              const NamedSeq& beta) {
  std::string spec = cfg.get_or("iset", "ndn");
  if (spec == "ndn") {
    return [a = alpha.fn, b = beta.fn](std::uint64_t i) {
      return DigitSet::closed_range(a(i), ndn_digit_bound(b(i)));
    };
  }
  if (spec == "full") {
    return [b = beta.fn](std::uint64_t i) { return DigitSet::closed_range(0, b(i) - 1); };
  }
  if (spec.rfind("range:", 0) == 0) {
    auto parts = split(spec.substr(6), ',');
    if (parts.size() != 2) throw config_error("iset range takes lo,hi");
    BigInt lo(parts[0]), hi(parts[1]);
    return [lo, hi](std::uint64_t) { return DigitSet::closed_range(lo, hi); };
  }
  if (spec.rfind("list:", 0) == 0) {
    std::vector<BigInt> vals;
    for (const auto& p : split(spec.substr(5), ',')) vals.push_back(parse_int(trim(p)));
    DigitSet ds = DigitSet::from_list(std::move(vals));
    return [ds](std::uint64_t) { return ds; };
  }
  throw config_error("unknown iset '" + spec + "' (known: ndn, full, range:<lo>,<hi>, list:<...>)");
}

// ------------------------------------------------------------ subcommands

inline ResultTable run_expand(const RunConfig& cfg) {
  ResultTable t;
  table_header(t, cfg);
  bool raw = cfg.get_or("raw", "0") == "1";
  BasicSequence q = parse_basic_sequence(cfg.get("q"));
  if (auto digits_spec = cfg.find("digits")) {
    std::vector<BigInt> ds;
    for (const auto& p : split(*digits_spec, ',')) ds.push_back(parse_int(trim(p)));
    BigRat v = value_of_digits(ds, q);
    t.columns = {"digits", "value"};
    t.types = {ColType::Text, ColType::Exact};
    t.rows.push_back({*digits_spec, render_exact(v, raw)});
    finish_columns(t);
    return t;
  }
  BigRat x = parse_rational(cfg.get("x"));
  std::uint64_t n = parse_u64(cfg.get("n"), "n");
  auto digits = digits_of_rational(x, q, n);
  t.columns = {"n", "q_n", "digit", "partial_value", "tail"};
  t.types = {ColType::Int, ColType::Int, ColType::Int, ColType::Exact, ColType::Exact};
  for (std::uint64_t i = 1; i <= n; ++i) {
    std::vector<BigInt> prefix(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(i));
    BigRat partial = value_of_digits(prefix, q);
    BigRat tail = tail_fraction(x, q, i);
    t.rows.push_back({std::to_string(i), q.q(i).str(), digits[i - 1].str(),
                      render_exact(partial, raw), render_exact(tail, raw)});
  }
  finish_columns(t);
  return t;
}

inline ResultTable run_probe(const RunConfig& cfg) {
  ResultTable t;
  table_header(t, cfg);
  bool raw = cfg.get_or("raw", "0") == "1";
  std::string what = cfg.get("what");
  if (what == "divergence") {
    BasicSequence q = parse_basic_sequence(cfg.get("q"));
    std::uint64_t k = parse_u64(cfg.get_or("k", "1"), "k");
    auto rows = divergence_table(q, k, parse_checkpoints(cfg.get("checkpoints")));
    t.columns = {"n", "partial_sum"};
    t.types = {ColType::Int, ColType::Exact};
    for (const auto& [n, v] : rows) t.rows.push_back({std::to_string(n), render_exact(v, raw)});
  } else if (what == "min-base") {
    BasicSequence q = parse_basic_sequence(cfg.get("q"));
    auto parts = split(cfg.get("window"), ':');
    if (parts.size() != 2) throw config_error("window takes lo:hi");
    std::uint64_t lo = parse_u64(parts[0], "window lo"), hi = parse_u64(parts[1], "window hi");
    t.columns = {"lo", "hi", "min_q"};
    t.types = {ColType::Int, ColType::Int, ColType::Int};
    t.rows.push_back({std::to_string(lo), std::to_string(hi), min_base_in_window(q, lo, hi).str()});
  } else if (what == "dimension-conditions") {
    auto r = pattern_rules_from(cfg);
    std::uint64_t depth = parse_u64(cfg.get("depth"), "depth");
    PatternParams pp;
    pp.alpha = r[0].fn; pp.beta = r[1].fn; pp.s = r[2].fn; pp.t = r[3].fn; pp.upsilon = r[4].fn;
    pp.forced = [](const BigInt&) { return BigInt(0); };
    pp.digit_sets = digit_sets_from(cfg, r[0], r[1]);
    auto rows = dimension_condition_table(pp, depth);
    auto gamma = gamma_sequence(pp, depth);
    t.columns = {"n", "run_ratio", "block_ratio", "gamma"};
    t.types = {ColType::Int, ColType::Float, ColType::Float, ColType::Float};
    for (const auto& row : rows)
      t.rows.push_back({std::to_string(row.n), render_double(row.ratio1),
                        render_double(row.ratio2), render_double(gamma[row.n - 1])});
  } else if (what == "normality-conditions") {
    auto r = pattern_rules_from(cfg);
    std::uint64_t depth = parse_u64(cfg.get("depth"), "depth");
    std::uint64_t k = parse_u64(cfg.get_or("k", "1"), "k");
    PatternParams pp;
    pp.alpha = r[0].fn; pp.beta = r[1].fn; pp.s = r[2].fn; pp.t = r[3].fn; pp.upsilon = r[4].fn;
    pp.forced = [](const BigInt&) { return BigInt(0); };
    pp.digit_sets = digit_sets_from(cfg, r[0], r[1]);
    auto rows = normality_condition_table(pp, k, depth);
    t.columns = {"n", "freq_ratio", "slot_ratio", "alpha_share"};
    t.types = {ColType::Int, ColType::Float, ColType::Float, ColType::Float};
    for (const auto& row : rows)
      t.rows.push_back({std::to_string(row.n), render_double(row.freq_ratio),
                        render_double(row.slot_ratio), render_double(row.alpha_share)});
  } else {
    throw config_error("unknown probe '" + what +
                       "' (known: divergence, min-base, dimension-conditions, normality-conditions)");
  }
  finish_columns(t);
  return t;
}

inline ResultTable run_moran(const RunConfig& cfg) {
  ResultTable t;
  table_header(t, cfg);
  std::uint64_t depth = parse_u64(cfg.get("depth"), "depth");
  MoranSpec spec;
  if (cfg.find("pattern") || cfg.find("alpha")) {
    auto r = pattern_rules_from(cfg);
    PatternParams pp;
    pp.alpha = r[0].fn; pp.beta = r[1].fn; pp.s = r[2].fn; pp.t = r[3].fn; pp.upsilon = r[4].fn;
    pp.forced = [](const BigInt&) { return BigInt(0); };
    pp.digit_sets = digit_sets_from(cfg, r[0], r[1]);
    pp.name = "cli";
    spec = theta_moran_spec(make_index_map(pp));
  } else {
    std::string nk = cfg.get("nk");
    std::string ck = cfg.get("ck");
    if (nk.rfind("const:", 0) != 0 || ck.rfind("const:", 0) != 0)
      throw config_error("moran nk/ck take const:<int> and const:<rational>");
    spec = MoranSpec::constant(parse_int(nk.substr(6)), parse_rational(ck.substr(6)),
                               parse_rational(cfg.get_or("delta", "1")));
  }
  auto violations = validate_moran_spec(spec, std::min<std::uint64_t>(depth, 1000));
  auto rep = fww_bounds(spec, depth);
  t.columns = {"k", "lower", "upper", "lower_tail_min", "upper_tail_min"};
  t.types = {ColType::Int, ColType::Float, ColType::Float, ColType::Float, ColType::Float};
  for (std::uint64_t k = 1; k <= depth; ++k)
    t.rows.push_back({std::to_string(k), render_double(rep.lower[k - 1]),
                      render_double(rep.upper[k - 1]), render_double(rep.lower_tail_min),
                      render_double(rep.upper_tail_min)});
  t.header.emplace_back("validation",
                        violations.empty() ? "ok" : std::to_string(violations.size()) + " violations");
  finish_columns(t);
  return t;
}

namespace detail_cli {

struct MetricColumns {
  std::vector<std::string> names;
  std::vector<ColType> types;
  // row values at a checkpoint
  std::function<std::vector<std::string>(std::uint64_t)> eval;
};

}  // namespace detail_cli

inline ResultTable run_stats(const RunConfig& cfg) {
  ResultTable t;
  table_header(t, cfg);
  bool raw = cfg.get_or("raw", "0") == "1";
  std::string source = cfg.get("source");
  std::uint64_t n = parse_u64(cfg.get("n"), "n");
  std::uint64_t prec = parse_u64(cfg.get_or("prec", "128"), "prec");

  // Point sources produce a point list; digit sources a stream.
  std::optional<UDSource> points_src;
  std::optional<DigitStream> stream;
  if (source == "weyl-golden") points_src = UDSource::golden(prec);
  else if (source == "scaled-non-ud") points_src = UDSource::scaled_golden(prec);
  else if (source.rfind("weyl-alpha:", 0) == 0)
    points_src = UDSource::rotation(parse_rational(source.substr(11)));
  else if (source.rfind("constant:", 0) == 0)
    points_src = UDSource::constant(parse_rational(source.substr(9)));
  else if (source.rfind("rational:", 0) == 0)
    stream = DigitStream::from_rational(parse_rational(source.substr(9)),
                                        parse_basic_sequence(cfg.get("q")));
  else if (source == "pseudo-normal")
    stream = pseudo_normal_stream(parse_basic_sequence(cfg.get("q")),
                                  parse_u64(cfg.get("seed"), "seed"),
                                  cfg.get_or("forbid-zero", "0") == "1");
  else
    throw config_error("unknown source '" + source +
                       "' (known: weyl-golden, scaled-non-ud, weyl-alpha:<r>, constant:<r>, "
                       "rational:<x>, pseudo-normal)");

  std::vector<std::string> metrics;
  for (const auto& m : split(cfg.get_or("metrics", cfg.get_or("metric", "dstar")), ' '))
    if (!trim(m).empty()) metrics.push_back(trim(m));

  t.columns = {"n"};
  t.types = {ColType::Int};
  for (const auto& m : metrics) {
    t.columns.push_back(m);
    if (m == "dstar" || m.rfind("nidx:", 0) == 0 || m.rfind("ratio:", 0) == 0 ||
        m.rfind("density:", 0) == 0)
      t.types.push_back(ColType::Exact);
    else if (m == "massdim")
      t.types.push_back(ColType::Float);
    else if (m.rfind("count:", 0) == 0 || m == "dn")
      t.types.push_back(ColType::Int);
    else if (m == "digitset")
      t.types.push_back(ColType::Text);
    else
      throw config_error("unknown metric '" + m +
                         "' (known: dstar, count:<block>, nidx:<block>, ratio:<b1>/<b2>, dn, "
                         "digitset, density:<m>, massdim)");
  }

  auto eval_metric = [&](const std::string& m, std::uint64_t at) -> std::string {
    if (m == "dstar") {
      std::vector<RawFraction> pts;
      if (points_src) {
        for (std::uint64_t i = 1; i <= at; ++i) pts.push_back(points_src->point_raw(i));
      } else {
        stream->for_each(at, [&](std::uint64_t i, const BigInt& d) {
          pts.push_back(RawFraction{d, stream->base().q(i)});
        });
      }
      return render_exact(star_discrepancy(std::move(pts)), raw);
    }
    if (!stream) throw config_error("metric '" + m + "' needs a digit-stream source");
    if (m.rfind("count:", 0) == 0)
      return std::to_string(count_block(*stream, parse_block(m.substr(6)), at));
    if (m.rfind("nidx:", 0) == 0)
      return render_exact(normality_index(*stream, parse_block(m.substr(5)), at), raw);
    if (m.rfind("ratio:", 0) == 0) {
      auto parts = split(m.substr(6), '/');
      if (parts.size() != 2) throw config_error("ratio metric takes <b1>/<b2>");
      auto r = ratio_index(*stream, parse_block(parts[0]), parse_block(parts[1]), at);
      return r ? render_exact(*r, raw) : "undef";
    }
    if (m == "dn") return std::to_string(distinct_digits(*stream, at));
    if (m == "digitset") {
      auto w = digit_set(*stream, at);
      std::string out;
      for (std::size_t i = 0; i < w.members.size() && i < 64; ++i) {
        if (i) out += " ";
        out += w.members[i].str();
      }
      if (w.members.size() > 64) out += " ...";
      return out;
    }
    if (m.rfind("density:", 0) == 0) {
      auto w = digit_set(*stream, at);
      return render_exact(density_estimate(w, parse_int(m.substr(8))), raw);
    }
    if (m == "massdim") {
      auto w = digit_set(*stream, at);
      return render_double(mass_dimension_estimate(w, BigInt(at)));
    }
    throw config_error("unknown metric '" + m + "'");
  };

  std::vector<std::uint64_t> checkpoints{n};
  for (std::uint64_t at : checkpoints) {
    std::vector<std::string> row{std::to_string(at)};
    for (const auto& m : metrics) row.push_back(eval_metric(m, at));
    t.rows.push_back(std::move(row));
  }
  finish_columns(t);
  return t;
}

inline ResultTable run_construct(const RunConfig& cfg) {
  ResultTable t;
  table_header(t, cfg);
  bool raw = cfg.get_or("raw", "0") == "1";
  std::string witness = cfg.get("witness");
  std::uint64_t horizon = parse_u64(cfg.get("horizon"), "horizon");
  auto checkpoints = parse_checkpoints(cfg.get_or("checkpoints", std::to_string(horizon)));
  if (checkpoints.back() > horizon)
    throw config_error("horizon must be >= the last checkpoint");

  auto add_provenance = [&](const Provenance& p) {
    t.header.emplace_back("provenance.construction", p.construction);
    t.header.emplace_back("provenance.base", p.base_rule);
    t.header.emplace_back("provenance.source", p.source);
    if (p.seed) t.header.emplace_back("provenance.seed", std::to_string(*p.seed));
    t.header.emplace_back("provenance.horizon", std::to_string(p.horizon));
  };

  auto dstar_of_stream = [&](const DigitStream& s, std::uint64_t at) {
    std::vector<RawFraction> pts;
    s.for_each(at, [&](std::uint64_t i, const BigInt& d) {
      pts.push_back(RawFraction{d, s.base().q(i)});
    });
    return star_discrepancy(std::move(pts));
  };

  if (witness == "lambda") {
    BasicSequence q = parse_basic_sequence(cfg.get("q"));
    std::uint64_t seed = parse_u64(cfg.get("seed"), "seed");
    std::uint64_t prec = parse_u64(cfg.get_or("prec", std::to_string(horizon + 64)), "prec");
    std::string src = cfg.get_or("source", "weyl-golden");
    UDSource x = (src == "scaled-non-ud") ? UDSource::scaled_golden(prec) : UDSource::golden(prec);
    LambdaCaps caps;
    caps.tail_log_search = parse_u64(cfg.get_or("cap-tail", "200000"), "cap-tail");
    caps.nu_search = parse_u64(cfg.get_or("cap-nu", "200000"), "cap-nu");
    caps.upsilon_search = parse_u64(cfg.get_or("cap-upsilon", "200000"), "cap-upsilon");
    DigitStream xi = pseudo_normal_stream(BasicSequence::floor_log(), seed);
    LambdaWitness w(q, x, xi, horizon, caps);
    Provenance p = w.provenance();
    p.seed = seed;
    add_provenance(p);
    t.header.emplace_back("caps", std::to_string(caps.tail_log_search) + "," +
                                      std::to_string(caps.nu_search) + "," +
                                      std::to_string(caps.upsilon_search));
    t.columns = {"n", "dstar", "ratio_min", "ratio_max", "nidx_0"};
    t.types = {ColType::Int, ColType::Exact, ColType::Exact, ColType::Exact, ColType::Exact};
    for (std::uint64_t at : checkpoints) {
      std::optional<BigRat> rmin, rmax;
      for (int a = 0; a <= 3; ++a)
        for (int b = 0; b <= 3; ++b) {
          if (a == b) continue;
          auto r = ratio_index(w.stream(), Block::of({a}), Block::of({b}), at);
          if (!r) continue;
          if (!rmin || *r < *rmin) rmin = *r;
          if (!rmax || *r > *rmax) rmax = *r;
        }
      t.rows.push_back({std::to_string(at), render_exact(dstar_of_stream(w.stream(), at), raw),
                        rmin ? render_exact(*rmin, raw) : "undef",
                        rmax ? render_exact(*rmax, raw) : "undef",
                        render_exact(normality_index(w.stream(), Block::of({0}), at), raw)});
    }
  } else if (witness == "theta" || witness == "ndn") {
    std::uint64_t seed = parse_u64(cfg.get("seed"), "seed");
    auto r = pattern_rules_from(cfg);
    DigitStream stream = [&] {
      if (witness == "ndn") {
        NdnTheta nt = make_ndn_theta(r[0], r[1], r[2], r[3], r[4], seed, horizon);
        add_provenance(nt.prov);
        return theta_stream(nt.index, DigitChooser::seeded_uniform(seed + 1));
      }
      PatternParams pp;
      pp.alpha = r[0].fn; pp.beta = r[1].fn; pp.s = r[2].fn; pp.t = r[3].fn; pp.upsilon = r[4].fn;
      pp.digit_sets = digit_sets_from(cfg, r[0], r[1]);
      std::string forced = cfg.get_or("forced", "const:0");
      if (forced.rfind("const:", 0) != 0) throw config_error("forced takes const:<digit>");
      BigInt fval = parse_int(forced.substr(6));
      pp.forced = [fval](const BigInt&) { return fval; };
      pp.name = "cli";
      std::string chooser = cfg.get_or("chooser", "uniform");
      DigitChooser ch = (chooser == "min") ? DigitChooser::minimum()
                                           : DigitChooser::seeded_uniform(seed);
      Provenance p;
      p.construction = "theta";
      p.base_rule = "pattern";
      p.source = "chooser=" + ch.name();
      p.seed = seed;
      p.horizon = horizon;
      add_provenance(p);
      return theta_stream(make_index_map(pp), ch);
    }();
    t.columns = {"n", "dstar", "dn", "min_digit", "max_digit"};
    t.types = {ColType::Int, ColType::Exact, ColType::Int, ColType::Int, ColType::Int};
    for (std::uint64_t at : checkpoints) {
      BigInt mn = stream.digit(1), mx = stream.digit(1);
      stream.for_each(at, [&](std::uint64_t, const BigInt& d) {
        if (d < mn) mn = d;
        if (d > mx) mx = d;
      });
      t.rows.push_back({std::to_string(at), render_exact(dstar_of_stream(stream, at), raw),
                        std::to_string(distinct_digits(stream, at)), mn.str(), mx.str()});
    }
  } else if (witness == "digitrange") {
    BasicSequence q = parse_basic_sequence(cfg.get("q"));
    std::uint64_t seed = parse_u64(cfg.get("seed"), "seed");
    IntegerSequence s = parse_integer_sequence(cfg.get("set"));
    DigitRangeWitness w(q, s, seed, horizon);
    add_provenance(w.provenance());
    t.header.emplace_back("forced_positions", std::to_string(w.forced_positions().size()));
    t.columns = {"n", "dn", "subset_ok", "density_horizon"};
    t.types = {ColType::Int, ColType::Int, ColType::Int, ColType::Exact};
    for (std::uint64_t at : checkpoints) {
      auto w_set = digit_set(w.stream(), at);
      bool subset = true;
      for (const auto& v : w_set.members) {
        std::uint64_t c = s.count_upto(v);
        if (c == 0 || s.kth(c - 1) != v) {
          subset = false;
          break;
        }
      }
      t.rows.push_back({std::to_string(at), std::to_string(distinct_digits(w.stream(), at)),
                        subset ? "1" : "0",
                        render_exact(density_estimate(w_set, BigInt(horizon)), raw)});
    }
  } else {
    throw config_error("unknown witness '" + witness +
                       "' (known: lambda, theta, ndn, digitrange)");
  }
  finish_columns(t);
  return t;
}

inline ResultTable run_table(const RunConfig& cfg) {
  if (cfg.command == "expand") return run_expand(cfg);
  if (cfg.command == "probe") return run_probe(cfg);
  if (cfg.command == "stats") return run_stats(cfg);
  if (cfg.command == "moran") return run_moran(cfg);
  if (cfg.command == "construct") return run_construct(cfg);
  throw config_error("unknown command '" + cfg.command + "'");
}

// Exit codes: 0 ok, 2 config, 3 domain/precondition, 4 search horizon,
// 5 construction, 1 internal. One machine-parseable reason line on err.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    ResultTable t = run_table(cfg);
    emit(t, cfg, out);
    return 0;
  } catch (const config_error& e) {
    err << "error code=2 kind=config msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const horizon_error& e) {
    err << "error code=4 kind=horizon msg=\"" << e.what() << "\"\n";
    return 4;
  } catch (const construction_error& e) {
    err << "error code=5 kind=construction msg=\"" << e.what() << "\"\n";
    return 5;
  } catch (const std::domain_error& e) {
    err << "error code=3 kind=domain msg=\"" << e.what() << "\"\n";
    return 3;
  } catch (const std::out_of_range& e) {
    err << "error code=3 kind=domain msg=\"" << e.what() << "\"\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error code=1 kind=internal msg=\"" << e.what() << "\"\n";
    return 1;
  }
}

}  // namespace qcantor::cli
