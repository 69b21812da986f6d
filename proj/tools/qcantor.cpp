// Batch experiment harness over the library: digit expansions, growth
// probes, stream statistics, dimension-bound tables, and witness
// constructions, emitted as reproducible CSV/JSONL tables.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qcantor/cli.hpp"

namespace {

using qcantor::cli::RunConfig;

// Resolve the output stream; QCANTOR_OUTPUT_DIR prefixes relative paths.
int emit_run(const RunConfig& cfg, const std::string& out_path) {
  if (out_path.empty()) return qcantor::cli::run(cfg, std::cout, std::cerr);
  std::string path = out_path;
  if (const char* dir = std::getenv("QCANTOR_OUTPUT_DIR")) {
    if (!path.empty() && path[0] != '/') path = std::string(dir) + "/" + path;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error code=1 kind=internal msg=\"cannot open output file " << path << "\"\n";
    return 1;
  }
  return qcantor::cli::run(cfg, f, std::cerr);
}

void add_common(CLI::App* cmd, std::map<std::string, std::string>* kv, std::string* out_path) {
  auto keep = [kv](const std::string& key) {
    return [kv, key](const std::string& v) { (*kv)[key] = v; };
  };
  cmd->add_option_function<std::string>("--format", keep("format"), "csv or jsonl");
  cmd->add_option_function<std::string>("--raw", keep("raw"), "1 = raw num/den rationals");
  cmd->add_option("--out", *out_path, "output file (QCANTOR_OUTPUT_DIR prefixes relative paths)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact Cantor-series digit machinery: expansions, statistics, witnesses"};
  app.require_subcommand(1);

  struct Sub {
    RunConfig cfg;
    std::string out_path;
  };
  std::map<std::string, Sub> subs;

  auto make = [&](const std::string& name, const std::string& desc,
                  const std::vector<std::pair<std::string, std::string>>& opts) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    Sub& sub = subs[name];
    sub.cfg.command = name;
    for (const auto& [key, help] : opts) {
      auto* kv = &sub.cfg.kv;
      std::string k = key;
      cmd->add_option_function<std::string>("--" + key,
                                            [kv, k](const std::string& v) { (*kv)[k] = v; }, help);
    }
    add_common(cmd, &sub.cfg.kv, &sub.out_path);
    return cmd;
  };

  make("expand", "digit expansion of a rational, or value of a digit list",
       {{"x", "rational in [0,1), e.g. 5/6"},
        {"q", "base rule: succ|pow2|logrule|const:<v>|list:<a,b,..>"},
        {"n", "number of digits"},
        {"digits", "digit list to evaluate instead of expanding"}});

  make("probe", "growth and condition probes",
       {{"what", "divergence|min-base|dimension-conditions|normality-conditions"},
        {"q", "base rule"},
        {"k", "order"},
        {"checkpoints", "comma-separated positions"},
        {"window", "lo:hi for min-base"},
        {"pattern", "example1|example2:<ell>"},
        {"alpha", "sequence rule"},
        {"beta", "sequence rule"},
        {"s", "sequence rule"},
        {"t", "sequence rule (also ratio-pow:<ell>)"},
        {"upsilon", "sequence rule"},
        {"iset", "ndn|full|range:<lo>,<hi>|list:<..>"},
        {"depth", "table depth"}});

  make("stats", "statistics of point sequences and digit streams",
       {{"source",
         "weyl-golden|scaled-non-ud|weyl-alpha:<r>|constant:<r>|rational:<x>|pseudo-normal"},
        {"q", "base rule for digit sources"},
        {"n", "sample length"},
        {"seed", "seed for stochastic sources"},
        {"forbid-zero", "1 = digits never zero (pseudo-normal)"},
        {"metrics", "space-separated: dstar count:<b> nidx:<b> ratio:<b1>/<b2> dn digitset "
                    "density:<m> massdim"},
        {"prec", "dyadic precision bits for irrational rotations"}});

  make("moran", "dimension-bound tables",
       {{"nk", "const:<int>"},
        {"ck", "const:<rational>"},
        {"delta", "interval length"},
        {"depth", "table depth"},
        {"pattern", "example1|example2:<ell> (theta-derived spec)"},
        {"alpha", "sequence rule"},
        {"beta", "sequence rule"},
        {"s", "sequence rule"},
        {"t", "sequence rule"},
        {"upsilon", "sequence rule"},
        {"iset", "digit-set rule for theta-derived specs"}});

  make("construct", "witness streams with per-checkpoint statistics",
       {{"witness", "lambda|theta|ndn|digitrange"},
        {"q", "base rule (lambda, digitrange)"},
        {"pattern", "example1|example2:<ell> (theta, ndn)"},
        {"alpha", "sequence rule"},
        {"beta", "sequence rule"},
        {"s", "sequence rule"},
        {"t", "sequence rule"},
        {"upsilon", "sequence rule"},
        {"iset", "digit-set rule (theta)"},
        {"forced", "const:<digit> (theta)"},
        {"set", "target set: squares|naturals|evens|list:<..> (digitrange)"},
        {"seed", "seed (mandatory)"},
        {"horizon", "stream length"},
        {"checkpoints", "comma-separated row positions"},
        {"chooser", "min|uniform (theta)"},
        {"source", "weyl-golden|scaled-non-ud (lambda)"},
        {"prec", "dyadic precision bits (lambda; default horizon+64)"},
        {"cap-tail", "search cap"},
        {"cap-nu", "search cap"},
        {"cap-upsilon", "search cap"}});

  // Config-file entry point.
  CLI::App* run_cmd = app.add_subcommand("run", "run a flat key-value config file");
  std::string config_path;
  std::string run_out;
  run_cmd->add_option("--config", config_path, "path to config file")->required();
  run_cmd->add_option("--out", run_out, "output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      std::ifstream f(config_path);
      if (!f) {
        std::cerr << "error code=2 kind=config msg=\"cannot open config file " << config_path
                  << "\"\n";
        return 2;
      }
      std::stringstream buf;
      buf << f.rdbuf();
      RunConfig cfg = qcantor::cli::parse_config(buf.str());
      return emit_run(cfg, run_out);
    }
    for (auto& [name, sub] : subs) {
      if (app.get_subcommand(name)->parsed()) return emit_run(sub.cfg, sub.out_path);
    }
  } catch (const qcantor::config_error& e) {
    std::cerr << "error code=2 kind=config msg=\"" << e.what() << "\"\n";
    return 2;
  }
  return 0;
}
