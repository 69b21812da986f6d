#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <sstream>

#include "qcantor/cli.hpp"

using namespace qcantor;
using namespace qcantor::cli;

namespace {

std::pair<int, std::string> run_text(const std::string& config_text) {
  std::ostringstream out, err;
  int code;
  try {
    RunConfig cfg = parse_config(config_text);
    code = run(cfg, out, err);
  } catch (const config_error& e) {
    return {2, std::string("error: ") + e.what()};
  }
  return {code, code == 0 ? out.str() : err.str()};
}

}  // namespace

TEST_CASE("config parsing round-trips") {
  RunConfig cfg;
  cfg.command = "moran";
  cfg.kv = {{"nk", "const:2"}, {"ck", "const:1/4"}, {"depth", "20"}};
  RunConfig back = parse_config(render_config(cfg));
  CHECK(back.command == cfg.command);
  CHECK(back.kv == cfg.kv);
}

TEST_CASE("config errors are collected and name the problem") {
  CHECK_THROWS_WITH(parse_config("command = moran\nbogus = 1\nwhatever = 2\ndepth = 5\n"),
                    Catch::Matchers::ContainsSubstring("unknown key 'bogus'") &&
                        Catch::Matchers::ContainsSubstring("unknown key 'whatever'"));
  CHECK_THROWS_WITH(parse_config("depth = 5\n"),
                    Catch::Matchers::ContainsSubstring("missing 'command'"));
  CHECK_THROWS_WITH(parse_config("command = fly\n"),
                    Catch::Matchers::ContainsSubstring("unknown command 'fly'"));
  CHECK_THROWS_WITH(parse_config("command = moran\ndepth = 5\ndepth = 6\n"),
                    Catch::Matchers::ContainsSubstring("duplicate key 'depth'"));
}

TEST_CASE("checkpoint and rule validation errors") {
  auto [code, msg] = run_text("command = probe\nwhat = divergence\nq = succ\ncheckpoints = 10,5\n");
  CHECK(code == 2);
  CHECK(msg.find("not strictly increasing") != std::string::npos);
  CHECK(msg.find("10,5") != std::string::npos);

  auto [code2, msg2] = run_text("command = expand\nx = 1/2\nq = fib\nn = 3\n");
  CHECK(code2 == 2);
  CHECK(msg2.find("unknown base rule 'fib'") != std::string::npos);
  CHECK(msg2.find("succ") != std::string::npos);  // advertises the known rules
}

TEST_CASE("expand renders digits and exact values") {
  auto [code, out] =
      run_text("command = expand\nx = 5/6\nq = succ\nn = 3\n");
  REQUIRE(code == 0);
  CHECK(out.find("# command = expand") != std::string::npos);
  CHECK(out.find("n,q_n,digit,partial_value,tail") != std::string::npos);
  CHECK(out.find("1,2,1,0.500000000000,0.666666666667") != std::string::npos);
  CHECK(out.find("3,4,0,0.833333333333,0") != std::string::npos);

  auto [rcode, rout] = run_text("command = expand\nx = 5/6\nq = succ\nn = 2\nraw = 1\n");
  REQUIRE(rcode == 0);
  CHECK(rout.find("1,2,1,1/2,2/3") != std::string::npos);

  auto [vcode, vout] = run_text("command = expand\ndigits = 1,2,3\nq = list:2,3,4\n");
  REQUIRE(vcode == 0);
  CHECK(vout.find("\"1,2,3\"") != std::string::npos);  // RFC-4180 quoting of the comma field
  CHECK(vout.find("0.958333333333") != std::string::npos);
}

TEST_CASE("moran subcommand reproduces the closed form") {
  auto [code, out] = run_text("command = moran\nnk = const:2\nck = const:1/4\ndepth = 20\n");
  REQUIRE(code == 0);
  CHECK(out.find("20,0.48780487804878") != std::string::npos);  // 20/41 at k=20
  CHECK(out.find(",0.5,") != std::string::npos);
}

TEST_CASE("stats subcommand computes golden discrepancy") {
  auto [code, out] =
      run_text("command = stats\nsource = weyl-golden\nn = 2000\nmetrics = dstar\n");
  REQUIRE(code == 0);
  auto pos = out.find("\n2000,");
  REQUIRE(pos != std::string::npos);
  double v = std::stod(out.substr(pos + 6));
  CHECK(v < 0.01);
  CHECK(v > 0.0);
}

TEST_CASE("stats pseudo-normal requires a seed") {
  auto [code, msg] = run_text("command = stats\nsource = pseudo-normal\nq = logrule\nn = 100\n");
  CHECK(code == 2);
  CHECK(msg.find("seed") != std::string::npos);
}

TEST_CASE("byte-identical reruns") {
  std::string cfg =
      "command = construct\nwitness = digitrange\nq = succ\nset = squares\nseed = 5\n"
      "horizon = 400\ncheckpoints = 100,400\n";
  auto [c1, o1] = run_text(cfg);
  auto [c2, o2] = run_text(cfg);
  REQUIRE(c1 == 0);
  CHECK(c1 == c2);
  CHECK(o1 == o2);
  CHECK(o1.find("subset_ok") != std::string::npos);
}

TEST_CASE("jsonl output is valid json lines") {
  auto [code, out] = run_text(
      "command = probe\nwhat = divergence\nq = pow2\nk = 1\ncheckpoints = 5,10\nformat = jsonl\n");
  REQUIRE(code == 0);
  std::istringstream lines(out);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);  // throws on malformed output
    if (count == 0) CHECK(j.contains("meta"));
    else CHECK(j.contains("partial_sum"));
    ++count;
  }
  CHECK(count == 3);
}

TEST_CASE("exit codes distinguish error categories") {
  // domain: x outside [0,1)
  auto [dcode, dmsg] = run_text("command = expand\nx = 3/2\nq = succ\nn = 3\n");
  CHECK(dcode == 3);
  CHECK(dmsg.find("kind=domain") != std::string::npos);

  // horizon: lambda with a tiny search cap
  auto [hcode, hmsg] = run_text(
      "command = construct\nwitness = lambda\nq = pow2\nseed = 7\nhorizon = 200\ncap-nu = 2\n");
  CHECK(hcode == 4);
  CHECK(hmsg.find("kind=horizon") != std::string::npos);

  // construction: the first example's digit ranges are empty at desk scale
  auto [ccode, cmsg] = run_text(
      "command = construct\nwitness = ndn\npattern = example1\nseed = 3\nhorizon = 50\n");
  CHECK(ccode == 5);
  CHECK(cmsg.find("kind=construction") != std::string::npos);

  // config: unknown witness
  auto [kcode, kmsg] = run_text(
      "command = construct\nwitness = zeta\nseed = 1\nhorizon = 10\n");
  CHECK(kcode == 2);
  CHECK(kmsg.find("kind=config") != std::string::npos);
}

TEST_CASE("construct theta emits the alternating example") {
  auto [code, out] = run_text(
      "command = construct\nwitness = theta\nalpha = const:2\nbeta = const:4\ns = const:1\n"
      "t = const:1\nupsilon = const:1\niset = list:0,1,2,3\nforced = const:0\nseed = 4\n"
      "horizon = 64\nchooser = min\n");
  REQUIRE(code == 0);
  CHECK(out.find("min_digit") != std::string::npos);
  // min chooser with forced 0: all digits are 0
  CHECK(out.find("64,") != std::string::npos);
}

TEST_CASE("probe condition tables run on the presets") {
  auto [code, out] = run_text("command = probe\nwhat = normality-conditions\npattern = example1\n"
                              "k = 1\ndepth = 100\n");
  REQUIRE(code == 0);
  CHECK(out.find("\n100,") != std::string::npos);
  CHECK(out.find("0.75") != std::string::npos);  // slot ratio 3/4 at n=100

  auto [gcode, gout] = run_text("command = probe\nwhat = dimension-conditions\npattern = example2:1\n"
                                "depth = 50\n");
  REQUIRE(gcode == 0);
  CHECK(gout.find("gamma") != std::string::npos);
}
