// End-to-end checks of the command line front end and the report emitter.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <proplab/report.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#ifndef PROPLAB_BIN
#error "PROPLAB_BIN must point at the CLI binary"
#endif

namespace fs = std::filesystem;
using namespace proplab;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(PROPLAB_BIN) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "proplab_cli_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("") == 2);
  CHECK(run("flow") == 2);  // missing required --xi
}

TEST_CASE("flow subcommand emits the CSV contract") {
  fs::path out = temp_dir() / "flow.csv";
  CHECK(run("flow --chart minkowski --xi 1,1 --smax 10 --samples 21 --out " + out.string()) == 0);
  std::string csv = slurp(out);
  CHECK(csv.rfind("s,x0,x1,xi0,xi1,p_drift", 0) == 0);
  // every drift entry obeys the conservation contract
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    auto pos = line.rfind(',');
    double drift = std::stod(line.substr(pos + 1));
    CHECK(drift <= 1e-9 * 2.0);
    ++rows;
  }
  CHECK(rows == 21);
}

TEST_CASE("frw chart flows and transport emit CSV") {
  fs::path out = temp_dir() / "frw.csv";
  CHECK(run("flow --chart 'frw:a=exp(t)' --xi 1,1 --smax 2 --samples 11 --out " + out.string()) ==
        0);
  CHECK(slurp(out).size() > 100);

  fs::path tout = temp_dir() / "transport.csv";
  CHECK(run("transport --chart minkowski --xi 1,1 --smax 1 --samples 65 --out " +
            tout.string()) == 0);
  std::string csv = slurp(tout);
  CHECK(csv.rfind("s,re_v00,im_v00", 0) == 0);
}

TEST_CASE("symbols check reads a config and prints the identity table") {
  fs::path cfg = temp_dir() / "config.json";
  {
    std::ofstream f(cfg);
    f << R"json({"dim": 2, "rank": 2,
            "metric": [["-1", "0"], ["0", "exp(2*t)"]],
            "chart_box": [[-6, 6], [-6, 6]]})json";
  }
  CHECK(run("symbols check --config " + cfg.string() + " --seed 5") == 0);
  CHECK(run("symbols check --config /nonexistent.json") == 1);
}

TEST_CASE("model positivity sweep passes") {
  CHECK(run("model positivity --n 50 --seed 9") == 0);
}

TEST_CASE("probe consumes emitted kernel CSV") {
  fs::path dir = temp_dir() / "qft";
  CHECK(run("qft green --kind ret --m 1.0 --out " + dir.string()) == 0);
  fs::path kernel = dir / "green-ret.csv";
  CHECK(fs::exists(kernel));
  fs::path pout = temp_dir() / "probe.csv";
  CHECK(run("probe wf --input " + kernel.string() + " --point 3,3 --sigma 8 --out " +
            pout.string()) == 0);
  std::string csv = slurp(pout);
  CHECK(csv.rfind("theta,alpha,r2,flagged", 0) == 0);
  CHECK(csv.find(",1\n") != std::string::npos);  // some direction is flagged on the cone
}

TEST_CASE("report round trip and determinism") {
  report::RunReport r;
  r.tool_version = "proplab test";
  r.seed = 42;
  r.config_hash = 0xabcdef;
  r.checks.push_back({"alpha", 1e-9, 2.5e-12, true, "note"});
  r.checks.push_back({"beta", 1.0, 2.0, false, ""});

  fs::path p1 = temp_dir() / "r1.json";
  fs::path p2 = temp_dir() / "r2.json";
  report::emit_report(r, p1.string());
  report::emit_report(r, p2.string());
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(p1).find("2.500000000000e-12") != std::string::npos);

  report::RunReport rr = report::read_report(p1.string());
  CHECK(rr.seed == r.seed);
  CHECK(rr.config_hash == r.config_hash);
  REQUIRE(rr.checks.size() == 2);
  CHECK(rr.checks[0].name == "alpha");
  CHECK(rr.checks[0].measured == r.checks[0].measured);
  CHECK(rr.checks[1].pass == false);
  CHECK(!rr.overall_pass());

  // re-emitting the parsed report reproduces the bytes
  fs::path p3 = temp_dir() / "r3.json";
  report::emit_report(rr, p3.string());
  CHECK(slurp(p3) == slurp(p1));
}

TEST_CASE("gram subcommand emits a deterministic verdict") {
  fs::path dir1 = temp_dir() / "g1";
  fs::path dir2 = temp_dir() / "g2";
  CHECK(run("qft gram --m 1.0 --seed 7 --count 4 --out " + dir1.string()) == 0);
  CHECK(run("qft gram --m 1.0 --seed 7 --count 4 --out " + dir2.string()) == 0);
  CHECK(slurp(dir1 / "gram.json") == slurp(dir2 / "gram.json"));
}

TEST_CASE("suite report lists every criterion exactly once") {
  fs::path dir = temp_dir() / "suite_quick";
  int rc = run("suite acceptance --quick --seed 5 --out " + dir.string());
  report::RunReport rep = report::read_report((dir / "report.json").string());
  REQUIRE(rep.checks.size() == 10);
  std::set<std::string> names;
  bool all = true;
  for (const auto& c : rep.checks) {
    names.insert(c.name);
    all = all && c.pass;
  }
  CHECK(names.size() == 10);  // unique names, one record per criterion
  CHECK(rep.overall_pass() == all);
  CHECK(rc == (all ? 0 : 1));
  CHECK(fs::exists(dir / "timings.json"));
}

TEST_CASE("dirac subcommands") {
  CHECK(run("dirac clifford --n 2") == 0);
  CHECK(run("dirac clifford --n 4") == 0);
  CHECK(run("dirac beta --N 1,0") == 0);
  CHECK(run("dirac beta --N 0.2,1,0,0") == 0);
}
