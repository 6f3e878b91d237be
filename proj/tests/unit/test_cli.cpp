#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "chromaeeg/cli.hpp"
#include "chromaeeg/text_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chromaeeg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = chromaeeg::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("cli: version and help exit cleanly") {
  const auto v = cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("chromaeeg") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("cli: synth, extract and evaluate produce a report") {
  const auto dir = oracle::scratch_dir("cli_flow");
  REQUIRE(cli({"synth", "--out", dir.string(), "--subjects", "3", "--reps", "2", "--seed", "4"}).code == 0);
  CHECK(fs::exists(dir / "dataset.csv"));
  const auto ex = cli({"extract", "--in", dir.string(), "--window", "1000"});
  REQUIRE(ex.code == 0);
  CHECK(fs::exists(dir / "features_1000ms.csv"));
  const auto ev = cli({"evaluate", "--in", dir.string(), "--family", "rf", "--feature-set", "all", "--folds", "2"});
  REQUIRE(ev.code == 0);
  CHECK(fs::exists(dir / "report" / "cells.csv"));
  CHECK(fs::exists(dir / "report" / "summary.txt"));
  CHECK(fs::exists(dir / "report" / "w1000" / "table_accuracy_all.csv"));

  const auto again = oracle::scratch_dir("cli_report");
  REQUIRE(cli({"report", "--in", (dir / "report").string(), "--out", again.string()}).code == 0);
  CHECK(chromaeeg::io::read_file(again / "summary.txt") ==
        chromaeeg::io::read_file(dir / "report" / "summary.txt"));
}

TEST_CASE("cli: usage errors exit 1 and name the problem") {
  const auto bad = cli({"extract", "--in", ".", "--bogus-flag"});
  CHECK(bad.code == 1);
  CHECK((bad.err + bad.out).find("--bogus-flag") != std::string::npos);
  CHECK(cli({"extract", "--in", ".", "--window", "300"}).code == 1);
  CHECK(cli({"extract", "--in", ".", "--threshold", "-2"}).code == 1);
  CHECK(cli({}).code == 1);
}

TEST_CASE("cli: runtime failures exit 2 with a failure manifest") {
  const auto dir = oracle::scratch_dir("cli_fail");
  const auto r = cli({"extract", "--in", dir.string(), "--window", "500"});
  CHECK(r.code == 2);
  CHECK(r.err.find("failure manifest:") != std::string::npos);
  REQUIRE(fs::exists(dir / "failure.json"));
  const auto text = chromaeeg::io::read_file(dir / "failure.json");
  CHECK(text.find("\"command\"") != std::string::npos);
  CHECK(text.find("extract") != std::string::npos);
}
