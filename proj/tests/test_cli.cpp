#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qal/cli.hpp"

using namespace qal;
using namespace qal::cli;

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args, const char* env_seed = nullptr) {
  std::ostringstream out, err;
  const int code = run(args, out, err, env_seed);
  return {code, out.str(), err.str()};
}

std::string without_run_line(const std::string& csv) {
  std::istringstream is(csv);
  std::string line, kept;
  while (std::getline(is, line))
    if (line.rfind("# run:", 0) != 0) kept += line + "\n";
  return kept;
}

CsvTable parse(const std::string& text) {
  std::istringstream is(text);
  return read_csv(is);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qal_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool has_meta(const CsvTable& t, const std::string& line) {
  for (const auto& m : t.metadata)
    if (m == line) return true;
  return false;
}

}  // namespace

TEST_CASE("flags override the config file and each key records its source") {
  const fs::path cfg = scratch("census.cfg");
  write_file(cfg, "# census settings\nm = 3\nn=4   # trailing comment\n\n");
  const std::vector<std::string> args{"--config", cfg.string(), "--n", "2"};
  const ExperimentConfig c = parse_config("census", args);
  CHECK(c.integer("m") == 3);
  CHECK(c.source("m") == Source::kFile);
  CHECK(c.integer("n") == 2);
  CHECK(c.source("n") == Source::kFlag);
  CHECK(c.seed == 1);
  CHECK(c.source("seed") == Source::kDefault);

  const std::vector<std::string> flags_only{"--m=2", "--n", "5"};
  const ExperimentConfig f = parse_config("census", flags_only);
  CHECK(f.integer("m") == 2);
  CHECK(f.integer("n") == 5);
}

TEST_CASE("seed resolution: flag, then file, then environment, then default") {
  const std::vector<std::string> none{"--m", "2", "--n", "1"};
  CHECK(parse_config("census", none, "42").seed == 42);
  CHECK(parse_config("census", none, "42").source("seed") == Source::kEnv);
  const std::vector<std::string> flag{"--m", "2", "--n", "1", "--seed", "9"};
  CHECK(parse_config("census", flag, "42").seed == 9);
  const fs::path cfg = scratch("seed.cfg");
  write_file(cfg, "seed = 18446744073709551615\n");
  const std::vector<std::string> file{"--m", "2", "--n", "1", "--config", cfg.string()};
  CHECK(parse_config("census", file, "42").seed == 18446744073709551615ULL);
  CHECK_THROWS_AS(parse_config("census", none, "abc"), ConfigError);
}

TEST_CASE("malformed values name the offending key") {
  auto message = [](std::vector<std::string> args) {
    try {
      parse_config("histogram", args);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({"--p", "0.5,0.5,"}).find("--p: trailing separator") == 0);
  CHECK(message({"--p", "0.5,,0.5"}).find("--p:") == 0);
  CHECK(message({"--p", "0.5,0.5", "--draws", "ten"}).find("--draws:") == 0);
  CHECK(message({"--p", "0.5,0.5", "--channel", "sideways"}).find("--channel:") == 0);
  CHECK(message({"--p", "0.5,0.5", "--colour", "red"}).find("--colour: unknown key") == 0);
  CHECK(message({"--gamma", "0,0"}).find("--p: required") == 0);
  CHECK(message({"--p", "0.5,0.5", "--p", "0.4,0.6"}).find("--p:") == 0);

  const fs::path cfg = scratch("bad.cfg");
  write_file(cfg, "p 0.5,0.5\n");
  CHECK_THROWS_AS(parse_config("histogram", std::vector<std::string>{"--config", cfg.string()}),
                  InvalidArgument);
}

TEST_CASE("numbers are written in shortest round-trip form") {
  CHECK(format_number(0.8) == "0.8");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-10) == "1e-10");
  CHECK(format_number(3.0) == "3");
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("csv round trip with quoting") {
  CsvTable t;
  t.metadata = {"qal test", "note: a, b"};
  t.header = {"name", "value"};
  t.rows = {{"plain", "1"}, {"with,comma", "2"}, {"with \"quote\"", "3"}};
  std::ostringstream os;
  write_csv(os, t, "run: timestamp=x workers=1");
  const CsvTable back = parse(os.str());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  REQUIRE(back.metadata.size() == 3);
  CHECK(back.metadata[0] == "qal test");
  CHECK(back.metadata[1] == "note: a, b");
}

TEST_CASE("identity-check example") {
  const Outcome o = run_cli({"identity-check", "--m", "2", "--n", "1", "--p", "0.5,0.5",
                             "--gamma", "0.2,0.2", "--seed", "7"});
  REQUIRE(o.code == 0);
  const CsvTable t = parse(o.out);
  REQUIRE(t.rows.size() == 1);
  const auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == name) return std::stod(t.rows[0][i]);
    FAIL("missing column " << name);
    return 0.0;
  };
  CHECK(col("xi") == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(std::abs(col("amp_sq") - 0.8) <= 1e-10);
  CHECK(col("gap") <= 1e-10);
  CHECK(has_meta(t, "config seed=7 (flag)"));
  CHECK(has_meta(t, "config gamma=0.2,0.2 (flag)"));
  CHECK(has_meta(t, "config tol=1e-10 (default)"));
  CHECK(t.metadata.front().rfind("qal ", 0) == 0);
}

TEST_CASE("census example") {
  const Outcome o = run_cli({"census", "--m", "2", "--n", "2"});
  REQUIRE(o.code == 0);
  const CsvTable t = parse(o.out);
  CHECK(t.header == std::vector<std::string>{"l", "raw", "reduced"});
  CHECK(t.rows == std::vector<std::vector<std::string>>{
                      {"0", "4", "4"}, {"1", "8", "4"}, {"2", "4", "1"}});
  CHECK(has_meta(t, "reduced_total: 9"));
}

TEST_CASE("histogram without losses reproduces the bare law") {
  const Outcome o = run_cli({"histogram", "--p", "0.5,0.5", "--gamma", "0,0"});
  REQUIRE(o.code == 0);
  const CsvTable t = parse(o.out);
  REQUIRE(t.rows.size() == 2);
  for (const auto& r : t.rows) CHECK(r[2] == r[3]);
  CHECK(has_meta(t, "defect: 0"));
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"bogus"}).code == 1);
  CHECK(run_cli({}).code == 1);
  const Outcome bad = run_cli({"histogram", "--p", "0.5,0.5,"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("--p") != std::string::npos);
  CHECK(run_cli({"histogram", "--p", "0.5,0.6"}).code == 1);

  const Outcome inf = run_cli({"identity-check", "--m", "2", "--n", "1", "--p", "0.9,0.1",
                               "--gamma", "0.9,0.9"});
  CHECK(inf.code == 2);
  CHECK(parse(inf.out).rows.at(0).back() == "infeasible");
  CHECK(run_cli({"phase-solve", "--m", "2", "--n", "1", "--p", "0.9,0.1", "--gamma",
                 "0.9,0.9"})
            .code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("output file and plot scripts") {
  const fs::path csv = scratch("census.csv");
  REQUIRE(run_cli({"census", "--m", "3", "--n", "2", "--out", csv.string()}).code == 0);
  const CsvTable t = read_csv_file(csv.string());
  CHECK(t.rows.size() == 3);

  const fs::path hist = scratch("hist.csv");
  REQUIRE(run_cli({"histogram", "--p", "0.2,0.3,0.5", "--gamma", "0.1,0,0.2", "--out",
                   hist.string()})
              .code == 0);
  const fs::path script = scratch("hist.py");
  CHECK(emit_plot_script(hist.string(), script.string()) == PlotKind::kHistogram);
  const std::string py = read_file(script);
  CHECK(py.find("matplotlib") != std::string::npos);
  CHECK(py.find("bar(") != std::string::npos);

  const fs::path conv = scratch("conv.csv");
  write_file(conv, "# qal\neps,l2_error\n0.004,1e-3\n0.002,5e-4\n");
  CHECK(emit_plot_script(conv.string(), scratch("conv.py").string()) ==
        PlotKind::kConvergence);
  CHECK(read_file(scratch("conv.py")).find("loglog") != std::string::npos);

  const fs::path wave = scratch("wave.csv");
  write_file(wave, "t,x,re,im,prob\n0,0,1,0,1\n");
  CHECK(emit_plot_script(wave.string(), scratch("wave.py").string()) == PlotKind::kWavepacket);

  CHECK_THROWS_AS(emit_plot_script(csv.string(), scratch("census.py").string()),
                  UnknownSchema);
  CHECK(run_cli({"plot-script", "--csv", csv.string(), "--script",
                 scratch("census.py").string()})
            .code == 1);
}

TEST_CASE("output bytes do not depend on the worker count") {
  const std::vector<std::vector<std::string>> runs{
      {"histogram", "--p", "0.2,0.3,0.5", "--gamma", "0.1,0,0.2", "--draws", "20000",
       "--seed", "4"},
      {"simulate-game", "--p", "0.5,0.5", "--labels", "-1,1", "--gamma", "0.2,0.2",
       "--trials", "5000", "--seed", "4"},
      {"roughness", "--samples", "2000", "--seed", "4"},
      {"identity-check", "--m", "2", "--n", "2", "--gamma", "0.05,0.05"},
  };
  for (auto args : runs) {
    CAPTURE(args[0]);
    const Outcome a = run_cli(args);
    REQUIRE(a.code == 0);
    for (const char* w : {"2", "4"}) {
      auto with = args;
      with.push_back("--workers");
      with.push_back(w);
      const Outcome b = run_cli(with);
      CHECK(without_run_line(a.out) == without_run_line(b.out));
    }
    CHECK(without_run_line(run_cli(args).out) == without_run_line(a.out));
  }
}

TEST_CASE("installed binary reports exit codes") {
  const char* path = std::getenv("QAL_CLI_PATH");
  if (path == nullptr) return;
  const fs::path out = scratch("bin.csv");
  const std::string base = std::string("\"") + path + "\" ";
  CHECK(std::system((base + "census --m 2 --n 2 --out \"" + out.string() + "\"").c_str()) == 0);
  CHECK(read_csv_file(out.string()).rows.size() == 3);
  CHECK(std::system((base + "census --m 2 2>/dev/null").c_str()) != 0);
}
