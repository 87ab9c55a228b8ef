#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siph/cli.hpp"

using nlohmann::ordered_json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = siph::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string strip_wall_time(const std::string& s) {
  static const std::regex json_field(R"("wall_time_ms": [^\n]*)");
  static const std::regex csv_row(R"(meta,,wall_time_ms,[^\n]*)");
  return std::regex_replace(std::regex_replace(s, json_field, ""), csv_row, "");
}

std::vector<std::string> with(std::vector<std::string> args, const std::vector<std::string>& extra) {
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({"check", "si", "--gallery", "sphere", "--n", "5", "--N", "10000", "--seed", "0"}).code == 0);
  CHECK(run({"check", "si", "--gallery", "footnote_1d", "--n", "2"}).code == 1);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"check", "bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"check", "si", "--gallery", "rosenbrock", "--n", "2"}).code == 2);
  CHECK(run({"check", "si", "--gallery", "sphere", "--expr", "x_1", "--n", "2"}).code == 2);
  CHECK(run({"check", "si", "--gallery", "sphere", "--n", "2", "--N", "0"}).code == 2);
  CHECK(run({"check", "si", "--gallery", "sphere", "--n", "2", "--format", "xml"}).code == 2);
  CHECK(run({"solve", "paired-level", "--r", "1.5"}).code == 2);
  CHECK(run({"solve", "paired-level"}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const Result bad = run({"check", "si", "--expr", "x_1 +", "--n", "2"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("offset 4") != std::string::npos);
  CHECK(bad.out.empty());
}

TEST_CASE("JSON report layout") {
  const Result r = run({"check", "si", "--gallery", "sphere", "--n", "3", "--N", "1000"});
  REQUIRE(r.code == 0);
  CHECK(r.out.back() == '\n');
  const ordered_json j = ordered_json::parse(r.out);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"version", "config", "command", "verdict", "metrics", "witnesses",
                                         "wall_time_ms"});
  CHECK(j["version"] == "si-ph-kit/1");
  CHECK(j["command"] == "check si");
  CHECK(j["verdict"] == "pass");
  CHECK(j["witnesses"].is_array());
  CHECK(j["witnesses"].empty());
  CHECK(j["config"]["function"]["name"] == "sphere");
  CHECK(j["config"]["samples"] == 1000);
  CHECK(j["config"]["seed"] == 0);
}

TEST_CASE("footnote_1d witness in the report") {
  const Result r = run({"check", "si", "--gallery", "footnote_1d", "--n", "2"});
  REQUIRE(r.code == 1);
  const ordered_json j = ordered_json::parse(r.out);
  CHECK(j["verdict"] == "fail");
  REQUIRE_FALSE(j["witnesses"].empty());
  const ordered_json& w = j["witnesses"][0];
  CHECK(w["x"][0] == 0.5);
  CHECK(w["y"][0] == -0.5);
  CHECK(w["rho"] == 4.0);
  CHECK(w["f_rho_x"] == 2.0);
  CHECK(w["f_rho_y"] == 4.0);
}

TEST_CASE("every non-pass verdict carries a witness") {
  const std::vector<std::vector<std::string>> cases = {
      {"check", "decomposable", "--gallery", "tanh_exp", "--n", "2", "--T", "20"},
      {"levelset", "compact", "--gallery", "linear_x1", "--n", "2", "--level", "1"},
      {"levelset", "bounds", "--gallery", "linear_x1", "--n", "2", "--N", "200"},
      {"levelset", "negligible", "--gallery", "zero", "--n", "2", "--level", "0", "--N", "1000"},
      {"cert", "positive-region", "--gallery", "gauss_si", "--n", "2"},
  };
  for (const auto& args : cases) {
    const Result r = run(args);
    INFO(args[0] << " " << args[1] << " " << args[3]);
    CHECK(r.code == 1);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j["verdict"] != "pass");
    CHECK_FALSE(j["witnesses"].empty());
  }
}

TEST_CASE("CSV radii sweep") {
  const Result r = run({"levelset", "radii", "--gallery", "sphere", "--n", "2", "--level", "4", "--format", "csv"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "kind,index,name,value,detail");
  int radius_rows = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("radius,", 0) != 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 5);
    CHECK(std::stoi(cells[1]) == radius_rows);
    CHECK(std::fabs(std::stod(cells[3]) - 2.0) <= 1e-9);
    CHECK(cells[4] == "found");
    ++radius_rows;
  }
  CHECK(radius_rows == 8);
  CHECK(r.out.back() == '\n');
}

TEST_CASE("command results") {
  const ordered_json s = ordered_json::parse(run({"solve", "paired-level", "--r", "0.70710678"}).out);
  CHECK(std::fabs(s["metrics"]["s"].get<double>() - 1.325) <= 1e-3);

  const Result g = run({"gallery", "list"});
  REQUIRE(g.code == 0);
  const ordered_json gl = ordered_json::parse(g.out);
  bool has_footnote = false;
  for (const auto& e : gl["metrics"]["entries"]) has_footnote = has_footnote || e["name"] == "footnote_1d";
  CHECK(has_footnote);

  const ordered_json b = ordered_json::parse(
      run({"levelset", "bounds", "--gallery", "ellipsoid", "--n", "2", "--param", "diag=1,4", "--N", "1000"}).out);
  CHECK(b["verdict"] == "pass");
  CHECK(std::fabs(b["metrics"]["m_p"].get<double>() - 1.0) <= 1e-5);
  CHECK(std::fabs(b["metrics"]["M_p"].get<double>() - 4.0) <= 1e-5);

  CHECK(run({"decompose", "--gallery", "sq_norm", "--n", "3", "--N", "500", "--ref2-x0", "2,0,0"}).code == 0);
  const Result pos = run({"decompose", "--gallery", "gauss_si", "--n", "2", "--orientation", "positive_p"});
  CHECK(pos.code == 0);
  CHECK(ordered_json::parse(pos.out)["metrics"]["order_reversed"] == true);
  CHECK(run({"verify", "euler", "--gallery", "sphere", "--n", "3", "--N", "500"}).code == 0);
  CHECK(run({"verify", "levelset-grad", "--gallery", "sphere", "--n", "3", "--level", "4"}).code == 0);
  CHECK(run({"check", "si", "--expr", "norm(x)^2", "--n", "3", "--N", "500"}).code == 0);
  CHECK(run({"check", "si", "--gallery", "norm", "--n", "3", "--phi", "exp_neg", "--N", "500"}).code == 0);
}

TEST_CASE("reports are reproducible") {
  const std::vector<std::vector<std::string>> commands = {
      {"check", "si", "--gallery", "random_si", "--n", "3", "--N", "2000"},
      {"check", "decomposable", "--gallery", "tanh_exp", "--n", "2", "--T", "20"},
      {"decompose", "--gallery", "random_si", "--n", "3", "--N", "300"},
      {"levelset", "negligible", "--gallery", "sphere", "--n", "2", "--level", "1", "--N", "20000"},
      {"cert", "positive-region", "--gallery", "saddle_si", "--n", "3"},
  };
  for (const auto& args : commands) {
    for (const std::string format : {"json", "csv"}) {
      INFO(args[0] << " " << args[1] << " " << format);
      const Result a = run(with(args, {"--seed", "5", "--format", format, "--threads", "1"}));
      const Result b = run(with(args, {"--seed", "5", "--format", format, "--threads", "3"}));
      CHECK(a.code == b.code);
      CHECK(strip_wall_time(a.out) == strip_wall_time(b.out));
    }
  }
  const Result s0 = run({"check", "si", "--gallery", "random_si", "--n", "3", "--N", "2000", "--seed", "0"});
  const Result s1 = run({"check", "si", "--gallery", "random_si", "--n", "3", "--N", "2000", "--seed", "1"});
  CHECK(strip_wall_time(s0.out) != strip_wall_time(s1.out));
}

TEST_CASE("SIPH_SEED overrides --seed") {
  const std::vector<std::string> args = {"check", "si", "--gallery", "sphere", "--n", "2", "--N", "100", "--seed", "3"};
  ::setenv("SIPH_SEED", "42", 1);
  const ordered_json env = ordered_json::parse(run(args).out);
  ::unsetenv("SIPH_SEED");
  const ordered_json flag = ordered_json::parse(run(args).out);
  CHECK(env["config"]["seed"] == 42);
  CHECK(flag["config"]["seed"] == 3);
}

TEST_CASE("report files") {
  const auto dir = std::filesystem::temp_directory_path() / "siph_cli_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "report.json").string();
  const Result r = run({"check", "si", "--gallery", "sphere", "--n", "2", "--N", "100", "--out", path});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  const ordered_json j = ordered_json::parse(in);
  CHECK(j["verdict"] == "pass");
  std::filesystem::remove_all(dir);

  const Result bad = run({"check", "si", "--gallery", "sphere", "--n", "2", "--out", "/nonexistent/dir/r.json"});
  CHECK(bad.code == 2);
  CHECK_FALSE(bad.err.empty());
}

TEST_CASE("process exit status") {
  const std::string bin = SIPH_BINARY;
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("check si --gallery sphere --n 2 --N 100") == 0);
  CHECK(status("check si --gallery footnote_1d --n 2 --N 100") == 1);
  CHECK(status("check si --expr 'x_1 +' --n 2") == 2);
  CHECK(status("nosuchcommand") == 2);
}
