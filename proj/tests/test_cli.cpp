#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" ELMARKET_CLI_PATH "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("elmarket_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// Every output file with the run timings removed from the two JSON documents.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).string();
    std::string text = slurp(e.path());
    if (rel == "summary.json") {
      auto j = nlohmann::ordered_json::parse(text);
      j["metadata"].erase("timings_s");
      text = j.dump();
    } else if (rel == "bundle.json") {
      auto j = nlohmann::ordered_json::parse(text);
      j["metadata"].erase("timings");
      text = j.dump();
    }
    files[rel] = text;
  }
  return files;
}

}  // namespace

TEST_CASE("example reproduces the golden values") {
  const auto dir = scratch("example");
  const auto r = run_cli("example --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("all golden values matched") != std::string::npos);
  CHECK(r.out.find("DIFF") == std::string::npos);
  CHECK(r.out.find("PS2") != std::string::npos);  // reference-table discrepancy is reported
  CHECK(fs::exists(dir / "spot.csv"));
  CHECK(fs::exists(dir / "incentives.csv"));
  const auto summary = read_json(dir / "summary.json");
  bool noted = false;
  for (const auto& n : summary["notes"]) noted = noted || n.get<std::string>().find("14k - k^2") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("clear --mode optimal writes the spot table") {
  const auto dir = scratch("clear");
  const auto r = run_cli("clear --mode optimal analytical_example --out " + dir.string());
  REQUIRE(r.code == 0);
  const std::string spot = slurp(dir / "spot.csv");
  CHECK(spot.rfind("mode,t,generation,consumption,average_price,utility,cost,damage,social_welfare\n", 0) == 0);
  CHECK(spot.find("optimal,3,7,7,13,") != std::string::npos);
  CHECK(spot.find("competitive") == std::string::npos);

  const auto both = scratch("clear_both");
  REQUIRE(run_cli("clear analytical_example --out " + both.string()).code == 0);
  const std::string spot2 = slurp(both / "spot.csv");
  CHECK(spot2.find("competitive,1,4,4,2,") != std::string::npos);
  CHECK(spot2.find("optimal,1,2,2,4,") != std::string::npos);
}

TEST_CASE("invest --mode strategic reports no increment") {
  const auto dir = scratch("invest");
  const auto r = run_cli("invest --mode strategic analytical_example --out " + dir.string());
  REQUIRE(r.code == 0);
  const auto summary = read_json(dir / "summary.json");
  REQUIRE(summary["investment"].size() == 1);
  const auto& inv = summary["investment"][0];
  CHECK(inv["run"] == "strategic");
  CHECK(inv["increment"]["g2"].get<double>() == 0.0);
  CHECK(inv["total_mw"].get<double>() == 0.0);

  const auto opt = scratch("invest_opt");
  REQUIRE(run_cli("invest analytical_example --out " + opt.string()).code == 0);
  CHECK(read_json(opt / "summary.json")["investment"][0]["increment"]["g2"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("invest --mode aligned matches the optimal increments") {
  const auto dir = scratch("aligned");
  const auto r = run_cli("invest --mode aligned analytical_example --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("subsidy best responses match the optimal increments") != std::string::npos);
  const auto summary = read_json(dir / "summary.json");
  REQUIRE(summary["investment"].size() == 2);
  CHECK(summary["investment"][1]["run"] == "aligned");
  CHECK(summary["investment"][1]["increment"]["g2"].get<double>() == doctest::Approx(2.0).epsilon(0.06));
}

TEST_CASE("incentives command writes taxes and subsidies") {
  const auto dir = scratch("incentives");
  const auto r = run_cli("incentives analytical_example --out " + dir.string());
  REQUIRE(r.code == 0);
  const std::string inc = slurp(dir / "incentives.csv");
  CHECK(inc.find("\n2,1,3,") != std::string::npos);  // t=2, producer 1 produces 3
  CHECK(r.out.find("IR") != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("clear --mode sideways analytical_example").code == 1);
  CHECK(run_cli("clear --bogus analytical_example").code == 1);
  CHECK(run_cli("clear --seed 2 analytical_example --out " + dir.string()).code == 1);
  CHECK(run_cli("--help").code == 0);

  CHECK(run_cli("validate analytical_example").code == 0);
  CHECK(run_cli("validate /nonexistent/case.json").code == 2);
  CHECK(run_cli("clear --gamma 0.5 analytical_example --out " + dir.string()).code == 2);

  fs::create_directories(dir);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{ \"schema_version\": 1, ";
  }
  const auto malformed = run_cli("validate " + (dir / "bad.json").string());
  CHECK(malformed.code == 2);
  CHECK(malformed.out.find("line") != std::string::npos);

  // Well-formed document with a violation: negative capacity.
  auto doc = nlohmann::json::parse(slurp(fs::path(ELMARKET_DATA_DIR) / "analytical_example.json"));
  doc["generators"][0]["capacity"] = -1.0;
  {
    std::ofstream invalid(dir / "invalid.json");
    invalid << doc.dump(1);
  }
  const auto v = run_cli("validate " + (dir / "invalid.json").string());
  CHECK(v.code == 2);
  CHECK(v.out.find("g1: capacity must be >= 0") != std::string::npos);
}

TEST_CASE("output directory defaults to the environment variable") {
  const auto dir = scratch("env");
  const auto r = run_cli("clear --mode optimal analytical_example", "ELMARKET_OUT_DIR=" + dir.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "spot.csv"));
  CHECK(run_cli("--help").out.find("ELMARKET_OUT_DIR") != std::string::npos);
}

TEST_CASE("re-running produces identical files and report re-renders them") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  REQUIRE(run_cli("example --out " + a.string()).code == 0);
  const auto first = snapshot(a);
  REQUIRE(run_cli("example --out " + a.string()).code == 0);
  CHECK(snapshot(a) == first);

  REQUIRE(run_cli("report " + (a / "bundle.json").string() + " --out " + b.string()).code == 0);
  const auto rendered = snapshot(b);
  REQUIRE(rendered.size() == first.size());
  for (const auto& [name, text] : first) {
    CHECK_MESSAGE(rendered.at(name) == text, name);
  }
  CHECK(run_cli("report /nonexistent/bundle.json").code == 2);
}
