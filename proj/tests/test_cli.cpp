#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli_runner.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string corpus = CHUI_CORPUS_DIR;

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "chui_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Cli, EnergyUniformEight) {
  const auto r = run_cli("energy --uniform 8");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_GE(j["result"]["value"].get<double>(), std::numbers::pi / 18);
  for (const char* k : {"tool_version", "seed", "spec", "wall_clock"}) EXPECT_TRUE(j["meta"].contains(k)) << k;
}

TEST(Cli, EnergySingleChargeFromFile) {
  const auto r = run_cli("energy --config " + corpus + "/uniform_n01.json");
  ASSERT_EQ(r.status, 0);
  EXPECT_NEAR(json::parse(r.out)["result"]["value"].get<double>(), 4.0, 4e-3);
}

TEST(Cli, CsvHasFixedColumnsAndFullPrecision) {
  const auto r = run_cli("energy --uniform 3 --format csv");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::string meta, head, row;
  std::getline(in, meta);
  std::getline(in, head);
  std::getline(in, row);
  EXPECT_EQ(meta.rfind("# tool_version=", 0), 0u);
  EXPECT_EQ(head, "dimension,charges,value,err,converged,evals");
  const auto value = row.substr(4, row.find(',', 4) - 4);
  EXPECT_GE(value.size(), 17u);
}

TEST(Cli, MalformedInputExitsTwo) {
  const auto bad = temp_file("bad.json");
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(run_cli("energy --config " + bad.string() + " 2>/dev/null").status, 2);
  const auto outside = temp_file("outside.json");
  std::ofstream(outside) << R"({"dimension": 2, "charges": [{"position": [3, 0]}]})";
  EXPECT_EQ(run_cli("energy --config " + outside.string() + " 2>/dev/null").status, 2);
  EXPECT_EQ(run_cli("energy 2>/dev/null").status, 2);
  EXPECT_EQ(run_cli("energy --uniform 3 --format xml 2>/dev/null").status, 2);
  EXPECT_EQ(run_cli("nonsense 2>/dev/null").status, 2);
}

TEST(Cli, NonConvergenceExitsThree) {
  EXPECT_EQ(run_cli("energy --uniform 5 --rel-tol 1e-9 --max-evals 1000 > /dev/null").status, 3);
}

TEST(Cli, BoundsWeightedArcs) {
  const auto r = run_cli("bounds --weights 1,2,4");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["verdicts"]["reduction_upper"], "holds");
  EXPECT_EQ(j["arcs"].size(), 3u);
}

TEST(Cli, SweepsWriteRows) {
  const auto out = temp_file("defect.csv");
  ASSERT_EQ(run_cli("defect-sweep --jmax 3 --format csv --out " + out.string()).status, 0);
  std::ifstream in(out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (rows == 0) EXPECT_EQ(line, "j,l,defect,err,defect_over_l");
    ++rows;
  }
  EXPECT_EQ(rows, 5);
  const auto p = run_cli("prop14-sweep --jmin 2 --jmax 4");
  ASSERT_EQ(p.status, 0);
  EXPECT_EQ(json::parse(p.out)["rows"].size(), 3u);
}

TEST(Cli, LemmaSuite) {
  const auto r = run_cli("lemma-suite --trials 2000 --seed 4");
  ASSERT_EQ(r.status, 0);
  for (const auto& s : json::parse(r.out)["suites"]) EXPECT_EQ(s["failures"], 0);
}

TEST(Cli, OptimizeWritesTrace) {
  const auto trace = temp_file("trace.jsonl");
  const auto r = run_cli("optimize --uniform 2 --budget 120 --restarts 0 --trace " + trace.string());
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["method"], "nelder-mead-angles");
  std::ifstream in(trace);
  std::string line;
  std::getline(in, line);
  EXPECT_TRUE(json::parse(line).contains("meta"));
  std::getline(in, line);
  EXPECT_TRUE(json::parse(line).contains("angles_or_points"));
}

TEST(Cli, VerifyAllSubsetIsStable) {
  const auto a = run_cli("verify-all --only 1,8 --lemma-trials 500 --corpus '' 2>/dev/null");
  const auto b = run_cli("verify-all --only 1,8 --lemma-trials 500 --corpus '' --threads 2 2>/dev/null");
  ASSERT_EQ(a.status, 0);
  ASSERT_EQ(b.status, 0);
  auto strip = [](json j) {
    j["meta"].erase("wall_clock");
    j["meta"]["spec"].erase("threads");
    for (auto& c : j["criteria"]) c.erase("seconds");
    return j.dump();
  };
  EXPECT_EQ(strip(json::parse(a.out)), strip(json::parse(b.out)));
}

}  // namespace
