// Acceptance run: executes `chui verify-all --seed 1` twice (1 and 3 worker
// threads), prints one line per criterion, and compares the two reports with
// wall-clock fields removed.
//
// Usage: acceptance [work-dir]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "chui/experiments.hpp"
#include "cli_runner.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "chui_acceptance";
  fs::create_directories(work);
  const auto first = work / "verify_1.json";
  const auto second = work / "verify_2.json";
  const std::string common = std::string("verify-all --seed 1 --corpus ") + CHUI_CORPUS_DIR;

  const auto r1 = run_cli(common + " --threads 1 --out " + first.string() + " 2>/dev/null");
  const auto r2 = run_cli(common + " --threads 3 --out " + second.string() + " 2>/dev/null");

  nlohmann::json a, b;
  try {
    std::ifstream(first) >> a;
    std::ifstream(second) >> b;
  } catch (const std::exception& e) {
    std::printf("FAIL could not read verify-all reports: %s\n", e.what());
    return 1;
  }

  bool all = true;
  for (const auto& c : a["criteria"]) {
    const int id = c["id"].get<int>();
    bool pass = c["pass"].get<bool>();
    std::string summary = c["summary"].get<std::string>();
    if (id == 10) {
      const bool same = chui::comparable_view(a).dump() == chui::comparable_view(b).dump();
      pass = pass && same;
      summary += same ? "; reports identical across runs (1 vs 3 threads)" : "; reports differ across runs";
    }
    all = all && pass;
    std::printf("criterion %2d %s  %-42s %8.2fs  %s\n", id, pass ? "PASS" : "FAIL", c["name"].get<std::string>().c_str(),
                c["seconds"].get<double>(), summary.c_str());
  }
  const bool corpus_ok = !a["violation"].get<bool>();
  std::printf("bundled corpus: %zu reports, %s; verify-all exit codes %d and %d\n", a["corpus"].size(),
              corpus_ok ? "no violated verdicts" : "VIOLATED verdicts", r1.status, r2.status);
  all = all && corpus_ok && r1.status == 0 && r2.status == 0;
  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
  return all ? 0 : 1;
}
