// chui: command-line front end for energies, bounds, sweeps and the
// acceptance suite.
//
// Exit status: 0 ok, 1 a verdict was violated, 2 bad input, 3 quadrature did
// not converge.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chui/chui.hpp"

#ifndef CHUI_CORPUS_DIR
#define CHUI_CORPUS_DIR "data/corpus"
#endif

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kViolation = 1, kInput = 2, kNoConvergence = 3 };

struct Common {
  std::string config;
  std::size_t uniform = 0;
  std::vector<double> weights;
  int dim = 2;
  std::uint64_t seed = 1;
  double rel_tol = 1e-3;
  std::size_t max_evals = 50'000'000;
  unsigned threads = 1;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* cmd, Common& c, bool with_input) {
  if (with_input) {
    auto* cfg = cmd->add_option("--config", c.config, "configuration JSON file");
    auto* uni = cmd->add_option("--uniform", c.uniform, "N equally spaced unit charges (circle, or Fibonacci sphere for d=3)");
    auto* w = cmd->add_option("--weights", c.weights, "weights a,b,c laid out as weighted arcs (d=2) or Fibonacci points")
                  ->delimiter(',');
    cfg->excludes(uni)->excludes(w);
    cmd->add_option("--dim", c.dim, "dimension for --uniform and --weights")->check(CLI::Range(2, 16));
  }
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--rel-tol", c.rel_tol, "relative tolerance of each energy");
  cmd->add_option("--max-evals", c.max_evals, "integrand evaluation cap per energy");
  cmd->add_option("--threads", c.threads, "worker threads (results do not depend on this)")->check(CLI::Range(1u, 256u));
  cmd->add_option("--out", c.out, "output file (default stdout)");
  cmd->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

chui::QuadratureSpec make_spec(const Common& c) {
  chui::QuadratureSpec s;
  s.rel_tolerance = c.rel_tol;
  s.seed = c.seed;
  s.max_evals = c.max_evals;
  s.threads = c.threads;
  s.validate();
  return s;
}

struct Input {
  chui::ChargeConfiguration config;
  std::optional<chui::ArcPartition> arcs;
  std::string source;
};

Input load_input(const Common& c) {
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw chui::InputError("cannot open " + c.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw chui::InputError(c.config + ": " + e.what());
    }
    return {chui::config_from_json(j), std::nullopt, c.config};
  }
  if (c.uniform > 0) {
    if (c.dim == 2) return {chui::uniform_circle_config(c.uniform), std::nullopt, "uniform"};
    chui::require(c.dim == 3, "--uniform supports d = 2 and 3");
    return {chui::fibonacci_sphere_config(c.uniform), std::nullopt, "fibonacci"};
  }
  if (!c.weights.empty()) {
    if (c.dim == 2) {
      auto [cfg, part] = chui::weighted_arc_config(c.weights);
      return {cfg, part, "weighted-arc"};
    }
    chui::require(c.dim == 3, "--weights supports d = 2 and 3");
    return {chui::fibonacci_sphere_config(c.weights.size()).with_weights(c.weights), std::nullopt, "fibonacci"};
  }
  throw chui::InputError("one of --config, --uniform or --weights is required");
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header(const json& meta) {
  std::string s = "# tool_version=" + meta["tool_version"].get<std::string>() +
                  " seed=" + std::to_string(meta["seed"].get<std::uint64_t>()) + " spec=" + meta["spec"].dump() +
                  " wall_clock=" + meta["wall_clock"].get<std::string>() + "\n";
  return s;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw chui::InputError("cannot write " + c.out);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --- commands --------------------------------------------------------------

int cmd_energy(const Common& c) {
  const auto in = load_input(c);
  const auto spec = make_spec(c);
  const auto r = chui::chui_energy(in.config, spec);
  const auto meta = chui::run_meta(c.seed, spec);
  if (c.format == "csv") {
    std::string s = csv_header(meta) + "dimension,charges,value,err,converged,evals\n";
    s += std::to_string(in.config.dimension()) + "," + std::to_string(in.config.size()) + "," + csv_number(r.value) +
         "," + csv_number(r.error) + "," + (r.converged ? "1" : "0") + "," + std::to_string(r.evals) + "\n";
    emit(c, s);
  } else {
    emit(c, dump({{"meta", meta}, {"source", in.source}, {"config", chui::to_json(in.config)},
                  {"result", chui::to_json(r)}}));
  }
  return r.converged ? kOk : kNoConvergence;
}

int cmd_bounds(const Common& c) {
  const auto in = load_input(c);
  const auto spec = make_spec(c);
  const auto rep = chui::make_bound_report(in.config, spec, in.arcs);
  const auto meta = chui::run_meta(c.seed, spec);
  const auto j = chui::to_json(rep);
  if (c.format == "csv") {
    static const char* cols[] = {"energy", "err", "A", "B", "G", "ratio_lower", "ratio_upper", "lower_newman",
                                 "lower_theorem11", "upper_budget", "lemma41_lhs", "cauchy_ratio"};
    std::string head, row;
    for (const char* k : cols) {
      head += std::string(head.empty() ? "" : ",") + k;
      row += std::string(row.empty() ? "" : ",") + (j[k].is_null() ? "" : csv_number(j[k].get<double>()));
    }
    for (const auto& [name, v] : j["verdicts"].items()) {
      head += "," + name;
      row += "," + v.get<std::string>();
    }
    emit(c, csv_header(meta) + head + "\n" + row + "\n");
  } else {
    auto out = j;
    out["meta"] = meta;
    out["source"] = in.source;
    if (in.arcs) out["arcs"] = chui::to_json(*in.arcs);
    emit(c, dump(out));
  }
  if (rep.any_violated()) return kViolation;
  return rep.energy.converged ? kOk : kNoConvergence;
}

int cmd_defect_sweep(const Common& c, int jmax) {
  const auto spec = make_spec(c);
  const auto rows = chui::defect_sweep(jmax, spec);
  const auto meta = chui::run_meta(c.seed, spec);
  if (c.format == "csv") {
    std::string s = csv_header(meta) + "j,l,defect,err,defect_over_l\n";
    for (const auto& r : rows) {
      s += std::to_string(r.j) + "," + csv_number(r.length) + "," + csv_number(r.defect) + "," +
           csv_number(r.error) + "," + csv_number(r.ratio) + "\n";
    }
    emit(c, s);
  } else {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"j", r.j}, {"l", r.length}, {"defect", r.defect}, {"err", r.error}, {"defect_over_l", r.ratio}});
    }
    emit(c, dump({{"meta", meta}, {"rows", arr}}));
  }
  return kOk;
}

int cmd_prop14_sweep(const Common& c, int jmin, int jmax) {
  const auto spec = make_spec(c);
  const auto rows = chui::prop14_sweep(jmin, jmax, spec);
  const auto meta = chui::run_meta(c.seed, spec);
  if (c.format == "csv") {
    std::string s = csv_header(meta) + "j,delta,value,err,ratio\n";
    for (const auto& r : rows) {
      s += std::to_string(r.j) + "," + csv_number(r.delta) + "," + csv_number(r.value) + "," + csv_number(r.error) +
           "," + csv_number(r.ratio) + "\n";
    }
    emit(c, s);
  } else {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"j", r.j}, {"delta", r.delta}, {"value", r.value}, {"err", r.error}, {"ratio", r.ratio}});
    }
    emit(c, dump({{"meta", meta}, {"rows", arr}}));
  }
  return kOk;
}

int cmd_lemma_suite(const Common& c, std::size_t trials) {
  const auto stats = chui::lemma_suite(trials, c.seed);
  const auto meta = chui::run_meta(c.seed, make_spec(c));
  bool failed = false;
  for (const auto& s : stats) failed = failed || s.failures > 0;
  if (c.format == "csv") {
    std::string s = csv_header(meta) + "name,trials,failures,worst\n";
    for (const auto& st : stats) {
      s += st.name + "," + std::to_string(st.trials) + "," + std::to_string(st.failures) + "," + csv_number(st.worst) +
           "\n";
    }
    emit(c, s);
  } else {
    json arr = json::array();
    for (const auto& st : stats) arr.push_back(chui::to_json(st));
    emit(c, dump({{"meta", meta}, {"suites", arr}}));
  }
  return failed ? kViolation : kOk;
}

int cmd_optimize(const Common& c, std::size_t budget, std::size_t restarts, const std::string& trace_path,
                 bool tol_given) {
  std::vector<double> w = c.weights;
  if (w.empty() && c.uniform > 0) w.assign(c.uniform, 1.0);
  if (w.empty() && !c.config.empty()) {
    const auto in = load_input(c);
    w.assign(in.config.weights().begin(), in.config.weights().end());
  }
  chui::require(!w.empty(), "optimize needs --weights, --uniform or --config");
  chui::OptimizerOptions opt;
  opt.seed = c.seed;
  opt.budget = budget;
  opt.restarts = restarts;
  auto spec = make_spec(c);
  // Without --rel-tol the optimizer picks its own, tighter default.
  if (tol_given) opt.energy_spec = spec;
  const auto method = c.dim == 2 ? chui::OptimizerMethod::nelder_mead_angles
                                 : chui::OptimizerMethod::projected_pattern_search;
  const auto trace = chui::minimize_positions(w, c.dim, method, opt);
  const auto meta = chui::run_meta(c.seed, tol_given ? spec : chui::QuadratureSpec{});
  if (!trace_path.empty()) {
    std::ofstream f(trace_path);
    if (!f) throw chui::InputError("cannot write " + trace_path);
    f << json{{"meta", meta}}.dump() << '\n' << chui::to_json_lines(trace);
  }
  if (c.format == "csv") {
    std::string s = csv_header(meta) + "iter,start,energy,err\n";
    for (const auto& it : trace.iterates) {
      s += std::to_string(it.iter) + "," + std::to_string(it.start) + "," + csv_number(it.energy) + "," +
           csv_number(it.error) + "\n";
    }
    emit(c, s);
  } else {
    auto j = chui::summary_json(trace);
    j["meta"] = meta;
    emit(c, dump(j));
  }
  return kOk;
}

int cmd_verify_all(const Common& c, const std::string& corpus, std::size_t lemma_trials, const std::vector<int>& only) {
  chui::SuiteOptions o;
  o.seed = c.seed;
  o.threads = c.threads;
  o.rel_tolerance = c.rel_tol;
  o.max_evals = c.max_evals;
  o.lemma_trials = lemma_trials;
  o.corpus_dir = corpus;
  const auto rep = chui::run_suite(o, only, [](const chui::CriterionResult& r) {
    std::fprintf(stderr, "[%s] %2d %-42s %8.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                 r.summary.c_str());
  });
  if (c.format == "csv") {
    std::string s = csv_header(rep.meta) + "id,name,pass,seconds\n";
    for (const auto& r : rep.criteria) {
      s += std::to_string(r.id) + "," + r.name + "," + (r.pass ? "1" : "0") + "," + csv_number(r.seconds) + "\n";
    }
    emit(c, s);
  } else {
    emit(c, dump(chui::to_json(rep)));
  }
  if (rep.any_violation || !rep.all_pass()) return kViolation;
  return rep.any_nonconvergence ? kNoConvergence : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean field strength of point charges in the unit ball"};
  app.set_version_flag("--version", std::string(chui::kVersion));
  app.require_subcommand(1);

  Common c;
  auto* energy = app.add_subcommand("energy", "energy of one configuration");
  add_common(energy, c, true);
  auto* bounds = app.add_subcommand("bounds", "energy with lower and upper bounds and verdicts");
  add_common(bounds, c, true);

  int jmax = 10, jmin = 2, pjmax = 10;
  auto* defect = app.add_subcommand("defect-sweep", "arc averaging defect for l = 2 pi 2^-j");
  add_common(defect, c, false);
  defect->add_option("--jmax", jmax, "last j")->check(CLI::Range(0, 30));

  auto* prop = app.add_subcommand("prop14-sweep", "two-pole L1 norm for delta = 2^-j");
  add_common(prop, c, false);
  prop->add_option("--jmin", jmin, "first j")->check(CLI::Range(0, 30));
  prop->add_option("--jmax", pjmax, "last j")->check(CLI::Range(0, 30));

  std::size_t trials = 100'000;
  auto* lemma = app.add_subcommand("lemma-suite", "randomized checks of the pointwise inequalities");
  add_common(lemma, c, false);
  lemma->add_option("--trials", trials, "trials per inequality")->check(CLI::PositiveNumber);

  std::size_t budget = 400, restarts = 2;
  std::string trace_path;
  auto* optimize = app.add_subcommand("optimize", "search for low-energy positions at fixed weights");
  add_common(optimize, c, true);
  optimize->add_option("--budget", budget, "energy evaluations")->check(CLI::Range(100ul, 1000000ul));
  optimize->add_option("--restarts", restarts, "random restarts");
  optimize->add_option("--trace", trace_path, "write the trace as JSON lines");

  std::string corpus = CHUI_CORPUS_DIR;
  std::vector<int> only;
  auto* verify = app.add_subcommand("verify-all", "acceptance suite and bundled corpus");
  add_common(verify, c, false);
  verify->add_option("--corpus", corpus, "directory of configuration JSON files (empty to skip)");
  verify->add_option("--lemma-trials", trials, "trials per inequality")->check(CLI::PositiveNumber);
  verify->add_option("--only", only, "criterion ids to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*energy) return cmd_energy(c);
    if (*bounds) return cmd_bounds(c);
    if (*defect) return cmd_defect_sweep(c, jmax);
    if (*prop) return cmd_prop14_sweep(c, jmin, pjmax);
    if (*lemma) return cmd_lemma_suite(c, trials);
    if (*optimize) return cmd_optimize(c, budget, restarts, trace_path, optimize->count("--rel-tol") > 0);
    if (*verify) return cmd_verify_all(c, corpus, trials, only);
  } catch (const chui::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kOk;
}
