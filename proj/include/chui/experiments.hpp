#pragma once

// Sweeps, randomized inequality suites and the acceptance runner behind
// `chui verify-all`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "chui/bounds.hpp"
#include "chui/config.hpp"
#include "chui/optimizer.hpp"
#include "chui/quadrature.hpp"
#include "chui/rng.hpp"
#include "chui/version.hpp"

namespace chui {

// ---------------------------------------------------------------------------
// Sweeps.

struct DefectRow {
  int j = 0;
  double length = 0.0;
  double defect = 0.0;
  double error = 0.0;
  double ratio = 0.0;  // defect / length
};

/// l = 2 pi 2^{-j}, j = 0..jmax.
inline std::vector<DefectRow> defect_sweep(int jmax, const QuadratureSpec& spec = {}) {
  require(jmax >= 0 && jmax <= 30, "defect_sweep: j range must lie in [0, 30]");
  std::vector<DefectRow> rows;
  for (int j = 0; j <= jmax; ++j) {
    const double l = 2.0 * kPi * std::ldexp(1.0, -j);
    const auto r = l1_defect(l, spec).total;
    rows.push_back({j, l, r.value, r.error, r.value / l});
  }
  return rows;
}

struct Prop14Row {
  int j = 0;
  double delta = 0.0;
  double value = 0.0;
  double error = 0.0;
  double ratio = 0.0;  // value / (delta + delta ln(1/delta))
};

/// a = 1, b = exp(i delta), delta = 2^{-j}.
inline std::vector<Prop14Row> prop14_sweep(int jmin, int jmax, const QuadratureSpec& spec = {}) {
  require(jmin >= 0 && jmin <= jmax && jmax <= 30, "prop14_sweep: bad j range");
  std::vector<Prop14Row> rows;
  for (int j = jmin; j <= jmax; ++j) {
    const double delta = std::ldexp(1.0, -j);
    const auto r = two_pole_l1(1.0, std::polar(1.0, delta), spec);
    rows.push_back({j, delta, r.value, r.error, r.value / (delta + delta * std::log(1.0 / delta))});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Randomized inequality suites.

namespace detail {

inline std::vector<double> random_unit(RngStream& rng, int d) {
  std::vector<double> v(static_cast<std::size_t>(d));
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& c : v) {
      c = rng.normal();
      n2 += c * c;
    }
  } while (n2 < 1e-20);
  const double n = std::sqrt(n2);
  for (double& c : v) c /= n;
  return v;
}

/// Uniform in the ball of radius r around `centre`.
inline std::vector<double> random_in_ball(RngStream& rng, std::span<const double> centre, double r) {
  const int d = static_cast<int>(centre.size());
  auto u = random_unit(rng, d);
  const double s = r * std::pow(rng.uniform(), 1.0 / d);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = centre[i] + s * u[i];
  return u;
}

inline std::vector<double> tangent_centre(std::span<const double> y, double r) {
  std::vector<double> c(y.begin(), y.end());
  for (double& v : c) v *= 1.0 - r;
  return c;
}

inline std::vector<double> log_uniform_weights(RngStream& rng, std::size_t n, double lo, double hi) {
  std::vector<double> w(n);
  for (double& a : w) a = std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
  return w;
}

}  // namespace detail

struct PropertyStats {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  /// Smallest gap (or largest ratio excess for lemma3) seen.
  double worst = 0.0;
};

inline nlohmann::json to_json(const PropertyStats& s) {
  return {{"name", s.name}, {"trials", s.trials}, {"failures", s.failures}, {"worst", s.worst}};
}

/// Runs each inequality `trials` times, alternating d = 2 and d = 3.
inline std::vector<PropertyStats> lemma_suite(std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, "lemma_suite: trials must be positive");
  const CounterRng root(seed, 0x6c656d);
  constexpr double tol = 1e-12;

  PropertyStats l1{"lemma1_gap", 0, 0, std::numeric_limits<double>::infinity()};
  RngStream r1(root.split(1));
  while (l1.trials < trials) {
    const int d = l1.trials % 2 ? 3 : 2;
    const auto y = detail::random_unit(r1, d);
    const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
    auto x = detail::random_in_ball(r1, origin, 1.0);
    if (detail::distance(x, y) < 1e-9) continue;
    const double g = lemma1_gap(y, x, d);
    ++l1.trials;
    l1.worst = std::min(l1.worst, g);
    if (g < -tol) ++l1.failures;
  }

  PropertyStats l2{"lemma2_gap", 0, 0, std::numeric_limits<double>::infinity()};
  RngStream r2(root.split(2));
  while (l2.trials < trials) {
    const int d = l2.trials % 2 ? 3 : 2;
    const auto y = detail::random_unit(r2, d);
    const double r = r2.uniform(1e-6, 0.5 - 1e-9);
    auto x = detail::random_in_ball(r2, detail::tangent_centre(y, r), r);
    if (detail::distance(x, y) < 1e-9 || detail::dot(x, x) >= 1.0) continue;
    const double g = lemma2_gap(y, x, r, d);
    ++l2.trials;
    l2.worst = std::min(l2.worst, g);
    if (g < -tol) ++l2.failures;
  }

  PropertyStats l3{"lemma3_ratio", 0, 0, -std::numeric_limits<double>::infinity()};
  RngStream r3(root.split(3));
  while (l3.trials < trials) {
    const int d = l3.trials % 2 ? 3 : 2;
    const auto y1 = detail::random_unit(r3, d);
    const double rad1 = r3.uniform(1e-3, 0.5 - 1e-9);
    // Put y2 near y1 half of the time so B1 and B2 overlap often.
    std::vector<double> y2;
    if (r3.uniform() < 0.5) {
      y2 = detail::random_unit(r3, d);
    } else {
      auto p = detail::random_in_ball(r3, y1, 0.5);
      const double n = std::sqrt(detail::dot(p, p));
      for (double& c : p) c /= n;
      y2 = p;
    }
    const double rad2 = r3.uniform(1e-3, 0.5 - 1e-9);
    const auto x = detail::random_in_ball(r3, detail::tangent_centre(y1, rad1), rad1);
    if (detail::tangent_ball_offset(y1, rad1, x) >= rad1 || detail::tangent_ball_offset(y2, rad2, x) < rad2 ||
        detail::distance(x, y2) < 1e-9) {
      continue;
    }
    const double v = lemma3_ratio(y1, rad1, y2, rad2, x);
    ++l3.trials;
    l3.worst = std::max(l3.worst, v);
    if (v > tol) ++l3.failures;
  }

  PropertyStats es{"estar_check", 0, 0, std::numeric_limits<double>::infinity()};
  RngStream r4(root.split(4));
  const std::size_t per_config = 100;
  std::size_t cfg_index = 0;
  while (es.trials < trials) {
    const int d = cfg_index % 2 ? 3 : 2;
    const std::size_t n = 1 + static_cast<std::size_t>(r4.uniform() * 16.0);
    const auto w = detail::log_uniform_weights(r4, n, 0.1, 10.0);
    const auto cfg = random_config(n, d, root.split(1000 + cfg_index).bits(0), false).with_weights(w);
    const ProofGeometry geo(cfg);
    ++cfg_index;
    for (std::size_t t = 0; t < per_config && es.trials < trials; ++t) {
      const auto k = static_cast<std::size_t>(r4.uniform() * static_cast<double>(n)) % n;
      const auto x = detail::random_in_ball(r4, detail::tangent_centre(cfg.position(k), geo.radius(k)), geo.radius(k));
      if (!geo.contains(k, x)) continue;
      bool near_pole = false;
      for (std::size_t j = 0; j < n; ++j) near_pole = near_pole || detail::distance(cfg.position(j), x) < 1e-9;
      if (near_pole) continue;
      const auto c = estar_check(geo, x);
      ++es.trials;
      es.worst = std::min({es.worst, c.estar_margin, c.domination_margin});
      if (c.verdict != Verdict::holds) ++es.failures;
    }
  }
  return {l1, l2, l3, es};
}

// ---------------------------------------------------------------------------
// Acceptance suite.

struct SuiteOptions {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double rel_tolerance = 1e-3;
  std::size_t max_evals = 50'000'000;
  std::size_t lemma_trials = 100'000;
  /// Directory of configuration JSON files checked in addition to the
  /// criteria; empty to skip.
  std::string corpus_dir;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string summary;
  double seconds = 0.0;
  double time_limit = 0.0;
  nlohmann::json data;
};

struct SuiteReport {
  std::vector<CriterionResult> criteria;
  nlohmann::json corpus = nlohmann::json::array();
  bool any_violation = false;
  bool any_nonconvergence = false;
  nlohmann::json meta;

  bool all_pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
  }
};

namespace detail {

inline std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

inline QuadratureSpec suite_spec(const SuiteOptions& o) {
  QuadratureSpec s;
  s.rel_tolerance = o.rel_tolerance;
  s.seed = o.seed;
  s.max_evals = o.max_evals;
  s.threads = o.threads;
  return s;
}

inline nlohmann::json energy_json(const QuadratureResult& r) {
  return {{"value", r.value}, {"err", r.error}, {"converged", r.converged}};
}

struct CorpusItem {
  int dimension = 2;
  std::vector<double> weights;
  std::uint64_t position_seed = 0;
};

/// Positive-weight corpus: alternating d = 2, 3; n in [1, 16]; weights
/// log-uniform in [0.1, 10].
inline std::vector<CorpusItem> weight_corpus(std::uint64_t seed, std::size_t count) {
  const CounterRng root(seed, 0x636f7270);
  std::vector<CorpusItem> out;
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng(root.split(i));
    CorpusItem item;
    item.dimension = i % 2 ? 3 : 2;
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 16.0);
    item.weights = log_uniform_weights(rng, n, 0.1, 10.0);
    item.position_seed = root.split(i).bits(1u << 20);
    out.push_back(std::move(item));
  }
  return out;
}

using Clock = std::chrono::steady_clock;

template <class Body>
CriterionResult timed(int id, std::string name, double limit, Body&& body) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  r.time_limit = limit;
  const auto t0 = Clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (r.seconds > limit) {
    r.pass = false;
    r.summary += " (time limit exceeded)";
  }
  return r;
}

}  // namespace detail

inline CriterionResult criterion_single_charge(const SuiteOptions& o) {
  return detail::timed(1, "single-charge oracles", 20.0, [&](CriterionResult& r) {
    const auto spec = detail::suite_spec(o);
    const auto e2 = chui_energy(ChargeConfiguration(2, {1.0, 0.0}, {1.0}), spec);
    const auto e3 = chui_energy(ChargeConfiguration(3, {0.0, 0.0, 1.0}, {1.0}), spec);
    const double rel2 = std::abs(e2.value - 4.0) / 4.0;
    const double rel3 = std::abs(e3.value - 2.0 * kPi) / (2.0 * kPi);
    r.pass = rel2 <= 1e-2 && rel3 <= 1e-2;
    r.summary = "d=2 " + detail::fmt("%.6f", e2.value) + " (rel " + detail::fmt("%.1e", rel2) + "), d=3 " +
                detail::fmt("%.6f", e3.value) + " (rel " + detail::fmt("%.1e", rel3) + ")";
    r.data = {{"d2", detail::energy_json(e2)}, {"d3", detail::energy_json(e3)}};
  });
}

inline CriterionResult criterion_newman(const SuiteOptions& o) {
  return detail::timed(2, "uniform circle lower bound pi/18", 120.0, [&](CriterionResult& r) {
    const auto spec = detail::suite_spec(o);
    r.pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    r.data = nlohmann::json::array();
    for (std::size_t n : {1, 2, 4, 8, 16, 32}) {
      const auto e = chui_energy(uniform_circle_config(n), spec);
      const double margin = e.value + 3.0 * e.error - BoundConstants::newman_c;
      worst_margin = std::min(worst_margin, margin);
      r.pass = r.pass && margin >= 0.0 && e.converged;
      r.data.push_back({{"n", n}, {"energy", detail::energy_json(e)}});
    }
    r.summary = "min(energy + 3 err - pi/18) = " + detail::fmt("%.4f", worst_margin);
  });
}

inline CriterionResult criterion_theorem11(const SuiteOptions& o) {
  return detail::timed(3, "random corpus lower bound", 600.0, [&](CriterionResult& r) {
    const auto spec = detail::suite_spec(o);
    std::size_t violations = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
    r.data = nlohmann::json::array();
    for (const auto& item : detail::weight_corpus(o.seed, 50)) {
      const auto cfg =
          random_config(item.weights.size(), item.dimension, item.position_seed, false).with_weights(item.weights);
      const auto e = chui_energy(cfg, spec);
      const double bound = lower_bound_rhs(cfg.weights(), cfg.dimension(), BoundConstants::proof_c(cfg.dimension()));
      if (e.value + 3.0 * e.error < bound || !e.converged) ++violations;
      min_ratio = std::min(min_ratio, e.value / bound);
      r.data.push_back({{"d", cfg.dimension()}, {"n", cfg.size()}, {"energy", detail::energy_json(e)},
                        {"bound", bound}});
    }
    r.pass = violations == 0;
    r.summary = std::to_string(violations) + " violations over 50, min energy/bound = " + detail::fmt("%.1f", min_ratio);
  });
}

inline CriterionResult criterion_order_sharpness(const SuiteOptions& o) {
  return detail::timed(4, "weighted-arc upper bound and order", 900.0, [&](CriterionResult& r) {
    const auto spec = detail::suite_spec(o);
    std::vector<std::vector<double>> weight_sets;
    for (const auto& item : detail::weight_corpus(o.seed, 50)) weight_sets.push_back(item.weights);
    RngStream extra(CounterRng(o.seed, 0x6172637a));
    for (std::size_t n : {2, 4, 8, 16, 24, 32, 48, 64}) {
      weight_sets.emplace_back(n, 1.0);
      weight_sets.push_back(detail::log_uniform_weights(extra, n, 0.1, 10.0));
    }

    // Defect/length on the dyadic grid, extended by every arc length used.
    double max_ratio_defect = 0.0;
    for (const auto& row : defect_sweep(10, spec)) max_ratio_defect = std::max(max_ratio_defect, row.ratio);

    std::size_t budget_violations = 0;
    double max_scaled = 0.0, max_scaled_err = 0.0;
    // For positive weights ||nu|| = A, so energy * A / B is also the ratio
    // whose infimum estimates the Cauchy-transform constant.
    double min_scaled = std::numeric_limits<double>::infinity();
    std::size_t n_min = 1000, n_max = 0;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& w : weight_sets) {
      if (w.size() < 2) continue;
      n_min = std::min(n_min, w.size());
      n_max = std::max(n_max, w.size());
      auto [cfg, part] = weighted_arc_config(w);
      const auto e = chui_energy(cfg, spec);
      const auto budget = reduction_budget(part, w, spec);
      for (const auto& [l, def] : budget.defects) max_ratio_defect = std::max(max_ratio_defect, def / l);
      const auto st = weight_stats(w, 2);
      const double scaled = e.value * st.A / st.B;
      min_scaled = std::min(min_scaled, scaled);
      if (scaled > max_scaled) {
        max_scaled = scaled;
        max_scaled_err = e.error * st.A / st.B;
      }
      if (e.value > budget.value + 3.0 * (e.error + budget.error) || !e.converged) ++budget_violations;
      items.push_back({{"n", w.size()}, {"energy", detail::energy_json(e)}, {"budget", budget.value},
                       {"budget_err", budget.error}, {"energy_A_over_B", scaled}});
    }
    const double cap = 2.0 * kPi * max_ratio_defect;
    r.pass = budget_violations == 0 && max_scaled <= cap + 3.0 * max_scaled_err;
    r.summary = "max energy*A/B = " + detail::fmt("%.4f", max_scaled) + " <= " + detail::fmt("%.4f", cap) +
                ", budget violations " + std::to_string(budget_violations) + ", n in [" + std::to_string(n_min) +
                ", " + std::to_string(n_max) + "], inf " + detail::fmt("%.4f", min_scaled);
    r.data = {{"items", items},
              {"cap", cap},
              {"max_energy_A_over_B", max_scaled},
              {"min_energy_A_over_B", min_scaled}};
  });
}

inline CriterionResult criterion_defect_sweep(const SuiteOptions& o) {
  return detail::timed(5, "arc defect sweep", 300.0, [&](CriterionResult& r) {
    const auto rows = defect_sweep(10, detail::suite_spec(o));
    std::vector<double> ratios;
    bool finite = true;
    for (const auto& row : rows) {
      ratios.push_back(row.ratio);
      finite = finite && std::isfinite(row.ratio);
    }
    const double anchor = 2.0 / kPi;  // defect(2 pi) = 4
    const double anchor_rel = std::abs(ratios.front() - anchor) / anchor;
    auto sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double max_factor = sorted.back() / anchor;
    const double tail = ratios.back() / median;
    r.pass = finite && anchor_rel <= 1e-2 && max_factor <= 10.0 && tail <= 10.0 && tail >= 0.1;
    r.summary = "anchor " + detail::fmt("%.5f", ratios.front()) + ", max/anchor " + detail::fmt("%.3f", max_factor) +
                ", j=10/median " + detail::fmt("%.3f", tail);
    r.data = nlohmann::json::array();
    for (const auto& row : rows) {
      r.data.push_back({{"j", row.j}, {"l", row.length}, {"defect", row.defect}, {"err", row.error},
                        {"ratio", row.ratio}});
    }
  });
}

inline CriterionResult criterion_prop14(const SuiteOptions& o) {
  return detail::timed(6, "two-pole L1 sweep", 300.0, [&](CriterionResult& r) {
    const auto rows = prop14_sweep(2, 10, detail::suite_spec(o));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    r.data = nlohmann::json::array();
    for (const auto& row : rows) {
      lo = std::min(lo, row.ratio);
      hi = std::max(hi, row.ratio);
      r.data.push_back({{"j", row.j}, {"delta", row.delta}, {"value", row.value}, {"err", row.error},
                        {"ratio", row.ratio}});
    }
    r.pass = std::isfinite(hi) && lo > 0.0 && hi / lo <= 10.0;
    r.summary = "ratio in [" + detail::fmt("%.4f", lo) + ", " + detail::fmt("%.4f", hi) + "], max/min " +
                detail::fmt("%.3f", hi / lo);
  });
}

inline CriterionResult criterion_lemma41(const SuiteOptions& o) {
  return detail::timed(7, "interior distance lower bound", 300.0, [&](CriterionResult& r) {
    const auto spec = detail::suite_spec(o);
    const auto centre = chui_energy(ChargeConfiguration(2, {0.0, 0.0}, {1.0}), spec);
    const double rel = std::abs(centre.value - 2.0 * kPi) / (2.0 * kPi);
    std::size_t violations = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    const CounterRng root(o.seed, 0x6c3431);
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < 20; ++i) {
      RngStream rng(root.split(i));
      const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 16.0);
      const auto cfg = random_config(n, 2, root.split(i).bits(1u << 20), true);
      const auto e = chui_energy(cfg, spec);
      const double lhs = *lemma41_lhs(cfg);
      if (lhs > e.value + 3.0 * e.error || !e.converged) ++violations;
      min_gap = std::min(min_gap, e.value - lhs);
      items.push_back({{"n", n}, {"energy", detail::energy_json(e)}, {"lhs", lhs}});
    }
    r.pass = rel <= 1e-2 && violations == 0;
    r.summary = "centre pole " + detail::fmt("%.6f", centre.value) + " (rel " + detail::fmt("%.1e", rel) + "), " +
                std::to_string(violations) + " violations over 20, min(energy - lhs) = " +
                detail::fmt("%.3f", min_gap);
    r.data = {{"centre", detail::energy_json(centre)}, {"items", items}};
  });
}

inline CriterionResult criterion_lemma_suite(const SuiteOptions& o) {
  return detail::timed(8, "pointwise inequality suites", 60.0, [&](CriterionResult& r) {
    const auto stats = lemma_suite(o.lemma_trials, o.seed);
    r.pass = true;
    r.data = nlohmann::json::array();
    for (const auto& s : stats) {
      r.pass = r.pass && s.failures == 0 && s.trials >= o.lemma_trials;
      r.data.push_back(to_json(s));
      r.summary += s.name + " " + std::to_string(s.failures) + "/" + std::to_string(s.trials) + "  ";
    }
    r.summary += "failures";
  });
}

inline CriterionResult criterion_optimizer(const SuiteOptions& o) {
  return detail::timed(9, "optimizer and local-minimum certificates", 600.0, [&](CriterionResult& r) {
    OptimizerOptions opt;
    opt.seed = o.seed;
    opt.budget = 300;
    opt.restarts = 2;
    opt.start = angles_config(std::vector<double>{0.0, kPi - 0.5}, {1.0, 1.0});
    QuadratureSpec fine = detail::suite_spec(o);
    fine.rel_tolerance = 1e-6;
    opt.energy_spec = fine;
    const std::vector<double> w{1.0, 1.0};
    const auto trace = minimize_positions(w, 2, OptimizerMethod::nelder_mead_angles, opt);
    const auto ang = trace_coordinates(trace.best->config);
    const double gap = ang.size() == 2 ? std::abs(detail::wrap_angle(ang[1] - ang[0])) : 0.0;

    // Brute-force grid over the gap.
    double grid_best = 0.0, grid_energy = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) {
      const double g = 0.5 * kPi + kPi * i / 400.0;
      const auto e = chui_energy(angles_config(std::vector<double>{0.0, g}, {1.0, 1.0}), fine);
      if (e.value < grid_energy) {
        grid_energy = e.value;
        grid_best = g;
      }
    }
    const bool opt_ok = std::abs(gap - kPi) <= 0.05 && std::abs(grid_best - kPi) <= 0.05;

    bool cert_ok = true;
    nlohmann::json certs = nlohmann::json::array();
    for (std::size_t n : {2, 3, 4}) {
      const auto c = local_min_certificate(uniform_circle_config(n), 0.05, fine);
      cert_ok = cert_ok && c.stationary;
      certs.push_back({{"n", n}, {"certificate", to_json(c)}});
    }
    r.pass = opt_ok && cert_ok;
    r.summary = "gap " + detail::fmt("%.4f", gap) + ", grid argmin " + detail::fmt("%.4f", grid_best) +
                ", certificates " + (cert_ok ? "stationary" : "not stationary");
    r.data = {{"trace", summary_json(trace)}, {"gap", gap}, {"grid_argmin", grid_best}, {"certificates", certs}};
  });
}

/// Reruns cheap computations with a different worker count and compares.
inline CriterionResult criterion_thread_invariance(const SuiteOptions& o) {
  return detail::timed(10, "thread-count invariance", 120.0, [&](CriterionResult& r) {
    auto a = o, b = o;
    a.threads = 1;
    b.threads = 4;
    std::vector<ChargeConfiguration> cfgs{uniform_circle_config(5), fibonacci_sphere_config(6),
                                          ChargeConfiguration(4, {0.0, 0.0, 0.0, 1.0}, {1.0})};
    std::size_t mismatches = 0;
    for (const auto& c : cfgs) {
      const auto ea = chui_energy(c, detail::suite_spec(a));
      const auto eb = chui_energy(c, detail::suite_spec(b));
      if (ea.value != eb.value || ea.error != eb.error) ++mismatches;
    }
    r.pass = mismatches == 0;
    r.summary = std::to_string(mismatches) + " mismatches between 1 and 4 workers";
    r.data = {{"mismatches", mismatches}};
  });
}

inline std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline nlohmann::json run_meta(std::uint64_t seed, const QuadratureSpec& spec) {
  return {{"tool_version", kVersion}, {"seed", seed}, {"spec", to_json(spec)}, {"wall_clock", utc_timestamp()}};
}

/// Bound reports for every *.json configuration in `dir`, sorted by name.
inline nlohmann::json corpus_reports(const std::string& dir, const QuadratureSpec& spec, bool& violated,
                                     bool& nonconverged) {
  namespace fs = std::filesystem;
  nlohmann::json out = nlohmann::json::array();
  if (dir.empty()) return out;
  require(fs::is_directory(dir), "corpus directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(f.filename().string() + ": " + e.what());
    }
    const auto cfg = config_from_json(j);
    const auto rep = make_bound_report(cfg, spec);
    violated = violated || rep.any_violated();
    nonconverged = nonconverged || !rep.energy.converged;
    auto rj = to_json(rep);
    rj["file"] = f.filename().string();
    out.push_back(std::move(rj));
  }
  return out;
}

using CriterionFn = CriterionResult (*)(const SuiteOptions&);

inline const std::vector<CriterionFn>& criteria() {
  static const std::vector<CriterionFn> all{criterion_single_charge, criterion_newman,      criterion_theorem11,
                                            criterion_order_sharpness, criterion_defect_sweep, criterion_prop14,
                                            criterion_lemma41,       criterion_lemma_suite, criterion_optimizer,
                                            criterion_thread_invariance};
  return all;
}

/// Runs criteria (all when `only` is empty) and the corpus reports.
inline SuiteReport run_suite(const SuiteOptions& o, const std::vector<int>& only = {},
                             const std::function<void(const CriterionResult&)>& progress = {}) {
  SuiteReport rep;
  const auto spec = detail::suite_spec(o);
  rep.meta = run_meta(o.seed, spec);
  rep.meta["lemma_trials"] = o.lemma_trials;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    rep.criteria.push_back(criteria()[i](o));
    if (progress) progress(rep.criteria.back());
  }
  rep.corpus = corpus_reports(o.corpus_dir, spec, rep.any_violation, rep.any_nonconvergence);
  return rep;
}

inline nlohmann::json to_json(const SuiteReport& r) {
  nlohmann::json crit = nlohmann::json::array();
  for (const auto& c : r.criteria) {
    crit.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"summary", c.summary},
                    {"seconds", c.seconds}, {"time_limit", c.time_limit}, {"data", c.data}});
  }
  return {{"meta", r.meta}, {"criteria", crit}, {"corpus", r.corpus}, {"all_pass", r.all_pass()},
          {"violation", r.any_violation}};
}

/// Copy of a report without wall-clock fields and the worker count, for
/// comparing runs.
inline nlohmann::json comparable_view(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("wall_clock");
    j.erase("seconds");
    j.erase("threads");
    for (auto& [k, v] : j.items()) v = comparable_view(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = comparable_view(v);
  }
  return j;
}

}  // namespace chui
