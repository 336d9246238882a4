#pragma once

// Derivative-free search for charge positions of low energy at fixed weights.
//
// d = 2: Nelder-Mead on the angles, first angle pinned.
// d = 3: pattern search on spherical coordinates after rotating the first
//        point to the north pole; that point and the azimuth of the second
//        are pinned.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chui/config.hpp"
#include "chui/error.hpp"
#include "chui/quadrature.hpp"
#include "chui/rng.hpp"

namespace chui {

enum class OptimizerMethod { nelder_mead_angles, projected_pattern_search };

inline std::string to_string(OptimizerMethod m) {
  return m == OptimizerMethod::nelder_mead_angles ? "nelder-mead-angles" : "projected-pattern-search";
}

struct OptimizerOptions {
  std::uint64_t seed = 1;
  std::size_t budget = 400;  // energy evaluations over all starts
  std::size_t restarts = 2;  // random starts after the weighted-arc start
  double initial_step = 0.2;  // rad
  double step_tolerance = 1e-4;  // rad
  /// Charges closer than this (chordal distance) are merged.
  double collision_tolerance = 1e-4;
  /// Unset: 1e-6 for d = 2, 1e-3 for d = 3.
  std::optional<QuadratureSpec> energy_spec;
  /// Replaces the weighted-arc (d = 2) or Fibonacci (d = 3) first start.
  std::optional<ChargeConfiguration> start;
};

struct Iterate {
  std::size_t iter = 0;
  std::size_t start = 0;
  ChargeConfiguration config;
  double energy = 0.0;
  double error = 0.0;
};

struct CollisionEvent {
  std::size_t iter = 0;
  std::size_t start = 0;
  std::size_t first = 0;
  std::size_t second = 0;
  double merged_weight = 0.0;
};

struct OptimizationTrace {
  std::vector<Iterate> iterates;
  std::vector<CollisionEvent> collisions;
  std::optional<Iterate> best;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t evaluations = 0;
  std::string stop_reason;
};

namespace detail {

inline double wrap_angle(double t) {
  t = std::remainder(t, 2.0 * kPi);
  return t >= kPi ? t - 2.0 * kPi : t;
}

/// First pair of charges closer than `tol`.
inline std::optional<std::pair<std::size_t, std::size_t>> find_collision(const ChargeConfiguration& cfg, double tol) {
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      if (distance(cfg.position(i), cfg.position(j)) < tol) return std::pair{i, j};
    }
  }
  return std::nullopt;
}

struct CollisionStop {};

struct Evaluator {
  QuadratureSpec spec;
  std::size_t used = 0;

  QuadratureResult operator()(const ChargeConfiguration& cfg) {
    ++used;
    return chui_energy(cfg, spec);
  }
};

// Nelder-Mead with standard coefficients.
struct SimplexResult {
  std::vector<double> x;
  double fx = 0.0;
  std::string stop;
};

template <class F, class OnBest>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, double step, double xtol, std::size_t max_evals,
                          std::size_t& evals, OnBest&& on_best) {
  const std::size_t m = x0.size();
  std::vector<std::vector<double>> pts{x0};
  for (std::size_t i = 0; i < m; ++i) {
    auto p = x0;
    p[i] += step;
    pts.push_back(std::move(p));
  }
  std::vector<double> fv;
  const std::size_t start = evals;
  auto spent = [&] { return evals - start; };
  for (const auto& p : pts) {
    fv.push_back(f(p));
    ++evals;
  }
  std::vector<std::size_t> order(m + 1);
  auto sort = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
  };
  auto size = [&] {
    double s = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
      for (std::size_t c = 0; c < m; ++c) s = std::max(s, std::abs(pts[order[i]][c] - pts[order[0]][c]));
    }
    return s;
  };
  sort();
  on_best(pts[order[0]], fv[order[0]]);
  std::string stop = "budget";
  while (spent() + 2 <= max_evals) {
    if (size() < xtol) {
      stop = "converged";
      break;
    }
    const std::size_t worst = order[m];
    std::vector<double> centroid(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t c = 0; c < m; ++c) centroid[c] += pts[order[i]][c] / static_cast<double>(m);
    }
    auto along = [&](double t) {
      std::vector<double> p(m);
      for (std::size_t c = 0; c < m; ++c) p[c] = centroid[c] + t * (pts[worst][c] - centroid[c]);
      return p;
    };
    auto xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[order[0]]) {
      auto xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        pts[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[order[m - 1]]) {
      pts[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      auto xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[worst])) {
        pts[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        if (spent() + m > max_evals) break;
        const auto best = pts[order[0]];
        for (std::size_t i = 1; i <= m; ++i) {
          auto& p = pts[order[i]];
          for (std::size_t c = 0; c < m; ++c) p[c] = best[c] + 0.5 * (p[c] - best[c]);
          fv[order[i]] = f(p);
          ++evals;
        }
      }
    }
    sort();
    on_best(pts[order[0]], fv[order[0]]);
  }
  return {pts[order[0]], fv[order[0]], stop};
}

// Compass search: +-step along each coordinate, halve the step on failure.
template <class F, class OnBest>
SimplexResult pattern_search(F&& f, std::vector<double> x, double step, double xtol, std::size_t max_evals,
                             std::size_t& evals, OnBest&& on_best) {
  const std::size_t start = evals;
  double fx = f(x);
  ++evals;
  on_best(x, fx);
  while (step >= xtol) {
    bool improved = false;
    for (std::size_t c = 0; c < x.size(); ++c) {
      for (double sgn : {1.0, -1.0}) {
        if (evals - start >= max_evals) return {x, fx, "budget"};
        auto y = x;
        y[c] += sgn * step;
        const double fy = f(y);
        ++evals;
        if (fy < fx) {
          x = std::move(y);
          fx = fy;
          improved = true;
          on_best(x, fx);
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {x, fx, "converged"};
}

// Unit vector from polar angle and azimuth.
inline std::array<double, 3> sphere_point(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Rotation taking `p` to the north pole, applied to all points.
inline std::vector<double> rotate_to_north(std::span<const double> pts, std::span<const double> p) {
  const std::array<double, 3> n{0.0, 0.0, 1.0};
  const std::array<double, 3> axis{p[1] * n[2] - p[2] * n[1], p[2] * n[0] - p[0] * n[2], p[0] * n[1] - p[1] * n[0]};
  const double s = std::hypot(axis[0], axis[1], axis[2]);
  const double c = p[2];
  std::vector<double> out(pts.begin(), pts.end());
  if (s < 1e-15) {
    if (c < 0) {
      for (std::size_t i = 0; i < out.size(); i += 3) {
        out[i + 1] = -out[i + 1];
        out[i + 2] = -out[i + 2];
      }
    }
    return out;
  }
  const std::array<double, 3> k{axis[0] / s, axis[1] / s, axis[2] / s};
  for (std::size_t i = 0; i < out.size(); i += 3) {
    const std::array<double, 3> v{pts[i], pts[i + 1], pts[i + 2]};
    const double kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    const std::array<double, 3> kxv{k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
    for (int a = 0; a < 3; ++a) out[i + a] = v[a] * c + kxv[a] * s + k[a] * kv * (1.0 - c);
  }
  return out;
}

}  // namespace detail

/// Coordinates of a configuration as they appear in traces: angles for d = 2,
/// flattened points for d = 3.
inline std::vector<double> trace_coordinates(const ChargeConfiguration& cfg) {
  if (cfg.dimension() != 2) return {cfg.positions().begin(), cfg.positions().end()};
  std::vector<double> out;
  for (std::size_t k = 0; k < cfg.size(); ++k) out.push_back(std::arg(cfg.complex_position(k)));
  return out;
}

inline OptimizationTrace minimize_positions(std::span<const double> weights, int d, OptimizerMethod method,
                                            const OptimizerOptions& opt = {}) {
  require(!weights.empty(), "minimize_positions: no weights");
  for (double a : weights) require(a > 0.0 && std::isfinite(a), "minimize_positions: weights must be positive");
  require(opt.budget >= 100, "minimize_positions: budget must be at least 100 evaluations");
  require((d == 2 && method == OptimizerMethod::nelder_mead_angles) ||
              (d == 3 && method == OptimizerMethod::projected_pattern_search),
          "minimize_positions: nelder-mead-angles needs d = 2, projected-pattern-search needs d = 3");
  require(!opt.start || (opt.start->dimension() == d && opt.start->size() == weights.size() && opt.start->all_boundary()),
          "minimize_positions: start must place every charge on the sphere");

  detail::Evaluator eval;
  if (opt.energy_spec) {
    eval.spec = *opt.energy_spec;
  } else {
    eval.spec.rel_tolerance = d == 2 ? 1e-6 : 1e-3;
  }
  eval.spec.seed = opt.seed;
  eval.spec.validate();

  OptimizationTrace trace;
  trace.method = to_string(method);
  trace.seed = opt.seed;
  const CounterRng rng(opt.seed, 0x6f7074);

  auto consider_best = [&](const Iterate& it) {
    if (!trace.best || it.energy < trace.best->energy) trace.best = it;
  };

  std::vector<std::string> stops;
  const std::size_t starts = 1 + opt.restarts;
  for (std::size_t s = 0; s < starts && eval.used < opt.budget; ++s) {
    const std::size_t share = std::max<std::size_t>(
        std::min<std::size_t>(opt.budget - eval.used, 100), (opt.budget - eval.used) / (starts - s));
    std::vector<double> w(weights.begin(), weights.end());

    // Starting positions.
    ChargeConfiguration cfg = [&] {
      if (s == 0 && opt.start) return opt.start->with_weights(w);
      if (s == 0) {
        return d == 2 ? weighted_arc_config(w).first : fibonacci_sphere_config(w.size()).with_weights(w);
      }
      return random_config(w.size(), d, rng.split(s).bits(0), false).with_weights(w);
    }();

    std::size_t iter = 0;
    std::size_t local_budget = share;
    while (true) {
      const std::size_t n = cfg.size();
      std::vector<double> x;
      std::function<ChargeConfiguration(const std::vector<double>&)> build;
      if (d == 2) {
        std::vector<double> ang = trace_coordinates(cfg);
        const double pinned = ang[0];
        x.assign(ang.begin() + 1, ang.end());
        build = [pinned, w](const std::vector<double>& v) {
          std::vector<double> a{pinned};
          for (double t : v) a.push_back(detail::wrap_angle(t));
          return angles_config(a, w);
        };
      } else {
        auto pts = detail::rotate_to_north(cfg.positions(), cfg.position(0));
        std::vector<double> ang;
        for (std::size_t k = 1; k < n; ++k) {
          const double z = std::clamp(pts[3 * k + 2], -1.0, 1.0);
          ang.push_back(std::acos(z));
          ang.push_back(std::atan2(pts[3 * k + 1], pts[3 * k]));
        }
        // ang = (theta_1, phi_1, theta_2, phi_2, ...); phi_1 is pinned.
        const double phi1 = n > 1 ? ang[1] : 0.0;
        for (std::size_t i = 0; i < ang.size(); ++i) {
          if (i != 1) x.push_back(ang[i]);
        }
        build = [phi1, n, w](const std::vector<double>& v) {
          std::vector<double> flat{0.0, 0.0, 1.0};
          std::size_t i = 0;
          for (std::size_t k = 1; k < n; ++k) {
            const double theta = v[i++];
            const double phi = k == 1 ? phi1 : v[i++];
            const auto p = detail::sphere_point(theta, phi);
            flat.insert(flat.end(), p.begin(), p.end());
          }
          return ChargeConfiguration(3, flat, w);
        };
      }

      if (x.empty()) {
        const auto r = eval(cfg);
        Iterate it{iter++, s, cfg, r.value, r.error};
        trace.iterates.push_back(it);
        consider_best(it);
        stops.push_back("converged");
        break;
      }

      // Results are remembered so the trace can report each iterate's error.
      std::vector<std::pair<std::vector<double>, QuadratureResult>> memo;
      auto objective = [&](const std::vector<double>& v) {
        auto c = build(v);
        // The functional extends to merged charges; evaluate there.
        if (detail::find_collision(c, opt.collision_tolerance)) c = merge_coincident_config(c, opt.collision_tolerance);
        const auto r = eval(c);
        memo.emplace_back(v, r);
        return r.value;
      };
      std::optional<ChargeConfiguration> merged;
      auto on_best = [&](const std::vector<double>& v, double fv) {
        double err = 0.0;
        for (auto it = memo.rbegin(); it != memo.rend(); ++it) {
          if (it->first == v) {
            err = it->second.error;
            break;
          }
        }
        auto c = build(v);
        const auto hit = detail::find_collision(c, opt.collision_tolerance);
        if (hit) {
          trace.collisions.push_back({iter, s, hit->first, hit->second, c.weight(hit->first) + c.weight(hit->second)});
          c = merge_coincident_config(c, opt.collision_tolerance);
        }
        const bool repeat = !trace.iterates.empty() && trace.iterates.back().start == s &&
                            trace.iterates.back().energy == fv &&
                            trace_coordinates(trace.iterates.back().config) == trace_coordinates(c);
        if (!repeat) {
          Iterate it{iter++, s, c, fv, err};
          trace.iterates.push_back(it);
          consider_best(it);
        }
        if (hit) {
          merged = c;
          throw detail::CollisionStop{};
        }
      };

      std::size_t evals_here = 0;
      detail::SimplexResult res;
      try {
        res = d == 2 ? detail::nelder_mead(objective, x, opt.initial_step, opt.step_tolerance, local_budget,
                                           evals_here, on_best)
                     : detail::pattern_search(objective, x, opt.initial_step, opt.step_tolerance, local_budget,
                                              evals_here, on_best);
      } catch (const detail::CollisionStop&) {
      }
      local_budget -= std::min(local_budget, evals_here);
      if (merged) {
        // Continue from the merged configuration with the remaining budget.
        cfg = *merged;
        w.assign(cfg.weights().begin(), cfg.weights().end());
        if (local_budget > 0) continue;
        stops.push_back("budget");
        break;
      }
      stops.push_back(res.stop);
      break;
    }
  }
  trace.evaluations = eval.used;
  const bool any_budget = std::find(stops.begin(), stops.end(), "budget") != stops.end();
  trace.stop_reason = any_budget || eval.used >= opt.budget ? "budget" : "converged";
  if (stops.size() < starts && trace.stop_reason != "budget") trace.stop_reason = "budget";
  return trace;
}

inline nlohmann::json to_json(const Iterate& it) {
  return {{"iter", it.iter}, {"start", it.start}, {"angles_or_points", trace_coordinates(it.config)},
          {"weights", it.config.weights()}, {"energy", it.energy}, {"err", it.error}};
}

/// One JSON object per line.
inline std::string to_json_lines(const OptimizationTrace& t) {
  std::string out;
  for (const auto& it : t.iterates) out += to_json(it).dump() + '\n';
  return out;
}

inline nlohmann::json summary_json(const OptimizationTrace& t) {
  nlohmann::json j;
  j["method"] = t.method;
  j["seed"] = t.seed;
  j["evaluations"] = t.evaluations;
  j["stop_reason"] = t.stop_reason;
  j["iterates"] = t.iterates.size();
  j["best"] = t.best ? to_json(*t.best) : nlohmann::json(nullptr);
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& c : t.collisions) {
    ev.push_back({{"iter", c.iter}, {"start", c.start}, {"first", c.first}, {"second", c.second},
                  {"merged_weight", c.merged_weight}});
  }
  j["collisions"] = ev;
  return j;
}

// ---------------------------------------------------------------------------

struct CertificateReport {
  double step = 0.0;
  std::vector<double> gradient;
  std::vector<double> gradient_error;
  std::vector<double> second_difference;
  std::vector<double> second_difference_error;
  double max_abs_gradient = 0.0;
  double gradient_error_bar = 0.0;
  double min_second_difference = 0.0;
  double second_difference_error_bar = 0.0;
  bool stationary = false;
  /// "local-minimum", "stationary", "not-stationary" or "inconclusive".
  std::string verdict;
};

/// Central first and second differences of the energy in each angular
/// coordinate: the angle of each charge for d = 2, polar angle and azimuth for
/// d = 3. Error bars are three times the propagated quadrature error.
inline CertificateReport local_min_certificate(const ChargeConfiguration& cfg, double h,
                                               std::optional<QuadratureSpec> spec = std::nullopt) {
  require(cfg.is_positive(), "local_min_certificate: weights must be positive");
  require(h >= 1e-3 && h <= 1e-1, "local_min_certificate: step must lie in [1e-3, 1e-1] rad");
  require(cfg.dimension() == 2 || cfg.dimension() == 3, "local_min_certificate: d must be 2 or 3");
  QuadratureSpec qs = spec.value_or(QuadratureSpec{});
  if (!spec) qs.rel_tolerance = cfg.dimension() == 2 ? 1e-6 : 1e-3;
  qs.validate();

  const int d = cfg.dimension();
  const std::vector<double> w(cfg.weights().begin(), cfg.weights().end());
  std::vector<double> coords;
  std::function<ChargeConfiguration(const std::vector<double>&)> build;
  if (d == 2) {
    coords = trace_coordinates(cfg);
    build = [&w](const std::vector<double>& v) { return angles_config(v, w); };
  } else {
    for (std::size_t k = 0; k < cfg.size(); ++k) {
      const auto p = cfg.position(k);
      coords.push_back(std::acos(std::clamp(p[2], -1.0, 1.0)));
      coords.push_back(std::atan2(p[1], p[0]));
    }
    build = [&w](const std::vector<double>& v) {
      std::vector<double> flat;
      for (std::size_t i = 0; i < v.size(); i += 2) {
        const auto p = detail::sphere_point(v[i], v[i + 1]);
        flat.insert(flat.end(), p.begin(), p.end());
      }
      return ChargeConfiguration(3, flat, w);
    };
  }

  const auto centre = chui_energy(build(coords), qs);
  CertificateReport rep;
  rep.step = h;
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  bool any_inconclusive = false;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    auto up = coords, down = coords;
    up[c] += h;
    down[c] -= h;
    const auto fp = chui_energy(build(up), qs);
    const auto fm = chui_energy(build(down), qs);
    const double g = (fp.value - fm.value) / (2.0 * h);
    const double ge = 3.0 * (fp.error + fm.error) / (2.0 * h);
    const double s2 = (fp.value - 2.0 * centre.value + fm.value) / (h * h);
    const double se = 3.0 * (fp.error + 2.0 * centre.error + fm.error) / (h * h);
    rep.gradient.push_back(g);
    rep.gradient_error.push_back(ge);
    rep.second_difference.push_back(s2);
    rep.second_difference_error.push_back(se);
    if (std::abs(g) >= rep.max_abs_gradient) {
      rep.max_abs_gradient = std::abs(g);
      rep.gradient_error_bar = ge;
    }
    if (s2 < rep.min_second_difference) {
      rep.min_second_difference = s2;
      rep.second_difference_error_bar = se;
    }
    if (std::abs(s2) <= se) any_inconclusive = true;
  }
  rep.stationary = true;
  for (std::size_t c = 0; c < rep.gradient.size(); ++c) {
    if (std::abs(rep.gradient[c]) > rep.gradient_error[c]) rep.stationary = false;
  }
  if (!rep.stationary) {
    rep.verdict = "not-stationary";
  } else if (any_inconclusive) {
    rep.verdict = "inconclusive";
  } else if (rep.min_second_difference > 0.0) {
    rep.verdict = "local-minimum";
  } else {
    rep.verdict = "stationary";
  }
  return rep;
}

inline nlohmann::json to_json(const CertificateReport& r) {
  return {{"step", r.step},
          {"gradient", r.gradient},
          {"gradient_err", r.gradient_error},
          {"second_difference", r.second_difference},
          {"second_difference_err", r.second_difference_error},
          {"max_abs_gradient", r.max_abs_gradient},
          {"gradient_error_bar", r.gradient_error_bar},
          {"min_second_difference", r.min_second_difference},
          {"second_difference_error_bar", r.second_difference_error_bar},
          {"stationary", r.stationary},
          {"verdict", r.verdict}};
}

}  // namespace chui
