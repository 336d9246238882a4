#pragma once

// Lower and upper bounds for the energy, the pointwise inequalities behind
// them, and the verdict logic that compares bounds with computed energies.
//
// The implemented lower-bound constant is the one the tangent-ball argument
// produces. With G = sum alpha^{2/d} and r_k = alpha_k^{2/d} / (2^{d+2} G):
//
//   sum_k m(Q_k) 2^{d-1} G alpha_k^{1-2/d} r_k^{2-d}
//     = sum_k v_d r_k^2 2^{d-1} G alpha_k^{1-2/d}
//     = sum_k v_d 2^{d-1} / 2^{2d+4} * alpha_k^{4/d} alpha_k^{1-2/d} / G
//     = v_d / 2^{d+5} * sum_k alpha_k^{1+2/d} / G,
//
// so c_d = v_d / 2^{d+5}, e.g. c_2 = pi/128 and c_3 = (4 pi/3)/256.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chui/config.hpp"
#include "chui/error.hpp"
#include "chui/field.hpp"
#include "chui/quadrature.hpp"

namespace chui {

struct WeightStats {
  double A = 0.0;  // sum alpha
  double B = 0.0;  // sum alpha^2
  double G = 0.0;  // sum alpha^{2/d}
  double ratio_lower = 0.0;  // sum alpha^{1+2/d} / G
  double ratio_upper = 0.0;  // B / A
};

inline WeightStats weight_stats(std::span<const double> weights, int d) {
  require(d >= 2, "dimension must be at least 2");
  WeightStats s;
  double top = 0.0;
  const double p = 2.0 / d;
  for (double a : weights) {
    require(a > 0.0 && std::isfinite(a), "weights must be positive");
    s.A += a;
    s.B += a * a;
    s.G += std::pow(a, p);
    top += std::pow(a, 1.0 + p);
  }
  s.ratio_lower = top / s.G;
  s.ratio_upper = s.B / s.A;
  return s;
}

struct BoundConstants {
  static constexpr double newman_c = kPi / 18.0;
  static double ball_volume(int d) { return unit_ball_volume(d); }
  static double proof_c(int d) { return unit_ball_volume(d) / std::ldexp(1.0, d + 5); }
};

/// constant * sum alpha^{1+2/d} / sum alpha^{2/d}
inline double lower_bound_rhs(std::span<const double> weights, int d, double constant) {
  require(constant > 0.0, "bound constant must be positive");
  return constant * weight_stats(weights, d).ratio_lower;
}

enum class Verdict { holds, violated, inconclusive, not_applicable };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::not_applicable: return "not-applicable";
  }
  return "unknown";
}

/// Verdict for `lhs <= rhs` given the combined numerical error of both sides.
inline Verdict compare_le(double lhs, double rhs, double combined_error) {
  const double margin = rhs - lhs;
  if (margin >= 3.0 * combined_error) return Verdict::holds;
  if (margin < -3.0 * combined_error) return Verdict::violated;
  return Verdict::inconclusive;
}

// ---------------------------------------------------------------------------
// Tangent-ball geometry.

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool unit_vector(std::span<const double> y) { return std::abs(std::sqrt(dot(y, y)) - 1.0) <= 1e-9; }

/// |x - (1 - r) y|
inline double tangent_ball_offset(std::span<const double> y, double r, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] - (1.0 - r) * y[i];
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Balls Q_k of radius r_k = alpha_k^{2/d} / (2^{d+2} G) tangent from inside
/// at the charges.
class ProofGeometry {
 public:
  explicit ProofGeometry(const ChargeConfiguration& cfg) : cfg_(cfg) {
    require(cfg.is_positive(), "proof geometry needs positive weights");
    require(cfg.all_boundary(), "proof geometry needs charges on the unit sphere");
    const int d = cfg.dimension();
    stats_ = weight_stats(cfg.weights(), d);
    for (double a : cfg.weights()) radii_.push_back(std::pow(a, 2.0 / d) / (std::ldexp(1.0, d + 2) * stats_.G));
  }

  const ChargeConfiguration& config() const noexcept { return cfg_; }
  const WeightStats& stats() const noexcept { return stats_; }
  double radius(std::size_t k) const { return radii_[k]; }
  std::span<const double> radii() const noexcept { return radii_; }

  bool contains(std::size_t k, std::span<const double> x) const {
    return detail::tangent_ball_offset(cfg_.position(k), radii_[k], x) < radii_[k];
  }

  /// E_x = { j : x in Q_j }.
  std::vector<std::size_t> members(std::span<const double> x) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cfg_.size(); ++k) {
      if (contains(k, x)) out.push_back(k);
    }
    return out;
  }

  /// Index in E_x minimizing |x_k - x|^2 / r_k, lowest index among ties.
  std::optional<std::size_t> select(std::span<const double> x) const {
    std::optional<std::size_t> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t k : members(x)) {
      const double dist = detail::distance(cfg_.position(k), x);
      const double v = dist * dist / radii_[k];
      if (v < best_value) {
        best_value = v;
        best = k;
      }
    }
    return best;
  }

 private:
  ChargeConfiguration cfg_;
  WeightStats stats_;
  std::vector<double> radii_;
};

/// <(y - x)/|y - x|^d, x> + 1/(2 |y - x|^{d-2}); nonnegative for |y| = 1, |x| < 1.
inline double lemma1_gap(std::span<const double> y, std::span<const double> x, int d) {
  require(y.size() == static_cast<std::size_t>(d) && x.size() == y.size(), "lemma1_gap: dimension mismatch");
  require(detail::unit_vector(y), "lemma1_gap: y must be a unit vector");
  require(detail::dot(x, x) < 1.0, "lemma1_gap: x must lie in the open ball");
  const double r = detail::distance(y, x);
  if (r < kSingularGuard) throw SingularPointError("lemma1_gap: x coincides with y");
  double inner = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) inner += (y[i] - x[i]) * x[i];
  return inner / std::pow(r, d) + 0.5 / std::pow(r, d - 2);
}

/// lemma1_gap - (1 - r)/(2 r) |y - x|^{2-d} for x in the closed tangent ball
/// of radius r at y; nonnegative.
inline double lemma2_gap(std::span<const double> y, std::span<const double> x, double r, int d) {
  require(r > 0.0 && r < 0.5, "lemma2_gap: radius must lie in (0, 1/2)");
  require(detail::unit_vector(y), "lemma2_gap: y must be a unit vector");
  require(detail::tangent_ball_offset(y, r, x) <= r * (1.0 + 1e-12), "lemma2_gap: x outside the tangent ball");
  const double dist = detail::distance(y, x);
  return lemma1_gap(y, x, d) - (1.0 - r) / (2.0 * r) / std::pow(dist, d - 2);
}

/// |x - y1| / |x - y2| - sqrt((r1/r2) (1 - r2)/(1 - r1)) for x in B1, x not in
/// B2; nonpositive.
inline double lemma3_ratio(std::span<const double> y1, double r1, std::span<const double> y2, double r2,
                           std::span<const double> x) {
  require(r1 > 0.0 && r1 < 0.5 && r2 > 0.0 && r2 < 0.5, "lemma3_ratio: radii must lie in (0, 1/2)");
  require(detail::unit_vector(y1) && detail::unit_vector(y2), "lemma3_ratio: centres must be unit vectors");
  require(detail::tangent_ball_offset(y1, r1, x) < r1, "lemma3_ratio: x must lie in B1");
  require(detail::tangent_ball_offset(y2, r2, x) >= r2, "lemma3_ratio: x must lie outside B2");
  const double d2 = detail::distance(x, y2);
  if (d2 < kSingularGuard) throw SingularPointError("lemma3_ratio: x at y2");
  return detail::distance(x, y1) / d2 - std::sqrt((r1 / r2) * (1.0 - r2) / (1.0 - r1));
}

struct EstarCheck {
  Verdict verdict = Verdict::holds;
  std::size_t selected = 0;
  /// min over j of 2^d a_k^{1-2/d}/|x_k-x|^{d-2} - a_j^{1-2/d}/|x_j-x|^{d-2}, relative.
  double estar_margin = 0.0;
  /// (lhs - rhs) / rhs of the pointwise domination inequality.
  double domination_margin = 0.0;
};

/// Checks the per-pair inequality at the selected index and the resulting
/// pointwise domination  sum_{k in E_x} 2^{d-1} G a_k^{1-2/d}/|x_k-x|^{d-2}
///   >= sum_j a_j / (2 |x_j - x|^{d-2}).
inline EstarCheck estar_check(const ProofGeometry& geo, std::span<const double> x) {
  const auto& cfg = geo.config();
  const int d = cfg.dimension();
  const auto k = geo.select(x);
  if (!k) throw InputError("estar_check: x is not in the union of tangent balls");
  const double p = 1.0 - 2.0 / d;
  auto term = [&](std::size_t j) {
    return std::pow(cfg.weight(j), p) / std::pow(detail::distance(cfg.position(j), x), d - 2);
  };
  EstarCheck out;
  out.selected = *k;
  const double lead = std::ldexp(1.0, d) * term(*k);
  out.estar_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cfg.size(); ++j) {
    out.estar_margin = std::min(out.estar_margin, (lead - term(j)) / lead);
  }
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j : geo.members(x)) lhs += std::ldexp(1.0, d - 1) * geo.stats().G * term(j);
  for (std::size_t j = 0; j < cfg.size(); ++j) {
    rhs += cfg.weight(j) / (2.0 * std::pow(detail::distance(cfg.position(j), x), d - 2));
  }
  out.domination_margin = (lhs - rhs) / rhs;
  const bool ok = out.estar_margin >= -1e-12 && out.domination_margin >= -1e-12;
  out.verdict = ok ? Verdict::holds : Verdict::violated;
  return out;
}

inline EstarCheck estar_check(const ChargeConfiguration& cfg, std::span<const double> x) {
  return estar_check(ProofGeometry(cfg), x);
}

// ---------------------------------------------------------------------------
// Reduction budget for weighted-arc configurations.

struct BudgetResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  /// (l_k, defect(l_k)) for each arc, in arc order.
  std::vector<std::pair<double, double>> defects;
};

/// (A / 2 pi) sum_k l_k defect(l_k). Defects depend on the arc length only, so
/// each distinct length is integrated once on the canonical arc around z = 1.
inline BudgetResult reduction_budget(const ArcPartition& part, std::span<const double> weights,
                                     const QuadratureSpec& spec = {}) {
  require(part.size() == weights.size() && !weights.empty(), "reduction_budget: arcs and weights differ in size");
  const auto stats = weight_stats(weights, 2);
  std::map<double, DefectResult> cache;
  BudgetResult out;
  for (std::size_t k = 0; k < part.size(); ++k) {
    const double l = part.length(k);
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, l1_defect(l, spec)).first;
    const auto& res = it->second.total;
    out.value += l * res.value;
    out.error += l * res.error;
    out.converged = out.converged && res.converged;
    out.defects.emplace_back(l, res.value);
  }
  out.value *= stats.A / (2.0 * kPi);
  out.error *= stats.A / (2.0 * kPi);
  return out;
}

/// Arc partition that reproduces `cfg` as a weighted-arc layout up to a
/// rotation, if any.
inline std::optional<ArcPartition> detect_weighted_arc(const ChargeConfiguration& cfg) {
  if (cfg.dimension() != 2 || !cfg.is_positive() || !cfg.all_boundary()) return std::nullopt;
  auto [ref, part] = weighted_arc_config(cfg.weights());
  const auto turn = cfg.complex_position(0) / ref.complex_position(0);
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    if (std::abs(ref.complex_position(k) * turn - cfg.complex_position(k)) > 1e-9) return std::nullopt;
  }
  const double offset = std::arg(turn);
  for (auto& a : part.arcs) {
    a.begin += offset;
    a.end += offset;
  }
  return part;
}

/// 2 pi sum dist(z_k, T); defined for planar unit-weight configurations only.
inline std::optional<double> lemma41_lhs(const ChargeConfiguration& cfg) {
  require(cfg.dimension() == 2, "lemma41_lhs needs a planar configuration");
  if (!cfg.unit_weights()) return std::nullopt;
  double s = 0.0;
  for (std::size_t k = 0; k < cfg.size(); ++k) s += cfg.is_boundary(k) ? 0.0 : 1.0 - cfg.norm(k);
  return 2.0 * kPi * s;
}

// ---------------------------------------------------------------------------
// Report.

struct BoundReport {
  int dimension = 2;
  std::size_t charges = 0;
  QuadratureResult energy;
  std::optional<WeightStats> stats;
  std::optional<double> lower_newman;
  std::optional<double> lower_theorem11;
  std::optional<BudgetResult> upper_budget;
  std::optional<double> lemma41_lhs;
  /// energy * ||nu|| / B; its infimum over a sweep estimates the Cauchy-transform constant.
  std::optional<double> cauchy_ratio;
  std::map<std::string, Verdict> verdicts;

  bool any_violated() const {
    return std::any_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second == Verdict::violated; });
  }
};

inline BoundReport make_bound_report(const ChargeConfiguration& cfg, const QuadratureSpec& spec = {},
                                     std::optional<ArcPartition> arcs = std::nullopt) {
  BoundReport rep;
  rep.dimension = cfg.dimension();
  rep.charges = cfg.size();
  rep.energy = chui_energy(cfg, spec);
  const double e = rep.energy.value;
  const double err = rep.energy.error;
  const int d = cfg.dimension();
  const bool positive = cfg.is_positive();

  if (positive) {
    rep.stats = weight_stats(cfg.weights(), d);
    if (cfg.all_boundary()) {
      rep.lower_theorem11 = BoundConstants::proof_c(d) * rep.stats->ratio_lower;
      rep.verdicts["theorem11_lower"] = compare_le(*rep.lower_theorem11, e, err);
    } else {
      rep.verdicts["theorem11_lower"] = Verdict::not_applicable;
    }
  } else {
    rep.verdicts["theorem11_lower"] = Verdict::not_applicable;
  }

  if (d == 2 && cfg.unit_weights() && cfg.all_boundary()) {
    rep.lower_newman = BoundConstants::newman_c;
    rep.verdicts["newman_lower"] = compare_le(*rep.lower_newman, e, err);
  } else {
    rep.verdicts["newman_lower"] = Verdict::not_applicable;
  }

  if (d == 2 && positive && cfg.all_boundary()) {
    rep.cauchy_ratio = e * cfg.total_variation() / rep.stats->B;
    rep.verdicts["cauchy_transform_positive"] = compare_le(0.0, e, err);
  } else {
    rep.verdicts["cauchy_transform_positive"] = Verdict::not_applicable;
  }

  if (!arcs && d == 2) arcs = detect_weighted_arc(cfg);
  if (arcs && positive) {
    rep.upper_budget = reduction_budget(*arcs, cfg.weights(), spec);
    rep.verdicts["reduction_upper"] = compare_le(e, rep.upper_budget->value, err + rep.upper_budget->error);
  } else {
    rep.verdicts["reduction_upper"] = Verdict::not_applicable;
  }

  if (d == 2) rep.lemma41_lhs = chui::lemma41_lhs(cfg);
  if (rep.lemma41_lhs) {
    rep.verdicts["lemma41_lower"] = compare_le(*rep.lemma41_lhs, e, err);
  } else {
    rep.verdicts["lemma41_lower"] = Verdict::not_applicable;
  }
  return rep;
}

inline nlohmann::json to_json(const BoundReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["dimension"] = r.dimension;
  j["charges"] = r.charges;
  j["energy"] = r.energy.value;
  j["err"] = r.energy.error;
  j["converged"] = r.energy.converged;
  j["A"] = r.stats ? nlohmann::json(r.stats->A) : nlohmann::json(nullptr);
  j["B"] = r.stats ? nlohmann::json(r.stats->B) : nlohmann::json(nullptr);
  j["G"] = r.stats ? nlohmann::json(r.stats->G) : nlohmann::json(nullptr);
  j["ratio_lower"] = r.stats ? nlohmann::json(r.stats->ratio_lower) : nlohmann::json(nullptr);
  j["ratio_upper"] = r.stats ? nlohmann::json(r.stats->ratio_upper) : nlohmann::json(nullptr);
  j["lower_newman"] = opt(r.lower_newman);
  j["lower_theorem11"] = opt(r.lower_theorem11);
  j["upper_budget"] = r.upper_budget ? nlohmann::json(r.upper_budget->value) : nlohmann::json(nullptr);
  j["upper_budget_err"] = r.upper_budget ? nlohmann::json(r.upper_budget->error) : nlohmann::json(nullptr);
  j["lemma41_lhs"] = opt(r.lemma41_lhs);
  j["cauchy_ratio"] = opt(r.cauchy_ratio);
  nlohmann::json v = nlohmann::json::object();
  for (const auto& [name, verdict] : r.verdicts) v[name] = to_string(verdict);
  j["verdicts"] = v;
  return j;
}

}  // namespace chui
